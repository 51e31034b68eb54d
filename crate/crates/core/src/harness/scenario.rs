use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::biofilter::{BiofilterConfig, SensorModel};
use crate::control::{ControlConfig, StrategyRegistry};
use crate::error::{Error, Result};
use crate::influent::{load_timeseries, InfluentProfile, InfluentSource, SyntheticInfluent};
use crate::kinetics::KineticParams;

/// Influent section: the synthetic profile, or a recorded CSV series when
/// `csv` is set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct InfluentConfig {
    #[serde(flatten)]
    pub profile: InfluentProfile,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct OutputPaths {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub summary: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    /// Simulated time (d).
    pub duration: f64,
    /// Leading period excluded from statistics (d).
    pub warmup: f64,
    /// Integration step (d).
    pub dt: f64,
    /// Overrides the influent seed when set.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub output: OutputPaths,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            duration: 10.0,
            warmup: 5.0,
            dt: 1.0 / 86_400.0,
            seed: None,
            output: OutputPaths::default(),
        }
    }
}

/// Everything needed to reproduce one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct ScenarioSpec {
    pub plant: BiofilterConfig,
    pub kinetics: KineticParams,
    pub influent: InfluentConfig,
    pub control: ControlConfig,
    pub run: RunConfig,
    pub sensor: SensorModel,
}

/// Integer number of `dt` steps in `period`, if `dt` divides it.
pub(crate) fn steps_in(period: f64, dt: f64) -> Option<u64> {
    let r = period / dt;
    let n = r.round();
    if n >= 1.0 && (r - n).abs() <= 1e-6 * n.max(1.0) {
        Some(n as u64)
    } else {
        None
    }
}

impl ScenarioSpec {
    /// Parses a JSON scenario; relative paths are resolved against `base`.
    pub fn from_json(text: &str, base: Option<&Path>) -> Result<Self> {
        let mut spec: ScenarioSpec =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("scenario JSON: {e}")))?;
        if let Some(base) = base {
            let resolve = |p: &mut Option<PathBuf>| {
                if let Some(path) = p.as_mut() {
                    if path.is_relative() {
                        *path = base.join(&*path);
                    }
                }
            };
            resolve(&mut spec.influent.csv);
            resolve(&mut spec.run.output.csv);
            resolve(&mut spec.run.output.summary);
        }
        Ok(spec)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text, path.parent())
    }

    /// Influent seed actually used by the run.
    pub fn seed(&self) -> u64 {
        self.run.seed.unwrap_or(self.influent.profile.seed)
    }

    pub fn influent_profile(&self) -> InfluentProfile {
        InfluentProfile {
            seed: self.seed(),
            ..self.influent.profile.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.plant.validate()?;
        self.kinetics.validate()?;
        self.control.classical.validate()?;
        self.control.mfc.validate()?;
        self.sensor.validate()?;
        if self.influent.csv.is_none() {
            self.influent_profile().validate()?;
        }
        if !StrategyRegistry::default().contains(&self.control.mode) {
            return Err(Error::UnknownStrategy(self.control.mode.clone()));
        }
        let run = &self.run;
        if !(run.duration.is_finite() && run.duration > 0.0) {
            return Err(Error::invalid("run.duration", "must be finite and > 0"));
        }
        if !(run.warmup >= 0.0 && run.warmup < run.duration) {
            return Err(Error::invalid("run.warmup", "must satisfy 0 <= warmup < duration"));
        }
        if !(run.dt.is_finite() && run.dt > 0.0) {
            return Err(Error::invalid("run.dt", "must be finite and > 0"));
        }
        for (name, period) in [
            ("sensor.dt_sample", self.sensor.dt_sample),
            ("control.mfc.dt_ctrl", self.control.mfc.dt_ctrl),
        ] {
            if steps_in(period, run.dt).is_none() {
                return Err(Error::invalid(
                    "run.dt",
                    format!("must divide {name} = {period} d exactly"),
                ));
            }
        }
        if steps_in(run.duration, run.dt).is_none() {
            return Err(Error::invalid("run.dt", "must divide run.duration exactly"));
        }
        Ok(())
    }

    pub fn influent_source(&self) -> Result<Box<dyn InfluentSource>> {
        match &self.influent.csv {
            Some(path) => Ok(Box::new(load_timeseries(path)?)),
            None => Ok(Box::new(SyntheticInfluent::new(self.influent_profile(), self.run.duration))),
        }
    }

    /// SHA-256 of the canonical JSON serialisation (output paths excluded).
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.run.output = OutputPaths::default();
        canonical.run.seed = Some(self.seed());
        let json = serde_json::to_string(&canonical).expect("scenario serialises");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_defaults() {
        let s = ScenarioSpec::from_json("{}", None).unwrap();
        assert_eq!(s, ScenarioSpec::default());
        s.validate().unwrap();
    }

    #[test]
    fn sections_use_documented_keys() {
        let json = r#"{
            "plant": {"V_total": 3000.0, "n_tanks": 4},
            "kinetics": {"mu_H": 5.0},
            "influent": {"NO3_base": 12.0, "seed": 9},
            "control": {"mode": "classical", "classical": {"K": 2.5}, "mfc": {"K_p": 12.0}},
            "run": {"duration": 2.0, "warmup": 1.0},
            "sensor": {"noise_sigma": 0.01}
        }"#;
        let s = ScenarioSpec::from_json(json, None).unwrap();
        assert_eq!(s.plant.v_total, 3000.0);
        assert_eq!(s.plant.n_tanks, 4);
        assert_eq!(s.kinetics.mu_h, 5.0);
        assert_eq!(s.influent.profile.no3_base, 12.0);
        assert_eq!(s.seed(), 9);
        assert_eq!(s.control.mode, "classical");
        assert_eq!(s.control.classical.k, 2.5);
        assert_eq!(s.control.mfc.k_p, 12.0);
        assert_eq!(s.run.duration, 2.0);
        assert_eq!(s.sensor.noise_sigma, 0.01);
    }

    #[test]
    fn run_seed_overrides_profile_seed() {
        let s = ScenarioSpec::from_json(r#"{"influent": {"seed": 3}, "run": {"seed": 11}}"#, None).unwrap();
        assert_eq!(s.seed(), 11);
        assert_eq!(s.influent_profile().seed, 11);
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let bad = |f: fn(&mut ScenarioSpec)| {
            let mut s = ScenarioSpec::default();
            f(&mut s);
            s.validate().is_err()
        };
        assert!(bad(|s| s.run.warmup = 10.0));
        assert!(bad(|s| s.run.dt = 7.0 / 86_400.0));
        assert!(bad(|s| s.control.mode = "pid".into()));
        assert!(bad(|s| s.kinetics.i_xb = 0.07));
        assert!(bad(|s| s.control.mfc.alpha = 0.0));
        assert!(ScenarioSpec::from_json("{\"run\": 3}", None).is_err());
    }

    #[test]
    fn relative_paths_follow_the_config() {
        let s = ScenarioSpec::from_json(
            r#"{"influent": {"csv": "inf.csv"}, "run": {"output": {"csv": "/abs/out.csv"}}}"#,
            Some(Path::new("/cfg")),
        )
        .unwrap();
        assert_eq!(s.influent.csv.unwrap(), PathBuf::from("/cfg/inf.csv"));
        assert_eq!(s.run.output.csv.unwrap(), PathBuf::from("/abs/out.csv"));
    }

    #[test]
    fn hash_ignores_output_paths_but_not_parameters() {
        let a = ScenarioSpec::default();
        let mut b = a.clone();
        b.run.output.csv = Some("x.csv".into());
        assert_eq!(a.hash(), b.hash());
        b.control.classical.k = 3.1;
        assert_ne!(a.hash(), b.hash());
    }
}
