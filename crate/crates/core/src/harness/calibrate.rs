use log::info;
use serde::Serialize;

use super::compare::RunSummary;
use super::run::run_scenario;
use super::scenario::ScenarioSpec;
use crate::control::CLASSICAL;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CalibrationOptions {
    pub k_min: f64,
    pub k_max: f64,
    /// Accepted distance of the mean nitrite from the target (gN/m³).
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        CalibrationOptions {
            k_min: 1.0,
            k_max: 6.0,
            tolerance: 0.02,
            max_iterations: 40,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Calibration {
    #[serde(rename = "K")]
    pub k: f64,
    pub achieved_mean: f64,
    pub target: f64,
    pub iterations: usize,
    /// Every `(K, mean NO2)` evaluated, in order.
    pub probes: Vec<(f64, f64)>,
}

/// Evaluation-window mean effluent nitrite of the feedforward law at `k`.
pub fn classical_mean_no2(spec: &ScenarioSpec, k: f64) -> Result<f64> {
    let mut s = spec.clone();
    s.control.mode = CLASSICAL.to_string();
    s.control.classical.k = k;
    let r = run_scenario(&s)?;
    Ok(RunSummary::of(&r)?.no2_out.mean)
}

/// Bisection on the feedforward coefficient so that the evaluation-window
/// mean nitrite lands within the tolerance of `target`. Higher K must give
/// lower nitrite across the search range.
pub fn calibrate_classical(spec: &ScenarioSpec, target: f64, opts: &CalibrationOptions) -> Result<Calibration> {
    if !(opts.k_min >= 0.0 && opts.k_max > opts.k_min) {
        return Err(Error::Calibration(format!(
            "invalid search range [{}, {}]",
            opts.k_min, opts.k_max
        )));
    }
    if !(opts.tolerance > 0.0) {
        return Err(Error::Calibration("tolerance must be > 0".into()));
    }
    let mut probes = Vec::new();
    let mut eval = |k: f64| -> Result<f64> {
        let m = classical_mean_no2(spec, k)?;
        info!("K = {k:.5}: mean NO2 = {m:.4}");
        probes.push((k, m));
        Ok(m)
    };
    let (mut lo, mut hi) = (opts.k_min, opts.k_max);
    let (m_lo, m_hi) = (eval(lo)?, eval(hi)?);
    let done = |k: f64, m: f64, iterations: usize, probes: Vec<(f64, f64)>| Calibration {
        k,
        achieved_mean: m,
        target,
        iterations,
        probes,
    };
    if (m_lo - target).abs() <= opts.tolerance {
        return Ok(done(lo, m_lo, 0, probes));
    }
    if (m_hi - target).abs() <= opts.tolerance {
        return Ok(done(hi, m_hi, 0, probes));
    }
    if m_lo < m_hi {
        return Err(Error::Calibration(format!(
            "mean NO2 does not decrease with K over [{lo}, {hi}] ({m_lo:.4} -> {m_hi:.4})"
        )));
    }
    if !(m_lo > target && target > m_hi) {
        return Err(Error::Calibration(format!(
            "target {target} not bracketed: K in [{lo}, {hi}] gives mean NO2 in [{m_hi:.4}, {m_lo:.4}]"
        )));
    }
    for i in 1..=opts.max_iterations {
        let mid = 0.5 * (lo + hi);
        let m = eval(mid)?;
        if (m - target).abs() <= opts.tolerance {
            return Ok(done(mid, m, i, probes));
        }
        if m > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::Calibration(format!(
        "no K within {} of {target} after {} bisections (last bracket [{lo}, {hi}])",
        opts.tolerance, opts.max_iterations
    )))
}
