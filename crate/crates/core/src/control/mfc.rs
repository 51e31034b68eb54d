use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Model-free corrector settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MfcConfig {
    /// Derivation order; only 1 is supported.
    pub nu: u32,
    /// Control effectiveness (gN/m³/d per kgCOD/d). Negative: more dose, less nitrite.
    pub alpha: f64,
    /// Proportional gain (1/d).
    #[serde(rename = "K_p")]
    pub k_p: f64,
    /// Estimation window (d).
    #[serde(rename = "T")]
    pub window: f64,
    /// Effluent nitrite setpoint (gN/m³).
    pub y_set: f64,
    /// Setpoint derivative (gN/m³/d).
    pub ydot_set: f64,
    /// Cap on the correction (kgCOD/d).
    pub u_corr_max: f64,
    /// Controller period (d).
    pub dt_ctrl: f64,
}

impl Default for MfcConfig {
    fn default() -> Self {
        MfcConfig {
            nu: 1,
            alpha: -0.01,
            k_p: 24.0,
            window: 0.04,
            y_set: 0.8,
            ydot_set: 0.0,
            u_corr_max: 877.5,
            dt_ctrl: 5.0 / 1440.0,
        }
    }
}

impl MfcConfig {
    pub fn validate(&self) -> Result<()> {
        if self.nu != 1 {
            return Err(Error::invalid("nu", format!("only order 1 is supported, got {}", self.nu)));
        }
        if !(self.alpha.is_finite() && self.alpha != 0.0) {
            return Err(Error::invalid("alpha", "must be finite and non-zero"));
        }
        if !(self.k_p.is_finite() && self.k_p > 0.0) {
            return Err(Error::invalid("K_p", "must be finite and > 0"));
        }
        if !(self.dt_ctrl.is_finite() && self.dt_ctrl > 0.0) {
            return Err(Error::invalid("dt_ctrl", "must be finite and > 0"));
        }
        if !(self.window.is_finite() && self.window >= 2.0 * self.dt_ctrl * (1.0 - 1e-12)) {
            return Err(Error::invalid(
                "T",
                format!("must cover at least two controller periods ({} < 2 x {})", self.window, self.dt_ctrl),
            ));
        }
        if !(self.u_corr_max.is_finite() && self.u_corr_max >= 0.0) {
            return Err(Error::invalid("u_corr_max", "must be finite and >= 0"));
        }
        if !(self.y_set.is_finite() && self.y_set >= 0.0) {
            return Err(Error::invalid("y_set", "must be finite and >= 0"));
        }
        if !self.ydot_set.is_finite() {
            return Err(Error::invalid("ydot_set", "must be finite"));
        }
        Ok(())
    }
}

/// iP control law `u = -(F̂ - ẏ_set + K_p·e)/α`.
pub fn ip_correction(f_hat: f64, e: f64, ydot_set: f64, alpha: f64, k_p: f64) -> Result<f64> {
    if alpha == 0.0 {
        return Err(Error::invalid("alpha", "must be non-zero"));
    }
    Ok(-(f_hat - ydot_set + k_p * e) / alpha)
}

/// Dose split between the feedforward part and the positive, capped correction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DoseSplit {
    pub u_total: f64,
    pub u_corr: f64,
    /// The correction path was open for this step.
    pub active: bool,
}

/// Adds the correction on top of `u_ff` when the effluent is above setpoint
/// and an estimate is available (`u_mfc` is `None` while the estimator warms up).
pub fn combined_dose(u_ff: f64, u_mfc: Option<f64>, y: f64, y_set: f64, u_corr_max: f64) -> DoseSplit {
    let u_ff = u_ff.max(0.0);
    match u_mfc {
        Some(u) if y > y_set => {
            let u_corr = if u.is_nan() { 0.0 } else { u.clamp(0.0, u_corr_max) };
            DoseSplit {
                u_total: u_ff + u_corr,
                u_corr,
                active: true,
            }
        }
        _ => DoseSplit {
            u_total: u_ff,
            u_corr: 0.0,
            active: false,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ip_examples() {
        assert_eq!(ip_correction(0.0, 0.0, 0.0, -0.01, 24.0).unwrap(), 0.0);
        let u = ip_correction(0.2, 0.1, 0.0, -0.01, 2.0).unwrap();
        assert!((u - 40.0).abs() < 1e-9);
        assert!(ip_correction(1.0, 1.0, 0.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn gating_and_clamping() {
        let below = combined_dose(100.0, Some(50.0), 0.7, 0.8, 200.0);
        assert_eq!(below.u_total, 100.0);
        assert!(!below.active);
        let negative = combined_dose(100.0, Some(-5.0), 0.9, 0.8, 200.0);
        assert_eq!(negative.u_corr, 0.0);
        assert_eq!(negative.u_total, 100.0);
        let saturated = combined_dose(100.0, Some(400.0), 0.9, 0.8, 200.0);
        assert_eq!(saturated.u_corr, 200.0);
        assert_eq!(saturated.u_total, 300.0);
        let warming = combined_dose(100.0, None, 2.0, 0.8, 200.0);
        assert_eq!(warming.u_total, 100.0);
    }

    #[test]
    fn config_validation() {
        assert!(MfcConfig::default().validate().is_ok());
        let bad = |f: fn(&mut MfcConfig)| {
            let mut c = MfcConfig::default();
            f(&mut c);
            c.validate().is_err()
        };
        assert!(bad(|c| c.alpha = 0.0));
        assert!(bad(|c| c.k_p = 0.0));
        assert!(bad(|c| c.window = c.dt_ctrl));
        assert!(bad(|c| c.u_corr_max = -1.0));
        assert!(bad(|c| c.nu = 2));
    }

    proptest! {
        #[test]
        fn dose_is_non_negative_and_correction_bounded(
            u_ff in -10.0f64..5000.0,
            u_mfc in proptest::option::of(-1e6f64..1e6),
            y in 0.0f64..5.0,
            cap in 0.0f64..2000.0,
        ) {
            let d = combined_dose(u_ff, u_mfc, y, 0.8, cap);
            prop_assert!(d.u_total >= 0.0);
            prop_assert!(d.u_corr >= 0.0 && d.u_corr <= cap);
        }

        #[test]
        fn scale_coherence(
            f in -10.0f64..10.0,
            e in -2.0f64..2.0,
            alpha in prop_oneof![-1.0f64..-1e-3, 1e-3f64..1.0],
            kp in 0.1f64..100.0,
            c in 0.1f64..10.0,
        ) {
            // u·α only depends on F̂ and K_p·e
            let a = ip_correction(f, e, 0.0, alpha, kp).unwrap();
            let b = ip_correction(c * f, e, 0.0, c * alpha, c * kp).unwrap();
            prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
            let halved = ip_correction(f / 2.0, e, 0.0, 2.0 * alpha, kp / 2.0).unwrap();
            prop_assert!((2.0 * halved * 2.0 * alpha - a * alpha).abs() <= 1e-9 * (a * alpha).abs().max(1.0));
        }
    }
}
