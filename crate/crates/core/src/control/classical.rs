use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Feedforward dosing law parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassicalConfig {
    /// Exploitation coefficient: gCOD dosed per gN to remove.
    #[serde(rename = "K")]
    pub k: f64,
    /// Effluent nitrate setpoint (gN/m³).
    #[serde(rename = "C_NO3_set")]
    pub c_no3_set: f64,
}

impl Default for ClassicalConfig {
    fn default() -> Self {
        ClassicalConfig {
            k: 3.0,
            c_no3_set: 2.0,
        }
    }
}

impl ClassicalConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.k.is_finite() && self.k >= 0.0) {
            return Err(Error::invalid("K", format!("must be finite and >= 0, got {}", self.k)));
        }
        if !(self.c_no3_set.is_finite() && self.c_no3_set >= 0.0) {
            return Err(Error::invalid("C_NO3_set", "must be finite and >= 0"));
        }
        Ok(())
    }
}

/// Methanol dose (kgCOD/d) proportional to the nitrate flux to remove.
///
/// `q` in m³/d, `c_no3_in` in gN/m³.
pub fn classical_dose(q: f64, c_no3_in: f64, cfg: &ClassicalConfig) -> f64 {
    cfg.k * q.max(0.0) * (c_no3_in - cfg.c_no3_set).max(0.0) / 1000.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nominal_dose() {
        let u = classical_dose(45_000.0, 15.0, &ClassicalConfig::default());
        assert!((u - 1755.0).abs() < 1e-9);
        // 1.5 gCOD per g methanol
        assert!((u / 1.5 - 1170.0).abs() < 1e-9);
    }

    #[test]
    fn no_dose_below_setpoint_or_without_coefficient() {
        let cfg = ClassicalConfig::default();
        assert_eq!(classical_dose(45_000.0, 2.0, &cfg), 0.0);
        assert_eq!(classical_dose(45_000.0, 1.0, &cfg), 0.0);
        let zero = ClassicalConfig { k: 0.0, ..cfg };
        assert_eq!(classical_dose(45_000.0, 15.0, &zero), 0.0);
    }
}
