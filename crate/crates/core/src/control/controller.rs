use serde::Serialize;

use super::classical::{classical_dose, ClassicalConfig};
use super::estimator::{estimate_f, EstimatorBuffer};
use super::mfc::{combined_dose, ip_correction, MfcConfig};
use crate::biofilter::{Measurement, MeasurementStatus};
use crate::error::Result;

/// Inlet measurements used by the feedforward law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InletMeasurement {
    /// m³/d
    pub q: f64,
    /// gN/m³
    pub c_no3_in: f64,
}

/// Everything the controller emitted at one call.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ControlOutput {
    pub u_ff: f64,
    pub u_corr: f64,
    pub u_total: f64,
    pub f_hat: Option<f64>,
    pub mfc_active: bool,
    /// Output held from the previous call after a sensor fault.
    pub held: bool,
}

impl ControlOutput {
    pub const IDLE: ControlOutput = ControlOutput {
        u_ff: 0.0,
        u_corr: 0.0,
        u_total: 0.0,
        f_hat: None,
        mfc_active: false,
        held: false,
    };
}

#[derive(Debug, Clone, Serialize)]
pub struct ControllerState {
    pub classical: ClassicalConfig,
    pub mfc: MfcConfig,
    pub buffer: EstimatorBuffer,
    pub mfc_enabled: bool,
    pub mfc_active: bool,
    pub last: ControlOutput,
    started: bool,
}

impl ControllerState {
    pub fn new(classical: ClassicalConfig, mfc: MfcConfig, mfc_enabled: bool) -> Result<Self> {
        classical.validate()?;
        if mfc_enabled {
            mfc.validate()?;
        }
        Ok(ControllerState {
            buffer: EstimatorBuffer::new(mfc.window),
            classical,
            mfc,
            mfc_enabled,
            mfc_active: false,
            last: ControlOutput::IDLE,
            started: false,
        })
    }

    pub fn last_u_total(&self) -> f64 {
        self.last.u_total
    }
}

/// One controller period: feedforward dose, estimator update, iP
/// correction and gating. A faulty outlet measurement holds the previous output.
pub fn controller_step(
    cs: &mut ControllerState,
    inlet: &InletMeasurement,
    outlet: &Measurement,
    t: f64,
) -> Result<ControlOutput> {
    let u_ff = classical_dose(inlet.q, inlet.c_no3_in, &cs.classical);
    let faulty = outlet.status == MeasurementStatus::Fault || !outlet.no2_out.is_finite();

    if faulty {
        let out = if cs.started {
            ControlOutput { held: true, ..cs.last }
        } else {
            ControlOutput {
                u_ff,
                u_total: u_ff,
                held: true,
                ..ControlOutput::IDLE
            }
        };
        cs.mfc_active = out.mfc_active;
        cs.last = out;
        cs.started = true;
        return Ok(out);
    }

    let out = if cs.mfc_enabled {
        let y = outlet.no2_out;
        // the buffer pairs each output with the correction applied up to it
        cs.buffer.push(t, y, cs.last.u_corr)?;
        let f_hat = estimate_f(&cs.buffer, cs.mfc.alpha, cs.mfc.window, t);
        let u_mfc = match f_hat {
            Some(f) => Some(ip_correction(f, y - cs.mfc.y_set, cs.mfc.ydot_set, cs.mfc.alpha, cs.mfc.k_p)?),
            None => None,
        };
        let split = combined_dose(u_ff, u_mfc, y, cs.mfc.y_set, cs.mfc.u_corr_max);
        ControlOutput {
            u_ff,
            u_corr: split.u_corr,
            u_total: split.u_total,
            f_hat,
            mfc_active: split.active,
            held: false,
        }
    } else {
        ControlOutput {
            u_ff,
            u_total: u_ff,
            ..ControlOutput::IDLE
        }
    };
    cs.mfc_active = out.mfc_active;
    cs.last = out;
    cs.started = true;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const DT: f64 = 5.0 / 1440.0;

    fn ok(no2: f64) -> Measurement {
        Measurement {
            no2_out: no2,
            no3_out: 2.0,
            q: 45_000.0,
            status: MeasurementStatus::Ok,
        }
    }

    fn inlet(c: f64) -> InletMeasurement {
        InletMeasurement { q: 45_000.0, c_no3_in: c }
    }

    #[test]
    fn disabled_mfc_is_pure_feedforward() {
        let mut cs = ControllerState::new(ClassicalConfig::default(), MfcConfig::default(), false).unwrap();
        for i in 0..100 {
            let c = 10.0 + (i as f64 * 0.3).sin() * 4.0;
            let out = controller_step(&mut cs, &inlet(c), &ok(1.0 + 0.01 * i as f64), i as f64 * DT).unwrap();
            assert_eq!(out.u_total, classical_dose(45_000.0, c, &ClassicalConfig::default()));
        }
    }

    #[test]
    fn warm_up_emits_feedforward_only() {
        let mfc = MfcConfig::default();
        let mut cs = ControllerState::new(ClassicalConfig::default(), mfc.clone(), true).unwrap();
        let mut i = 0;
        while (i as f64) * DT < mfc.window - 1e-9 {
            let out = controller_step(&mut cs, &inlet(15.0), &ok(1.5), i as f64 * DT).unwrap();
            assert_eq!(out.u_total, out.u_ff);
            assert!(out.f_hat.is_none());
            i += 1;
        }
        let out = controller_step(&mut cs, &inlet(15.0), &ok(1.5), i as f64 * DT).unwrap();
        assert!(out.f_hat.is_some());
    }

    #[test]
    fn pinned_above_setpoint_gives_positive_correction() {
        let mfc = MfcConfig::default();
        let mut cs = ControllerState::new(ClassicalConfig::default(), mfc.clone(), true).unwrap();
        for i in 0..200 {
            let out = controller_step(&mut cs, &inlet(15.0), &ok(mfc.y_set + 0.1), i as f64 * DT).unwrap();
            if out.f_hat.is_some() {
                assert!(out.u_corr > 0.0, "step {i}: {out:?}");
            }
        }
    }

    #[test]
    fn gating_matches_classical_bitwise() {
        let mut with = ControllerState::new(ClassicalConfig::default(), MfcConfig::default(), true).unwrap();
        let mut without = ControllerState::new(ClassicalConfig::default(), MfcConfig::default(), false).unwrap();
        for i in 0..400 {
            let t = i as f64 * DT;
            let y = 0.8 + 0.3 * (i as f64 * 0.05).sin();
            let c = 15.0 + 5.0 * (t * std::f64::consts::TAU).sin();
            let a = controller_step(&mut with, &inlet(c), &ok(y), t).unwrap();
            let b = controller_step(&mut without, &inlet(c), &ok(y), t).unwrap();
            if y <= 0.8 {
                assert_eq!(a.u_total.to_bits(), b.u_total.to_bits());
            }
        }
    }

    #[test]
    fn sensor_fault_holds_output() {
        let mut cs = ControllerState::new(ClassicalConfig::default(), MfcConfig::default(), true).unwrap();
        let first = controller_step(&mut cs, &inlet(15.0), &ok(1.0), 0.0).unwrap();
        let fault = Measurement {
            status: MeasurementStatus::Fault,
            ..ok(f64::NAN)
        };
        let held = controller_step(&mut cs, &inlet(9.0), &fault, DT).unwrap();
        assert_eq!(held.u_total, first.u_total);
        assert!(held.held);
    }
}
