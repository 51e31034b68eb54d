//! Methanol dosing: the feedforward law on inlet nitrate and the model-free
//! iP correction on effluent nitrite, selectable by name at runtime.

mod classical;
mod controller;
mod estimator;
mod mfc;
mod strategy;

pub use classical::{classical_dose, ClassicalConfig};
pub use controller::{controller_step, ControlOutput, ControllerState, InletMeasurement};
pub use estimator::{estimate_f, EstimatorBuffer, EstimatorSample};
pub use mfc::{combined_dose, ip_correction, DoseSplit, MfcConfig};
pub use strategy::{
    ClassicalStrategy, ControlConfig, DosingStrategy, ModelFreeStrategy, StrategyFactory, StrategyRegistry,
    CLASSICAL, CLASSICAL_MFC,
};
