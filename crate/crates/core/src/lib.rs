//! Post-denitrification biofilter simulator with feedforward and model-free
//! methanol dosing.
//!
//! - [`kinetics`]: two-step denitrification rates and stoichiometry.
//! - [`biofilter`]: tanks in series over a layered biofilm, backwash, sensor.
//! - [`control`]: dosing laws and the strategy registry.
//! - [`influent`]: synthetic and recorded influent.
//! - [`harness`]: scenario runs, statistics, comparison and calibration.

pub mod biofilter;
pub mod control;
pub mod error;
pub mod harness;
pub mod influent;
pub mod kinetics;

pub use error::{Error, Result};
