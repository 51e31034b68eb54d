//! Scenario runs, evaluation-window statistics, strategy comparison and
//! calibration of the feedforward coefficient.

mod calibrate;
mod compare;
mod run;
mod scenario;
mod stats;

pub use calibrate::{calibrate_classical, classical_mean_no2, Calibration, CalibrationOptions};
pub use compare::{compare, write_combined_csv, ComparisonReport, RunSummary};
pub use run::{run_scenario, Provenance, Row, RunResult, CSV_HEADER, METHANOL_COD};
pub use scenario::{InfluentConfig, OutputPaths, RunConfig, ScenarioSpec};
pub use stats::{quantile_sorted, summarize, summarize_run, summarize_values, SummaryStats, Window};
