use serde::Serialize;

use super::run::{row_fields, RunResult, CSV_HEADER};
use super::stats::{summarize_run, SummaryStats, Window};
use crate::error::{Error, Result};

/// Evaluation-window statistics of one run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub mode: String,
    pub spec_hash: String,
    pub seed: u64,
    pub window: Window,
    pub y_set: f64,
    pub no2_out: SummaryStats,
    pub no3_out: SummaryStats,
    pub nox_out: SummaryStats,
    /// kg methanol per day.
    pub methanol: SummaryStats,
}

impl RunSummary {
    pub fn of(r: &RunResult) -> Result<RunSummary> {
        let window = Window::evaluation(r);
        Ok(RunSummary {
            mode: r.mode.clone(),
            spec_hash: r.provenance.spec_hash.clone(),
            seed: r.provenance.seed,
            window,
            y_set: r.y_set,
            no2_out: summarize_run(r, window, |row| row.no2_out)?,
            no3_out: summarize_run(r, window, |row| row.no3_out)?,
            nox_out: summarize_run(r, window, |row| row.nox_out())?,
            methanol: summarize_run(r, window, |row| row.methanol)?,
        })
    }

    /// Mean effluent nitrite minus the setpoint.
    pub fn mean_offset(&self) -> f64 {
        self.no2_out.mean - self.y_set
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub a: RunSummary,
    pub b: RunSummary,
    /// NO2 range of `b` over NO2 range of `a`.
    pub no2_range_ratio: f64,
    /// NOx range of `b` over NOx range of `a`.
    pub nox_range_ratio: f64,
    pub mean_offset_a: f64,
    pub mean_offset_b: f64,
    /// Relative change of mean methanol use from `a` to `b` (%).
    pub methanol_delta_pct: f64,
}

fn ratio(num: f64, den: f64) -> f64 {
    if num == den {
        1.0
    } else {
        num / den
    }
}

/// Compares two runs over their common evaluation window.
pub fn compare(a: &RunResult, b: &RunResult) -> Result<ComparisonReport> {
    if a.provenance.seed != b.provenance.seed {
        return Err(Error::Mismatch(format!(
            "influent seeds differ ({} vs {})",
            a.provenance.seed, b.provenance.seed
        )));
    }
    let (wa, wb) = (Window::evaluation(a), Window::evaluation(b));
    if wa != wb || a.dt_sample != b.dt_sample {
        return Err(Error::Mismatch(format!(
            "evaluation windows differ (({}, {}] vs ({}, {}])",
            wa.start, wa.end, wb.start, wb.end
        )));
    }
    let (sa, sb) = (RunSummary::of(a)?, RunSummary::of(b)?);
    Ok(ComparisonReport {
        no2_range_ratio: ratio(sb.no2_out.range(), sa.no2_out.range()),
        nox_range_ratio: ratio(sb.nox_out.range(), sa.nox_out.range()),
        mean_offset_a: sa.mean_offset(),
        mean_offset_b: sb.mean_offset(),
        methanol_delta_pct: if sa.methanol.mean == sb.methanol.mean {
            0.0
        } else {
            100.0 * (sb.methanol.mean - sa.methanol.mean) / sa.methanol.mean
        },
        a: sa,
        b: sb,
    })
}

/// Both time series in one file, tagged `a` and `b` in a leading column.
pub fn write_combined_csv<W: std::io::Write>(a: &RunResult, b: &RunResult, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["run"];
    header.extend(CSV_HEADER);
    w.write_record(&header)?;
    for (tag, r) in [("a", a), ("b", b)] {
        for row in &r.rows {
            let mut rec = vec![tag.to_string()];
            rec.extend(row_fields(row));
            w.write_record(&rec)?;
        }
    }
    w.flush()?;
    Ok(())
}
