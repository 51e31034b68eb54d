use serde::{Deserialize, Serialize};

use super::run::{Row, RunResult};
use crate::error::{Error, Result};

/// Time window `(start, end]` in days.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub start: f64,
    pub end: f64,
}

impl Window {
    /// Everything after the warm-up.
    pub fn evaluation(r: &RunResult) -> Window {
        Window {
            start: r.warmup,
            end: r.duration,
        }
    }

    pub fn contains(&self, t: f64) -> bool {
        let tol = 1e-9;
        t > self.start + tol && t <= self.end + tol
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SummaryStats {
    pub n: usize,
    pub mean: f64,
    pub median: f64,
    pub q25: f64,
    pub q75: f64,
    pub d10: f64,
    pub d90: f64,
    pub min: f64,
    pub max: f64,
    /// Population standard deviation.
    pub std: f64,
}

impl SummaryStats {
    pub fn range(&self) -> f64 {
        self.max - self.min
    }
}

/// Quantile of sorted data by linear interpolation between order statistics
/// at position `p·(n-1)`.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    assert!(n > 0, "quantile of empty data");
    let h = p.clamp(0.0, 1.0) * (n - 1) as f64;
    let lo = h.floor() as usize;
    if lo + 1 >= n {
        return sorted[n - 1];
    }
    let w = h - lo as f64;
    sorted[lo] + w * (sorted[lo + 1] - sorted[lo])
}

/// Statistics of a set of values.
pub fn summarize_values(values: &[f64]) -> Result<SummaryStats> {
    if values.is_empty() {
        return Err(Error::EmptyWindow("no samples in window".into()));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::EmptyWindow("non-finite sample in window".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mean = sorted.iter().sum::<f64>() / n;
    let var = sorted.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    // keep the ordering invariant exact when all values coincide
    let (min, max) = (sorted[0], sorted[sorted.len() - 1]);
    let (mean, var) = if min == max { (min, 0.0) } else { (mean, var) };
    Ok(SummaryStats {
        n: sorted.len(),
        mean,
        median: quantile_sorted(&sorted, 0.5),
        q25: quantile_sorted(&sorted, 0.25),
        q75: quantile_sorted(&sorted, 0.75),
        d10: quantile_sorted(&sorted, 0.1),
        d90: quantile_sorted(&sorted, 0.9),
        min,
        max,
        std: var.sqrt(),
    })
}

/// Statistics of `(t, value)` samples falling in `window`.
pub fn summarize(series: &[(f64, f64)], window: Window) -> Result<SummaryStats> {
    if !(window.end > window.start) {
        return Err(Error::EmptyWindow(format!(
            "window ({}, {}] is empty",
            window.start, window.end
        )));
    }
    let values: Vec<f64> = series
        .iter()
        .filter(|(t, _)| window.contains(*t))
        .map(|&(_, v)| v)
        .collect();
    if values.is_empty() {
        return Err(Error::EmptyWindow(format!(
            "no samples in ({}, {}]",
            window.start, window.end
        )));
    }
    summarize_values(&values)
}

/// Statistics of one logged variable of a run.
pub fn summarize_run(r: &RunResult, window: Window, f: impl Fn(&Row) -> f64) -> Result<SummaryStats> {
    let series: Vec<(f64, f64)> = r.rows.iter().map(|row| (row.t, f(row))).collect();
    summarize(&series, window)
}
