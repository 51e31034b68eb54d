//! Influent forcing: a seeded synthetic generator with intra-day and
//! inter-day nitrate variation, and recorded series loaded from CSV.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Column names of the influent CSV schema, in order.
pub const CSV_COLUMNS: [&str; 5] = ["t_d", "Q_m3d", "NO3_gNm3", "NO2_gNm3", "SS_gCODm3"];

/// Influent conditions at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InfluentState {
    /// Flow (m³/d).
    #[serde(rename = "Q")]
    pub q: f64,
    /// Nitrate (gN/m³).
    #[serde(rename = "C_NO3")]
    pub c_no3: f64,
    /// Nitrite (gN/m³).
    #[serde(rename = "C_NO2")]
    pub c_no2: f64,
    /// Residual soluble COD (gCOD/m³).
    #[serde(rename = "C_SS")]
    pub c_ss: f64,
}

/// Anything that can report the influent at a given time.
pub trait InfluentSource: Send + Sync {
    fn at(&self, t: f64) -> InfluentState;
}

/// Parameters of the synthetic influent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InfluentProfile {
    #[serde(rename = "Q_base")]
    pub q_base: f64,
    #[serde(rename = "NO3_base")]
    pub no3_base: f64,
    /// Diurnal amplitude (gN/m³).
    #[serde(rename = "NO3_amp")]
    pub no3_amp: f64,
    /// Time of day (d) at which the diurnal sinusoid crosses the daily base
    /// on its way up.
    pub phase: f64,
    /// Standard deviation of the day-to-day random walk of the base (gN/m³).
    pub interday_sigma: f64,
    #[serde(rename = "NO2_in")]
    pub no2_in: f64,
    #[serde(rename = "SS_in")]
    pub ss_in: f64,
    pub seed: u64,
}

impl Default for InfluentProfile {
    fn default() -> Self {
        InfluentProfile {
            q_base: 45_000.0,
            no3_base: 15.0,
            no3_amp: 5.0,
            phase: 0.3,
            interday_sigma: 1.5,
            no2_in: 0.5,
            ss_in: 5.0,
            seed: 1,
        }
    }
}

impl InfluentProfile {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("Q_base", self.q_base),
            ("NO3_base", self.no3_base),
            ("NO3_amp", self.no3_amp),
            ("interday_sigma", self.interday_sigma),
            ("NO2_in", self.no2_in),
            ("SS_in", self.ss_in),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::invalid(name, format!("must be finite and >= 0, got {v}")));
            }
        }
        if !self.phase.is_finite() {
            return Err(Error::invalid("phase", "must be finite"));
        }
        let lowest_base = self.no3_base - 3.0 * self.interday_sigma;
        if lowest_base < self.no3_amp {
            return Err(Error::invalid(
                "NO3_amp",
                format!(
                    "lowest daily base {lowest_base} is below the diurnal amplitude {}",
                    self.no3_amp
                ),
            ));
        }
        Ok(())
    }

    /// Daily nitrate bases for days `0..days`.
    pub fn daily_bases(&self, days: usize) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let lo = self.no3_base - 3.0 * self.interday_sigma;
        let hi = self.no3_base + 3.0 * self.interday_sigma;
        let mut bases = Vec::with_capacity(days);
        let mut base = self.no3_base;
        for day in 0..days {
            if day > 0 {
                let z: f64 = StandardNormal.sample(&mut rng);
                base = (base + self.interday_sigma * z).clamp(lo, hi);
            }
            bases.push(base);
        }
        bases
    }

    fn state_from_base(&self, t: f64, base: f64) -> InfluentState {
        let diurnal = self.no3_amp * (2.0 * std::f64::consts::PI * (t - self.phase)).sin();
        InfluentState {
            q: self.q_base,
            c_no3: (base + diurnal).max(0.0),
            c_no2: self.no2_in,
            c_ss: self.ss_in,
        }
    }
}

fn day_index(t: f64) -> usize {
    if t <= 0.0 {
        0
    } else {
        t.floor() as usize
    }
}

/// Synthetic influent at time `t` (d). Pure in `(t, profile)`.
pub fn generate(t: f64, profile: &InfluentProfile) -> InfluentState {
    let day = day_index(t);
    let base = *profile.daily_bases(day + 1).last().expect("at least one day");
    profile.state_from_base(t, base)
}

/// Synthetic influent with the daily bases precomputed over a horizon.
#[derive(Debug, Clone)]
pub struct SyntheticInfluent {
    profile: InfluentProfile,
    bases: Vec<f64>,
}

impl SyntheticInfluent {
    pub fn new(profile: InfluentProfile, horizon_days: f64) -> Self {
        let days = horizon_days.max(0.0).ceil() as usize + 1;
        let bases = profile.daily_bases(days);
        SyntheticInfluent { profile, bases }
    }

    pub fn profile(&self) -> &InfluentProfile {
        &self.profile
    }
}

impl InfluentSource for SyntheticInfluent {
    fn at(&self, t: f64) -> InfluentState {
        match self.bases.get(day_index(t)) {
            Some(&base) => self.profile.state_from_base(t, base),
            None => generate(t, &self.profile),
        }
    }
}

/// Recorded influent, linearly interpolated between rows.
#[derive(Debug, Clone, PartialEq)]
pub struct InfluentSeries {
    times: Vec<f64>,
    rows: Vec<InfluentState>,
}

impl InfluentSeries {
    pub fn new(times: Vec<f64>, rows: Vec<InfluentState>) -> Result<Self> {
        if times.is_empty() || times.len() != rows.len() {
            return Err(Error::Config("influent series needs at least one row".into()));
        }
        if let Some(i) = times.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::Config(format!(
                "influent time column must be strictly increasing (row {})",
                i + 2
            )));
        }
        Ok(InfluentSeries { times, rows })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn rows(&self) -> &[InfluentState] {
        &self.rows
    }
}

impl InfluentSource for InfluentSeries {
    fn at(&self, t: f64) -> InfluentState {
        let n = self.times.len();
        if t <= self.times[0] {
            return self.rows[0];
        }
        if t >= self.times[n - 1] {
            return self.rows[n - 1];
        }
        let hi = self.times.partition_point(|&x| x <= t);
        let lo = hi - 1;
        let w = (t - self.times[lo]) / (self.times[hi] - self.times[lo]);
        let (a, b) = (self.rows[lo], self.rows[hi]);
        let lerp = |x: f64, y: f64| x + w * (y - x);
        InfluentState {
            q: lerp(a.q, b.q),
            c_no3: lerp(a.c_no3, b.c_no3),
            c_no2: lerp(a.c_no2, b.c_no2),
            c_ss: lerp(a.c_ss, b.c_ss),
        }
    }
}

/// Loads an influent CSV (`t_d,Q_m3d,NO3_gNm3,NO2_gNm3,SS_gCODm3`).
///
/// Row numbers in errors count the header as row 1.
pub fn load_timeseries(path: impl AsRef<Path>) -> Result<InfluentSeries> {
    let path = path.as_ref();
    let parse_err = |row: usize, msg: String| Error::Parse {
        path: path.to_path_buf(),
        row,
        msg,
    };

    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let headers = reader.headers()?.clone();
    let mut columns = [0usize; 5];
    for (slot, name) in columns.iter_mut().zip(CSV_COLUMNS) {
        *slot = headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| parse_err(1, format!("missing column `{name}`")))?;
    }

    let mut times = Vec::new();
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 2;
        let record = record.map_err(|e| parse_err(row, e.to_string()))?;
        let mut values = [0.0; 5];
        for (v, (&col, name)) in values.iter_mut().zip(columns.iter().zip(CSV_COLUMNS)) {
            let cell = record
                .get(col)
                .ok_or_else(|| parse_err(row, format!("missing cell `{name}`")))?;
            *v = cell
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| parse_err(row, format!("non-numeric `{name}` value `{cell}`")))?;
        }
        if values[1..].iter().any(|v| *v < 0.0) {
            return Err(parse_err(row, "negative flow or concentration".into()));
        }
        if let Some(&prev) = times.last() {
            if values[0] <= prev {
                return Err(parse_err(
                    row,
                    format!("time {} does not increase past {prev}", values[0]),
                ));
            }
        }
        times.push(values[0]);
        rows.push(InfluentState {
            q: values[1],
            c_no3: values[2],
            c_no2: values[3],
            c_ss: values[4],
        });
    }
    if times.is_empty() {
        return Err(parse_err(2, "no data rows".into()));
    }
    InfluentSeries::new(times, rows)
}

/// Writes influent samples in the CSV schema read by [`load_timeseries`].
pub fn write_timeseries<W: std::io::Write>(
    out: W,
    source: &dyn InfluentSource,
    times: impl IntoIterator<Item = f64>,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_COLUMNS)?;
    for t in times {
        let s = source.at(t);
        w.write_record([t, s.q, s.c_no3, s.c_no2, s.c_ss].map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}
