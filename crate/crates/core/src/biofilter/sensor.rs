//! Effluent analyser: pure delay, seeded Gaussian noise and zero-order hold.

use std::collections::VecDeque;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinetics::Components;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SensorModel {
    /// Sampling period (d).
    pub dt_sample: f64,
    /// Transport and analyser delay (d).
    pub lag: f64,
    /// Noise standard deviation (gN/m³).
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for SensorModel {
    fn default() -> Self {
        SensorModel {
            dt_sample: 5.0 / 1440.0,
            lag: 0.0,
            noise_sigma: 0.0,
            seed: 7,
        }
    }
}

impl SensorModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt_sample > 0.0 && self.dt_sample.is_finite()) {
            return Err(Error::invalid("dt_sample", "must be finite and > 0"));
        }
        if !(self.lag >= 0.0 && self.lag.is_finite()) {
            return Err(Error::invalid("lag", "must be finite and >= 0"));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::invalid("noise_sigma", "must be finite and >= 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum MeasurementStatus {
    Ok,
    /// History does not reach back to `t - lag`; the oldest value was used.
    InsufficientHistory,
    /// No usable value.
    Fault,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Measurement {
    /// Effluent nitrite (gN/m³).
    pub no2_out: f64,
    /// Effluent nitrate (gN/m³).
    pub no3_out: f64,
    /// Flow (m³/d).
    pub q: f64,
    pub status: MeasurementStatus,
}

#[derive(Debug, Clone, Copy)]
struct Record {
    t: f64,
    no2: f64,
    no3: f64,
    q: f64,
}

/// Samples the last tank through the configured sensor model.
#[derive(Debug, Clone)]
pub struct EffluentSensor {
    model: SensorModel,
    history: VecDeque<Record>,
    rng: ChaCha8Rng,
    held: Option<Measurement>,
}

impl EffluentSensor {
    pub fn new(model: SensorModel) -> Result<Self> {
        model.validate()?;
        Ok(EffluentSensor {
            rng: ChaCha8Rng::seed_from_u64(model.seed),
            model,
            history: VecDeque::new(),
            held: None,
        })
    }

    pub fn model(&self) -> &SensorModel {
        &self.model
    }

    /// Stores the true effluent at time `t`. Times must not decrease.
    pub fn record(&mut self, t: f64, effluent: &Components, q: f64) {
        if let Some(last) = self.history.back() {
            if t <= last.t {
                self.history.pop_back();
            }
        }
        self.history.push_back(Record {
            t,
            no2: effluent.s_no2,
            no3: effluent.s_no3,
            q,
        });
        // keep one record at or before the oldest time still needed
        let horizon = t - self.model.lag;
        while self.history.len() > 2 && self.history[1].t <= horizon {
            self.history.pop_front();
        }
    }

    fn delayed(&self, t: f64) -> Option<(Record, MeasurementStatus)> {
        let target = t - self.model.lag;
        let first = *self.history.front()?;
        if target < first.t {
            return Some((first, MeasurementStatus::InsufficientHistory));
        }
        let idx = self.history.partition_point(|r| r.t <= target);
        let lo = self.history[idx - 1];
        if idx == self.history.len() || lo.t == target {
            return Some((lo, MeasurementStatus::Ok));
        }
        let hi = self.history[idx];
        let w = (target - lo.t) / (hi.t - lo.t);
        let lerp = |a: f64, b: f64| a + w * (b - a);
        Some((
            Record {
                t: target,
                no2: lerp(lo.no2, hi.no2),
                no3: lerp(lo.no3, hi.no3),
                q: lerp(lo.q, hi.q),
            },
            MeasurementStatus::Ok,
        ))
    }

    /// Takes a new sample at `t` and holds it until the next call.
    pub fn sample(&mut self, t: f64) -> Measurement {
        let m = match self.delayed(t) {
            Some((r, status)) => {
                let (mut no2, mut no3) = (r.no2, r.no3);
                if self.model.noise_sigma > 0.0 {
                    let z1: f64 = StandardNormal.sample(&mut self.rng);
                    let z2: f64 = StandardNormal.sample(&mut self.rng);
                    no2 = (no2 + self.model.noise_sigma * z1).max(0.0);
                    no3 = (no3 + self.model.noise_sigma * z2).max(0.0);
                }
                let status = if no2.is_finite() && no3.is_finite() {
                    status
                } else {
                    MeasurementStatus::Fault
                };
                Measurement {
                    no2_out: no2,
                    no3_out: no3,
                    q: r.q,
                    status,
                }
            }
            None => Measurement {
                no2_out: f64::NAN,
                no3_out: f64::NAN,
                q: f64::NAN,
                status: MeasurementStatus::Fault,
            },
        };
        self.held = Some(m);
        m
    }

    /// Last sampled value (zero-order hold).
    pub fn current(&self) -> Option<Measurement> {
        self.held
    }
}

/// One-shot measurement of `effluent` through `sensor` at time `t`.
pub fn effluent_measurement(
    sensor: &mut EffluentSensor,
    t: f64,
    effluent: &Components,
    q: f64,
) -> Measurement {
    sensor.record(t, effluent, q);
    sensor.sample(t)
}
