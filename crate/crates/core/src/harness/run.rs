use std::collections::BTreeSet;
use std::io::Write;

use log::{debug, info};
use serde::Serialize;

use super::scenario::{steps_in, ScenarioSpec};
use crate::biofilter::{EffluentSensor, MassBalance, Plant};
use crate::control::{InletMeasurement, StrategyRegistry};
use crate::error::{Error, Result};

/// Column names of the run time series, in order.
pub const CSV_HEADER: [&str; 13] = [
    "t_d",
    "Q_m3d",
    "NO3_in",
    "NO2_in",
    "NO2_out",
    "NO3_out",
    "u_ff_kgCODd",
    "u_corr_kgCODd",
    "u_total_kgCODd",
    "meoh_kgd",
    "F_hat",
    "mfc_active",
    "backwash",
];

/// COD of methanol (gCOD per g).
pub const METHANOL_COD: f64 = 1.5;

/// One logged sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Row {
    pub t: f64,
    pub q: f64,
    pub no3_in: f64,
    pub no2_in: f64,
    pub no2_out: f64,
    pub no3_out: f64,
    pub u_ff: f64,
    pub u_corr: f64,
    pub u_total: f64,
    pub methanol: f64,
    pub f_hat: Option<f64>,
    pub mfc_active: bool,
    /// A backwash happened at this sample time.
    pub backwash: bool,
}

impl Row {
    pub fn nox_out(&self) -> f64 {
        self.no2_out + self.no3_out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub spec_hash: String,
    pub seed: u64,
    pub version: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunResult {
    pub mode: String,
    pub provenance: Provenance,
    pub warmup: f64,
    pub duration: f64,
    pub dt_sample: f64,
    pub y_set: f64,
    pub rows: Vec<Row>,
    /// Times of the backwashes applied (d).
    pub backwash_times: Vec<f64>,
    pub mass_balance: MassBalance,
}

impl RunResult {
    /// Rows before the end of the warm-up period.
    pub fn is_warmup(&self, row: &Row) -> bool {
        row.t <= self.warmup + 1e-9
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(CSV_HEADER)?;
        for r in &self.rows {
            w.write_record(row_fields(r))?;
        }
        w.flush()?;
        Ok(())
    }
}

pub(crate) fn row_fields(r: &Row) -> [String; 13] {
    [
        r.t.to_string(),
        r.q.to_string(),
        r.no3_in.to_string(),
        r.no2_in.to_string(),
        r.no2_out.to_string(),
        r.no3_out.to_string(),
        r.u_ff.to_string(),
        r.u_corr.to_string(),
        r.u_total.to_string(),
        r.methanol.to_string(),
        r.f_hat.map(|f| f.to_string()).unwrap_or_default(),
        u8::from(r.mfc_active).to_string(),
        u8::from(r.backwash).to_string(),
    ]
}

/// Runs one scenario from a clean plant at t = 0.
///
/// Per integration step, at time `t`: backwash (daily at `t_bw`, from the
/// first day boundary on), sensor sampling, control update, logging, then
/// the plant advances by `dt` with the dose held.
pub fn run_scenario(spec: &ScenarioSpec) -> Result<RunResult> {
    spec.validate()?;
    let plant = Plant::new(spec.plant.clone(), spec.kinetics.clone())?;
    let mut state = plant.init()?;
    let initial = state.inventory(plant.config());
    let influent = spec.influent_source()?;
    let mut strategy = StrategyRegistry::default().build(&spec.control)?;
    let mut sensor = EffluentSensor::new(spec.sensor.clone())?;

    let dt = spec.run.dt;
    let n_steps = steps_in(spec.run.duration, dt).expect("validated");
    let per_sample = steps_in(spec.sensor.dt_sample, dt).expect("validated");
    let per_ctrl = steps_in(spec.control.mfc.dt_ctrl, dt).expect("validated");
    let backwash_steps: BTreeSet<u64> = (0..=spec.run.duration.ceil() as u64)
        .map(|day| ((day as f64 + spec.plant.t_bw) / dt).round())
        .filter(|&k| k > 0.0 && k <= n_steps as f64)
        .map(|k| k as u64)
        .collect();

    info!(
        "running `{}` for {} d: {} steps of {:.3} s",
        strategy.name(),
        spec.run.duration,
        n_steps,
        dt * 86_400.0
    );

    let mut rows = Vec::with_capacity((n_steps / per_sample + 1) as usize);
    let mut backwash_times = Vec::new();
    let mut output = None;
    let mut washed_since_log = false;

    // with an integer number of steps per day, k/n is exact on day and
    // sample boundaries, so the grid does not depend on how dt was written
    let per_day = (1.0 / dt).round();
    let clock = |k: u64| {
        if ((1.0 / dt) - per_day).abs() <= 1e-9 * per_day {
            k as f64 / per_day
        } else {
            k as f64 * dt
        }
    };

    for k in 0..=n_steps {
        let t = clock(k);
        state.t = t;
        if backwash_steps.contains(&k) {
            let removed = plant.backwash(&mut state)?;
            debug!(
                "t = {t:.4}: backwash removed {:.1} kgCOD, film {:.1} .. {:.1} um",
                (removed.x_h + removed.x_i) / 1000.0,
                state.film_thickness(0) * 1e6,
                state.film_thickness(state.n_tanks() - 1) * 1e6
            );
            backwash_times.push(t);
            washed_since_log = true;
        }
        let inlet = influent.at(t);
        let effluent = state.effluent();
        sensor.record(t, &effluent, inlet.q);
        if k % per_sample == 0 {
            sensor.sample(t);
        }
        if k % per_ctrl == 0 {
            let measured = sensor.current().expect("sampled at t = 0");
            let meas_in = InletMeasurement {
                q: inlet.q,
                c_no3_in: inlet.c_no3,
            };
            output = Some(strategy.step(t, &meas_in, &measured)?);
        }
        let out = output.expect("controller runs at t = 0");
        if k % per_sample == 0 {
            rows.push(Row {
                t,
                q: inlet.q,
                no3_in: inlet.c_no3,
                no2_in: inlet.c_no2,
                no2_out: effluent.s_no2,
                no3_out: effluent.s_no3,
                u_ff: out.u_ff,
                u_corr: out.u_corr,
                u_total: out.u_total,
                methanol: out.u_total / METHANOL_COD,
                f_hat: out.f_hat,
                mfc_active: out.mfc_active,
                backwash: washed_since_log,
            });
            washed_since_log = false;
        }
        if k < n_steps {
            plant.step(&mut state, influent.as_ref(), out.u_total, dt)?;
        }
    }

    let mass_balance = state.mass_balance(plant.config(), &initial);
    if mass_balance.nitrogen.relative.abs() > 1e-6 || mass_balance.cod.relative.abs() > 1e-6 {
        log::warn!(
            "mass balance residuals: N {:.3e}, COD {:.3e}",
            mass_balance.nitrogen.relative,
            mass_balance.cod.relative
        );
    }
    if rows.iter().any(|r| !r.no2_out.is_finite()) {
        return Err(Error::NumericalFault {
            t: spec.run.duration,
            detail: "non-finite effluent in log".into(),
        });
    }

    Ok(RunResult {
        mode: spec.control.mode.clone(),
        provenance: Provenance {
            spec_hash: spec.hash(),
            seed: spec.seed(),
            version: env!("CARGO_PKG_VERSION").to_string(),
        },
        warmup: spec.run.warmup,
        duration: spec.run.duration,
        dt_sample: spec.sensor.dt_sample,
        y_set: spec.control.mfc.y_set,
        rows,
        backwash_times,
        mass_balance,
    })
}
