use serde::Serialize;

use super::config::{BiofilterConfig, Inoculum};
use super::integrator::Rk4Work;
use crate::error::{Error, Result};
use crate::kinetics::{cod_weights, nitrogen_weights, Components, N_COMPONENTS, X_H, X_I};

/// Number of cumulative flux accumulators carried after the tank blocks:
/// inflow and outflow mass of every component (g).
pub(crate) const N_ACCUMULATORS: usize = 2 * N_COMPONENTS;

/// Index arithmetic for the flat state vector.
///
/// Each tank owns a block of `N_COMPONENTS` bulk concentrations (g/m³)
/// followed by `n_layers` groups of `N_COMPONENTS` film masses per unit of
/// support area (g/m²), substratum first. Inflow and outflow accumulators
/// sit after the last tank.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Layout {
    pub n_tanks: usize,
    pub n_layers: usize,
}

impl Layout {
    pub fn block(&self) -> usize {
        N_COMPONENTS * (1 + self.n_layers)
    }

    pub fn bulk(&self, tank: usize) -> usize {
        tank * self.block()
    }

    pub fn layer(&self, tank: usize, layer: usize) -> usize {
        tank * self.block() + N_COMPONENTS * (1 + layer)
    }

    pub fn accumulators(&self) -> usize {
        self.n_tanks * self.block()
    }

    pub fn len(&self) -> usize {
        self.accumulators() + N_ACCUMULATORS
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Film bookkeeping constants copied from the configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FilmGeometry {
    pub rho_f: f64,
    pub l_min: f64,
    pub n_layers: usize,
}

impl FilmGeometry {
    /// Total thickness implied by the particulate masses of one tank.
    ///
    /// A film lighter than a compact `l_min` layer keeps the floor thickness
    /// at reduced density.
    pub fn thickness(&self, particulate_mass: f64) -> f64 {
        (particulate_mass / self.rho_f).max(self.l_min)
    }

    pub fn is_compact(&self, particulate_mass: f64) -> bool {
        particulate_mass / self.rho_f > self.l_min
    }
}

/// One biofilm layer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FilmLayer {
    /// Layer thickness (m).
    pub thickness: f64,
    /// Concentrations within the layer (g/m³ of biofilm).
    pub conc: Components,
}

/// Read-only view of one tank.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TankState {
    pub bulk: Components,
    /// Layers from the support outwards.
    pub film_layers: Vec<FilmLayer>,
}

impl TankState {
    pub fn film_thickness(&self) -> f64 {
        self.film_layers.iter().map(|l| l.thickness).sum()
    }
}

/// Masses removed from the plant by backwashing (g).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct SludgeLedger {
    pub removed: Components,
}

impl SludgeLedger {
    pub fn cod(&self) -> f64 {
        self.removed.s_s + self.removed.x_h + self.removed.x_i
    }

    pub fn nitrogen(&self) -> f64 {
        self.removed.s_no3 + self.removed.s_no2 + self.removed.s_n2
    }
}

/// Full plant state.
#[derive(Debug, Clone)]
pub struct PlantState {
    /// Simulation clock (d).
    pub t: f64,
    pub(crate) layout: Layout,
    pub(crate) geometry: FilmGeometry,
    pub(crate) y: Vec<f64>,
    pub sludge: SludgeLedger,
    /// Mass added back by clamping negative truncation values (g).
    pub clamped: Components,
    pub(crate) work: Rk4Work,
}

/// Builds a plant with a uniform biofilm in every tank and clean liquid.
pub fn init_plant(cfg: &BiofilterConfig, inoculum: &Inoculum) -> Result<PlantState> {
    cfg.validate()?;
    if !(inoculum.thickness >= cfg.l_min) {
        return Err(Error::invalid(
            "inoculum.thickness",
            format!(
                "initial film thickness {} m is below the floor L_min = {} m",
                inoculum.thickness, cfg.l_min
            ),
        ));
    }
    if !(0.0..=1.0).contains(&inoculum.xh_fraction) {
        return Err(Error::invalid("inoculum.xh_fraction", "must lie in [0, 1]"));
    }
    let layout = Layout {
        n_tanks: cfg.n_tanks,
        n_layers: cfg.n_layers,
    };
    let geometry = FilmGeometry {
        rho_f: cfg.rho_f,
        l_min: cfg.l_min,
        n_layers: cfg.n_layers,
    };
    let mut y = vec![0.0; layout.len()];
    let h = inoculum.thickness / cfg.n_layers as f64;
    for tank in 0..cfg.n_tanks {
        for layer in 0..cfg.n_layers {
            let o = layout.layer(tank, layer);
            y[o + X_H] = inoculum.xh_fraction * cfg.rho_f * h;
            y[o + X_I] = (1.0 - inoculum.xh_fraction) * cfg.rho_f * h;
        }
    }
    Ok(PlantState {
        t: 0.0,
        layout,
        geometry,
        work: Rk4Work::new(y.len()),
        y,
        sludge: SludgeLedger::default(),
        clamped: Components::ZERO,
    })
}

fn comps(slice: &[f64]) -> Components {
    Components::from_array(std::array::from_fn(|k| slice[k]))
}

impl PlantState {
    pub fn n_tanks(&self) -> usize {
        self.layout.n_tanks
    }

    pub fn n_layers(&self) -> usize {
        self.layout.n_layers
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    /// Raw state vector.
    pub fn as_slice(&self) -> &[f64] {
        &self.y
    }

    pub fn bulk(&self, tank: usize) -> Components {
        let o = self.layout.bulk(tank);
        comps(&self.y[o..o + N_COMPONENTS])
    }

    /// Liquid leaving the last tank.
    pub fn effluent(&self) -> Components {
        self.bulk(self.layout.n_tanks - 1)
    }

    #[cfg(test)]
    pub(crate) fn set_bulk(&mut self, tank: usize, c: Components) {
        let o = self.layout.bulk(tank);
        self.y[o..o + N_COMPONENTS].copy_from_slice(&c.to_array());
    }

    /// Film masses per support area of one layer (g/m²).
    pub fn layer_mass(&self, tank: usize, layer: usize) -> Components {
        let o = self.layout.layer(tank, layer);
        comps(&self.y[o..o + N_COMPONENTS])
    }

    pub(crate) fn particulate_mass(&self, tank: usize) -> f64 {
        (0..self.layout.n_layers)
            .map(|l| {
                let o = self.layout.layer(tank, l);
                self.y[o + X_H] + self.y[o + X_I]
            })
            .sum()
    }

    /// Total film thickness of one tank (m).
    pub fn film_thickness(&self, tank: usize) -> f64 {
        self.geometry.thickness(self.particulate_mass(tank))
    }

    pub fn tank(&self, tank: usize) -> TankState {
        let h = self.film_thickness(tank) / self.layout.n_layers as f64;
        let film_layers = (0..self.layout.n_layers)
            .map(|l| FilmLayer {
                thickness: h,
                conc: self.layer_mass(tank, l) * (1.0 / h),
            })
            .collect();
        TankState {
            bulk: self.bulk(tank),
            film_layers,
        }
    }

    pub fn tanks(&self) -> Vec<TankState> {
        (0..self.layout.n_tanks).map(|i| self.tank(i)).collect()
    }

    /// Mass of every component held in liquid and biofilm (g).
    pub fn inventory(&self, cfg: &BiofilterConfig) -> Components {
        let v_liq = cfg.liquid_volume();
        let area = cfg.film_area();
        let mut total = Components::ZERO;
        for tank in 0..self.layout.n_tanks {
            total = total + self.bulk(tank) * v_liq;
            for l in 0..self.layout.n_layers {
                total = total + self.layer_mass(tank, l) * area;
            }
        }
        total
    }

    /// Cumulative mass that entered with the influent and the dose (g).
    pub fn cumulative_inflow(&self) -> Components {
        let o = self.layout.accumulators();
        comps(&self.y[o..o + N_COMPONENTS])
    }

    /// Cumulative mass that left with the effluent (g).
    pub fn cumulative_outflow(&self) -> Components {
        let o = self.layout.accumulators() + N_COMPONENTS;
        comps(&self.y[o..o + N_COMPONENTS])
    }

    /// Whole-plant balances since initialisation.
    pub fn mass_balance(&self, cfg: &BiofilterConfig, initial: &Components) -> MassBalance {
        let stored = self.inventory(cfg);
        let inflow = self.cumulative_inflow();
        let outflow = self.cumulative_outflow();
        let cod = cod_weights();
        let n = nitrogen_weights(0.0);
        let closure = |w: &[f64; N_COMPONENTS]| {
            let inn = inflow.dot(w);
            let out = outflow.dot(w);
            let sludge = self.sludge.removed.dot(w);
            let clamp = self.clamped.dot(w);
            let delta = stored.dot(w) - initial.dot(w);
            let residual = inn + clamp - out - sludge - delta;
            let scale = inn.abs().max(out.abs()).max(stored.dot(w).abs()).max(1e-300);
            BalanceTerm {
                inflow: inn,
                outflow: out,
                sludge,
                delta_stored: delta,
                residual,
                relative: residual / scale,
            }
        };
        MassBalance {
            nitrogen: closure(&n),
            cod: closure(&cod),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BalanceTerm {
    pub inflow: f64,
    pub outflow: f64,
    pub sludge: f64,
    pub delta_stored: f64,
    pub residual: f64,
    pub relative: f64,
}

/// Nitrogen and electron-equivalent COD closure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MassBalance {
    pub nitrogen: BalanceTerm,
    pub cod: BalanceTerm,
}
