//! Right-hand side of the plant ODE and the fixed-step driver.

use log::debug;

use super::config::{BiofilterConfig, MAX_LAYERS};
use super::integrator::rk4_step;
use super::state::{Layout, PlantState};
use crate::error::{Error, Result};
use crate::influent::{InfluentSource, InfluentState};
use crate::kinetics::{
    apply_rates, build_stoichiometry, check_continuity, process_rates, Components, KineticParams,
    StoichMatrix, N_COMPONENTS, PARTICULATES, S_NO2, S_NO3, S_S, SOLUBLES, X_H, X_I,
};

/// Any state entry above this magnitude is treated as a blown-up integration.
pub const INSTABILITY_LIMIT: f64 = 1e12;

/// Methanol dose expressed as a concentration increment of the tank-1 inflow.
///
/// `u` in kgCOD/d, `q` in m³/d, result in gCOD/m³.
pub fn dose_to_concentration(u: f64, q: f64) -> Result<f64> {
    if !(q > 0.0) {
        return Err(Error::Actuation(format!(
            "cannot convert a dose into a concentration at flow {q} m³/d"
        )));
    }
    Ok(1000.0 * u / q)
}

/// Plant model: configuration, kinetics and derived geometry.
#[derive(Debug, Clone)]
pub struct Plant {
    cfg: BiofilterConfig,
    kinetics: KineticParams,
    stoich: StoichMatrix,
    diffusivity: [f64; N_COMPONENTS],
    v_liquid: f64,
    v_tank: f64,
    area: f64,
    cross_section: f64,
}

/// Outcome of one integration step.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StepReport {
    /// Mass re-added by clamping negative entries during this step (g).
    pub clamped: Components,
}

impl Plant {
    pub fn new(cfg: BiofilterConfig, kinetics: KineticParams) -> Result<Self> {
        cfg.validate()?;
        kinetics.validate()?;
        let stoich = build_stoichiometry(&kinetics)?;
        let continuity = check_continuity(&stoich);
        if !continuity.is_balanced(1e-9) {
            return Err(Error::Config(format!(
                "conversion table fails continuity: max residual {:e}",
                continuity.max_abs()
            )));
        }
        Ok(Plant {
            diffusivity: cfg.d_eff.by_component(),
            v_liquid: cfg.liquid_volume(),
            v_tank: cfg.tank_volume(),
            area: cfg.film_area(),
            cross_section: cfg.cross_section(),
            stoich,
            kinetics,
            cfg,
        })
    }

    pub fn config(&self) -> &BiofilterConfig {
        &self.cfg
    }

    pub fn kinetics(&self) -> &KineticParams {
        &self.kinetics
    }

    pub fn stoichiometry(&self) -> &StoichMatrix {
        &self.stoich
    }

    /// Writes `d(state)/dt` into `dy`. `dose_rate` is the methanol mass
    /// flow into tank 1 (gCOD/d).
    pub(crate) fn rhs(
        &self,
        layout: Layout,
        y: &[f64],
        dy: &mut [f64],
        influent: &InfluentState,
        dose_rate: f64,
    ) {
        dy.fill(0.0);
        let cfg = &self.cfg;
        let n_layers = layout.n_layers;
        let q = influent.q;
        let v_liq = self.v_liquid;
        let area = self.area;
        let has_film = area > 0.0;
        let rho_f = cfg.rho_f;
        let velocity = q / self.cross_section;

        let mut inlet = [0.0; N_COMPONENTS];
        inlet[S_S] = influent.c_ss;
        inlet[S_NO3] = influent.c_no3;
        inlet[S_NO2] = influent.c_no2;

        let acc = layout.accumulators();
        for k in 0..N_COMPONENTS {
            dy[acc + k] = q * inlet[k];
        }
        dy[acc + S_S] += dose_rate;

        // Per-layer concentrations and volume production, reused across tanks.
        let mut conc = [[0.0; N_COMPONENTS]; MAX_LAYERS];
        let mut production = [0.0; MAX_LAYERS];

        for tank in 0..layout.n_tanks {
            let b = layout.bulk(tank);
            let bulk: [f64; N_COMPONENTS] = std::array::from_fn(|k| y[b + k]);

            for k in 0..N_COMPONENTS {
                dy[b + k] += q * (inlet[k] - bulk[k]) / v_liq;
            }
            if tank == 0 {
                dy[b + S_S] += dose_rate / v_liq;
            }
            let rates = process_rates(&Components::from_array(bulk), &self.kinetics);
            let react = apply_rates(&self.stoich, &rates);
            for k in 0..N_COMPONENTS {
                dy[b + k] += react[k];
            }

            if has_film {
                let mut particulate = 0.0;
                for l in 0..n_layers {
                    let o = layout.layer(tank, l);
                    particulate += y[o + X_H] + y[o + X_I];
                }
                let compact = particulate / rho_f > cfg.l_min;
                let thickness = if compact { particulate / rho_f } else { cfg.l_min };
                let h = thickness / n_layers as f64;
                for (l, c) in conc.iter_mut().enumerate().take(n_layers) {
                    let o = layout.layer(tank, l);
                    for k in 0..N_COMPONENTS {
                        c[k] = y[o + k] / h;
                    }
                }

                // Conversion inside each layer.
                for l in 0..n_layers {
                    let o = layout.layer(tank, l);
                    let rates = process_rates(&Components::from_array(conc[l]), &self.kinetics);
                    let react = apply_rates(&self.stoich, &rates);
                    for k in 0..N_COMPONENTS {
                        dy[o + k] += h * react[k];
                    }
                    production[l] = h * (react[X_H] + react[X_I]) / rho_f;
                }

                // Diffusion between neighbouring layers.
                for l in 0..n_layers.saturating_sub(1) {
                    let lo = layout.layer(tank, l);
                    let hi = layout.layer(tank, l + 1);
                    for &k in &SOLUBLES {
                        let flux = self.diffusivity[k] * (conc[l][k] - conc[l + 1][k]) / h;
                        dy[lo + k] -= flux;
                        dy[hi + k] += flux;
                    }
                }

                // Exchange with the bulk through the boundary layer and the
                // outer half of the surface layer.
                let top = n_layers - 1;
                let ot = layout.layer(tank, top);
                for &k in &SOLUBLES {
                    let d = self.diffusivity[k];
                    let k_eff = if cfg.k_l > 0.0 && d > 0.0 {
                        1.0 / (1.0 / cfg.k_l + 0.5 * h / d)
                    } else {
                        0.0
                    };
                    let flux = k_eff * (conc[top][k] - bulk[k]);
                    dy[ot + k] -= flux;
                    dy[b + k] += flux * area / v_liq;
                }

                // Filtration of suspended solids onto the surface layer.
                let mut attached = 0.0;
                for &k in &PARTICULATES {
                    let captured = cfg.lambda_f * velocity * bulk[k].max(0.0) * self.v_tank;
                    dy[b + k] -= captured / v_liq;
                    dy[ot + k] += captured / area;
                    attached += captured / area;
                }

                if compact {
                    let detach_velocity = cfg.k_det * thickness * (thickness - cfg.l_min);
                    let mut detached = 0.0;
                    for &k in &PARTICULATES {
                        let flux = detach_velocity * conc[top][k].max(0.0);
                        dy[ot + k] -= flux;
                        dy[b + k] += flux * area / v_liq;
                        detached += flux;
                    }

                    // Keep the layers equally thick: material crosses each
                    // internal boundary at the rate needed to absorb the
                    // growth below it.
                    let growth: f64 = production[..n_layers].iter().sum::<f64>() + (attached - detached) / rho_f;
                    let mut below = 0.0;
                    for l in 0..n_layers - 1 {
                        below += production[l];
                        let volume_flux = below - (l + 1) as f64 / n_layers as f64 * growth;
                        let up = if volume_flux > 0.0 { l } else { l + 1 };
                        let lo = layout.layer(tank, l);
                        let hi = layout.layer(tank, l + 1);
                        for k in 0..N_COMPONENTS {
                            let moved = volume_flux * conc[up][k];
                            dy[lo + k] -= moved;
                            dy[hi + k] += moved;
                        }
                    }
                }
            }
            inlet = bulk;
        }

        for k in 0..N_COMPONENTS {
            dy[acc + N_COMPONENTS + k] = q * inlet[k];
        }
    }

    /// Time derivative of the whole plant state for a dose expressed as a
    /// tank-1 inflow increment `delta_ss` (gCOD/m³).
    pub fn plant_derivatives(
        &self,
        s: &PlantState,
        influent: &InfluentState,
        delta_ss: f64,
    ) -> Result<Vec<f64>> {
        self.check_layout(s)?;
        let mut dy = vec![0.0; s.y.len()];
        self.rhs(s.layout, &s.y, &mut dy, influent, delta_ss * influent.q);
        if let Some(i) = dy.iter().position(|v| !v.is_finite()) {
            return Err(Error::NumericalFault {
                t: s.t,
                detail: format!("non-finite derivative at state index {i}"),
            });
        }
        Ok(dy)
    }

    fn check_layout(&self, s: &PlantState) -> Result<()> {
        if s.layout.n_tanks != self.cfg.n_tanks || s.layout.n_layers != self.cfg.n_layers {
            return Err(Error::Config(format!(
                "state has {}x{} tanks/layers, plant expects {}x{}",
                s.layout.n_tanks, s.layout.n_layers, self.cfg.n_tanks, self.cfg.n_layers
            )));
        }
        Ok(())
    }

    /// Advances the plant by `dt` days with the dose `u` (kgCOD/d) held.
    pub fn step(
        &self,
        s: &mut PlantState,
        influent: &dyn InfluentSource,
        u: f64,
        dt: f64,
    ) -> Result<StepReport> {
        if !(dt > 0.0) {
            return Err(Error::invalid("dt", format!("must be > 0, got {dt}")));
        }
        self.check_layout(s)?;
        let layout = s.layout;
        let dose_rate = 1000.0 * u;
        let t0 = s.t;
        let PlantState { y, work, .. } = s;
        rk4_step(
            |t, y, dy| self.rhs(layout, y, dy, &influent.at(t), dose_rate),
            t0,
            y,
            dt,
            work,
        );

        let mut report = StepReport::default();
        let acc = layout.accumulators();
        for (i, v) in s.y.iter_mut().enumerate() {
            if !v.is_finite() || v.abs() > INSTABILITY_LIMIT {
                return Err(Error::NumericalFault {
                    t: t0 + dt,
                    detail: format!(
                        "state index {i} reached {v:e} (tank block {}, offset {})",
                        i / layout.block(),
                        i % layout.block()
                    ),
                });
            }
            if i < acc && *v < 0.0 {
                let k = i % N_COMPONENTS;
                let weight = if i % layout.block() < N_COMPONENTS {
                    self.v_liquid
                } else {
                    self.area
                };
                report.clamped[k] += -*v * weight;
                *v = 0.0;
            }
        }
        if report.clamped != Components::ZERO {
            debug!("t = {:.6}: clamped {:?}", t0 + dt, report.clamped);
            s.clamped = s.clamped + report.clamped;
        }
        s.t = t0 + dt;
        Ok(report)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::biofilter::config::Inoculum;
    use crate::biofilter::state::init_plant;
    use crate::kinetics::{conversion_derivatives, nitrogen_weights, S_N2};

    struct Constant(InfluentState);
    impl InfluentSource for Constant {
        fn at(&self, _t: f64) -> InfluentState {
            self.0
        }
    }

    fn influent() -> InfluentState {
        InfluentState {
            q: 45_000.0,
            c_no3: 15.0,
            c_no2: 0.5,
            c_ss: 5.0,
        }
    }

    #[test]
    fn dose_conversion() {
        assert!((dose_to_concentration(1772.0, 45_000.0).unwrap() - 39.3778).abs() < 1e-4);
        assert_eq!(dose_to_concentration(0.0, 45_000.0).unwrap(), 0.0);
        assert!(matches!(dose_to_concentration(10.0, 0.0), Err(Error::Actuation(_))));
    }

    #[test]
    fn single_tank_equilibrated_film_follows_batch_kinetics() {
        let cfg = BiofilterConfig {
            n_tanks: 1,
            n_layers: 1,
            k_l: 1e9,
            lambda_f: 0.0,
            k_det: 0.0,
            ..BiofilterConfig::default()
        };
        let kin = KineticParams::default();
        let plant = Plant::new(cfg.clone(), kin).unwrap();
        let mut s = init_plant(&cfg, &Inoculum::default()).unwrap();
        // same soluble concentrations in the liquid and in the film
        let c = Components {
            s_s: 20.0,
            s_no3: 8.0,
            s_no2: 1.5,
            s_n2: 3.0,
            x_h: 0.0,
            x_i: 0.0,
        };
        s.set_bulk(0, c);
        let h = s.film_thickness(0);
        let o = s.layout.layer(0, 0);
        for &k in &SOLUBLES {
            s.y[o + k] = c[k] * h;
        }
        let still = InfluentState {
            q: 0.0,
            ..influent()
        };
        let dy = plant.plant_derivatives(&s, &still, 0.0).unwrap();
        let film = s.tank(0).film_layers[0].conc;
        let expected = conversion_derivatives(&film, &kin, plant.stoichiometry());
        for &k in &SOLUBLES {
            let got = dy[o + k] / h;
            assert!(
                (got - expected[k]).abs() <= 1e-9 * expected[k].abs().max(1.0),
                "component {k}: {got} vs {}",
                expected[k]
            );
            // liquid without biomass and without gradient stays put
            assert!(dy[k].abs() < 1e-9);
        }
    }

    #[test]
    fn derivative_closes_the_nitrogen_budget() {
        // Oracle: sum every pool's derivative weighted by its volume or area
        // and compare with what crosses the plant boundary.
        let cfg = BiofilterConfig::default();
        let plant = Plant::new(cfg.clone(), KineticParams::default()).unwrap();
        let mut s = init_plant(&cfg, &Inoculum::default()).unwrap();
        for tank in 0..cfg.n_tanks {
            s.set_bulk(
                tank,
                Components {
                    s_s: 12.0 - tank as f64,
                    s_no3: 10.0 - tank as f64,
                    s_no2: 1.0 + 0.1 * tank as f64,
                    s_n2: 4.0,
                    x_h: 2.0,
                    x_i: 1.0,
                },
            );
        }
        let inf = influent();
        let dy = plant.plant_derivatives(&s, &inf, 30.0).unwrap();
        let w = nitrogen_weights(0.0);
        let mut stored_rate = 0.0;
        for tank in 0..cfg.n_tanks {
            for k in 0..N_COMPONENTS {
                stored_rate += w[k] * dy[s.layout.bulk(tank) + k] * cfg.liquid_volume();
                for l in 0..cfg.n_layers {
                    stored_rate += w[k] * dy[s.layout.layer(tank, l) + k] * cfg.film_area();
                }
            }
        }
        let out = s.effluent();
        let inflow = inf.q * (inf.c_no3 + inf.c_no2);
        let outflow = inf.q * (out.s_no3 + out.s_no2 + out.s_n2);
        let residual = stored_rate - (inflow - outflow);
        assert!(residual.abs() <= 1e-9 * inflow, "residual {residual}");
    }

    #[test]
    fn inert_plant_passes_influent_through() {
        let cfg = BiofilterConfig::default();
        let plant = Plant::new(cfg.clone(), KineticParams::default()).unwrap();
        let inert = Inoculum {
            thickness: cfg.l_min,
            xh_fraction: 0.0,
        };
        let mut s = init_plant(&cfg, &inert).unwrap();
        let src = Constant(influent());
        let dt = 1.0 / 86_400.0;
        let steps = (0.5 / dt) as usize;
        for _ in 0..steps {
            plant.step(&mut s, &src, 0.0, dt).unwrap();
        }
        let out = s.effluent();
        assert!((out.s_no3 - 15.0).abs() < 1e-6, "{out:?}");
        assert!((out.s_no2 - 0.5).abs() < 1e-6);
        assert!((out.s_s - 5.0).abs() < 1e-6);
        assert_eq!(out.s_n2, 0.0);
    }

    #[test]
    fn step_rejects_non_positive_dt() {
        let cfg = BiofilterConfig::default();
        let plant = Plant::new(cfg.clone(), KineticParams::default()).unwrap();
        let mut s = init_plant(&cfg, &Inoculum::default()).unwrap();
        assert!(plant.step(&mut s, &Constant(influent()), 0.0, 0.0).is_err());
    }

    #[test]
    fn tiny_step_leaves_plant_unchanged() {
        let cfg = BiofilterConfig::default();
        let plant = Plant::new(cfg.clone(), KineticParams::default()).unwrap();
        let mut s = init_plant(&cfg, &Inoculum::default()).unwrap();
        let src = Constant(influent());
        for _ in 0..600 {
            plant.step(&mut s, &src, 1500.0, 1.0 / 86_400.0).unwrap();
        }
        let before = s.y.clone();
        plant.step(&mut s, &src, 1500.0, 1e-12).unwrap();
        let acc = s.layout.accumulators();
        for (a, b) in before[..acc].iter().zip(&s.y[..acc]) {
            assert!((a - b).abs() <= 1e-9 * a.abs().max(1e-6), "{a} -> {b}");
        }
    }

    #[test]
    fn blow_up_is_reported_as_numerical_fault() {
        let cfg = BiofilterConfig::default();
        let plant = Plant::new(cfg.clone(), KineticParams::default()).unwrap();
        let mut s = init_plant(&cfg, &Inoculum::default()).unwrap();
        // a step far beyond the stability limit of the film exchange
        let src = Constant(influent());
        let mut fault = None;
        for _ in 0..50 {
            if let Err(e) = plant.step(&mut s, &src, 1500.0, 0.5) {
                fault = Some(e);
                break;
            }
        }
        assert!(matches!(fault, Some(Error::NumericalFault { .. })), "{fault:?}");
    }

    #[test]
    fn dinitrogen_only_grows_in_a_closed_batch() {
        let cfg = BiofilterConfig {
            n_tanks: 1,
            ..BiofilterConfig::default()
        };
        let plant = Plant::new(cfg.clone(), KineticParams::default()).unwrap();
        let mut s = init_plant(&cfg, &Inoculum::default()).unwrap();
        s.set_bulk(
            0,
            Components {
                s_s: 40.0,
                s_no3: 10.0,
                ..Components::ZERO
            },
        );
        let src = Constant(InfluentState {
            q: 0.0,
            c_no3: 0.0,
            c_no2: 0.0,
            c_ss: 0.0,
        });
        let dt = 1.0 / 86_400.0;
        let mut last = 0.0;
        for _ in 0..10_000 {
            plant.step(&mut s, &src, 0.0, dt).unwrap();
            let n2 = s.inventory(&cfg)[S_N2];
            assert!(n2 >= last - 1e-9);
            last = n2;
        }
        assert!(last > 0.0);
    }
}
