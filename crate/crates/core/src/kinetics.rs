//! Two-step heterotrophic denitrification on methanol.
//!
//! Components follow the ASM1 convention: substrate and biomass in COD units,
//! nitrogen pools in N units. Nitrate is reduced to nitrite and nitrite to
//! dinitrogen by a single heterotrophic population, each step with its own
//! Monod switch and anoxic reduction factor. Decay returns the non-inert
//! fraction of biomass straight to readily biodegradable substrate.

use std::ops::{Add, Index, IndexMut, Mul};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of state components.
pub const N_COMPONENTS: usize = 6;
/// Number of conversion processes.
pub const N_PROCESSES: usize = 3;

pub const S_S: usize = 0;
pub const S_NO3: usize = 1;
pub const S_NO2: usize = 2;
pub const S_N2: usize = 3;
pub const X_H: usize = 4;
pub const X_I: usize = 5;

/// Soluble components, in state order.
pub const SOLUBLES: [usize; 4] = [S_S, S_NO3, S_NO2, S_N2];
/// Particulate components, in state order.
pub const PARTICULATES: [usize; 2] = [X_H, X_I];

pub const GROWTH_NO3: usize = 0;
pub const GROWTH_NO2: usize = 1;
pub const DECAY: usize = 2;

/// Reduction step of the two-step denitrification chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReductionStep {
    /// NO3⁻ → NO2⁻, two electrons per N.
    NitrateToNitrite,
    /// NO2⁻ → N2, three electrons per N.
    NitriteToDinitrogen,
}

/// COD equivalent of one gram of nitrogen reduced over `step` (gCOD/gN).
pub fn acceptor_cod_equivalent(step: ReductionStep) -> f64 {
    match step {
        ReductionStep::NitrateToNitrite => 16.0 / 14.0,
        ReductionStep::NitriteToDinitrogen => 24.0 / 14.0,
    }
}

/// COD weight of each component in the conserved electron balance.
///
/// Oxidised nitrogen carries a negative weight equal to the COD it can still
/// accept on its way to N2.
pub fn cod_weights() -> [f64; N_COMPONENTS] {
    let nitrite = acceptor_cod_equivalent(ReductionStep::NitriteToDinitrogen);
    let nitrate = acceptor_cod_equivalent(ReductionStep::NitrateToNitrite) + nitrite;
    let mut w = [0.0; N_COMPONENTS];
    w[S_S] = 1.0;
    w[X_H] = 1.0;
    w[X_I] = 1.0;
    w[S_NO3] = -nitrate;
    w[S_NO2] = -nitrite;
    w
}

/// Nitrogen weight of each component (gN per unit of component).
pub fn nitrogen_weights(i_xb: f64) -> [f64; N_COMPONENTS] {
    let mut w = [0.0; N_COMPONENTS];
    w[S_NO3] = 1.0;
    w[S_NO2] = 1.0;
    w[S_N2] = 1.0;
    w[X_H] = i_xb;
    w
}

/// Concentrations of the six model components.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Components {
    /// Readily biodegradable substrate (gCOD/m³).
    #[serde(rename = "S_S")]
    pub s_s: f64,
    /// Nitrate nitrogen (gN/m³).
    #[serde(rename = "S_NO3")]
    pub s_no3: f64,
    /// Nitrite nitrogen (gN/m³).
    #[serde(rename = "S_NO2")]
    pub s_no2: f64,
    /// Dissolved dinitrogen (gN/m³).
    #[serde(rename = "S_N2")]
    pub s_n2: f64,
    /// Heterotrophic biomass (gCOD/m³).
    #[serde(rename = "X_H")]
    pub x_h: f64,
    /// Inert particulates (gCOD/m³).
    #[serde(rename = "X_I")]
    pub x_i: f64,
}

impl Components {
    pub const ZERO: Components = Components {
        s_s: 0.0,
        s_no3: 0.0,
        s_no2: 0.0,
        s_n2: 0.0,
        x_h: 0.0,
        x_i: 0.0,
    };

    pub fn from_array(a: [f64; N_COMPONENTS]) -> Self {
        Components {
            s_s: a[S_S],
            s_no3: a[S_NO3],
            s_no2: a[S_NO2],
            s_n2: a[S_N2],
            x_h: a[X_H],
            x_i: a[X_I],
        }
    }

    pub fn to_array(self) -> [f64; N_COMPONENTS] {
        let mut a = [0.0; N_COMPONENTS];
        a[S_S] = self.s_s;
        a[S_NO3] = self.s_no3;
        a[S_NO2] = self.s_no2;
        a[S_N2] = self.s_n2;
        a[X_H] = self.x_h;
        a[X_I] = self.x_i;
        a
    }

    /// Total oxidised nitrogen, NO3 + NO2.
    pub fn nox(&self) -> f64 {
        self.s_no3 + self.s_no2
    }

    pub fn is_valid(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite() && *v >= 0.0)
    }

    /// Weighted sum over components.
    pub fn dot(&self, w: &[f64; N_COMPONENTS]) -> f64 {
        self.to_array().iter().zip(w).map(|(c, w)| c * w).sum()
    }
}

impl Index<usize> for Components {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        match i {
            S_S => &self.s_s,
            S_NO3 => &self.s_no3,
            S_NO2 => &self.s_no2,
            S_N2 => &self.s_n2,
            X_H => &self.x_h,
            X_I => &self.x_i,
            _ => panic!("component index {i} out of range"),
        }
    }
}

impl IndexMut<usize> for Components {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        match i {
            S_S => &mut self.s_s,
            S_NO3 => &mut self.s_no3,
            S_NO2 => &mut self.s_no2,
            S_N2 => &mut self.s_n2,
            X_H => &mut self.x_h,
            X_I => &mut self.x_i,
            _ => panic!("component index {i} out of range"),
        }
    }
}

impl Add for Components {
    type Output = Components;
    fn add(self, rhs: Components) -> Components {
        let (a, b) = (self.to_array(), rhs.to_array());
        Components::from_array(std::array::from_fn(|i| a[i] + b[i]))
    }
}

impl Mul<f64> for Components {
    type Output = Components;
    fn mul(self, k: f64) -> Components {
        let a = self.to_array();
        Components::from_array(a.map(|v| v * k))
    }
}

/// Monod and yield parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KineticParams {
    /// Maximum growth rate (1/d).
    #[serde(rename = "mu_H")]
    pub mu_h: f64,
    /// Substrate half-saturation (gCOD/m³).
    #[serde(rename = "K_S")]
    pub k_s: f64,
    #[serde(rename = "K_NO3")]
    pub k_no3: f64,
    #[serde(rename = "K_NO2")]
    pub k_no2: f64,
    #[serde(rename = "eta_NO3")]
    pub eta_no3: f64,
    #[serde(rename = "eta_NO2")]
    pub eta_no2: f64,
    /// Anoxic yield (gCOD/gCOD).
    #[serde(rename = "Y_H")]
    pub y_h: f64,
    /// Decay rate (1/d).
    #[serde(rename = "b_H")]
    pub b_h: f64,
    /// Inert fraction of decayed biomass.
    #[serde(rename = "f_I")]
    pub f_i: f64,
    /// Nitrogen content of biomass (gN/gCOD).
    #[serde(rename = "i_XB")]
    pub i_xb: f64,
}

impl Default for KineticParams {
    fn default() -> Self {
        KineticParams {
            mu_h: 6.0,
            k_s: 10.0,
            k_no3: 0.5,
            k_no2: 0.5,
            eta_no3: 0.8,
            eta_no2: 0.8,
            y_h: 0.4,
            b_h: 0.3,
            f_i: 0.1,
            i_xb: 0.0,
        }
    }
}

impl KineticParams {
    pub fn validate(&self) -> Result<()> {
        let non_negative = [
            ("mu_H", self.mu_h),
            ("K_S", self.k_s),
            ("K_NO3", self.k_no3),
            ("K_NO2", self.k_no2),
            ("eta_NO3", self.eta_no3),
            ("eta_NO2", self.eta_no2),
            ("b_H", self.b_h),
            ("f_I", self.f_i),
            ("i_XB", self.i_xb),
        ];
        for (name, v) in non_negative {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::invalid(name, format!("must be finite and >= 0, got {v}")));
            }
        }
        if !(self.y_h > 0.0 && self.y_h < 1.0) {
            return Err(Error::invalid("Y_H", format!("must lie in (0, 1), got {}", self.y_h)));
        }
        if self.f_i >= 1.0 {
            return Err(Error::invalid("f_I", format!("must lie in [0, 1), got {}", self.f_i)));
        }
        if self.eta_no3 > 1.0 || self.eta_no2 > 1.0 {
            return Err(Error::invalid("eta", "anoxic reduction factors must not exceed 1"));
        }
        // Biomass nitrogen would need an ammonium pool, which is not modelled.
        if self.i_xb != 0.0 {
            return Err(Error::invalid(
                "i_XB",
                "non-zero biomass nitrogen requires an ammonium pool, which this model does not carry",
            ));
        }
        Ok(())
    }
}

/// Process-by-component conversion coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StoichMatrix {
    pub rows: [[f64; N_COMPONENTS]; N_PROCESSES],
}

/// Builds the conversion table from electron balances.
pub fn build_stoichiometry(p: &KineticParams) -> Result<StoichMatrix> {
    if !(p.y_h > 0.0 && p.y_h < 1.0) {
        return Err(Error::invalid("Y_H", format!("must lie in (0, 1), got {}", p.y_h)));
    }
    let y = p.y_h;
    let to_nitrite = (1.0 - y) / (acceptor_cod_equivalent(ReductionStep::NitrateToNitrite) * y);
    let to_n2 = (1.0 - y) / (acceptor_cod_equivalent(ReductionStep::NitriteToDinitrogen) * y);

    let mut rows = [[0.0; N_COMPONENTS]; N_PROCESSES];

    let g1 = &mut rows[GROWTH_NO3];
    g1[S_S] = -1.0 / y;
    g1[X_H] = 1.0;
    g1[S_NO3] = -to_nitrite;
    g1[S_NO2] = to_nitrite;

    let g2 = &mut rows[GROWTH_NO2];
    g2[S_S] = -1.0 / y;
    g2[X_H] = 1.0;
    g2[S_NO2] = -to_n2;
    g2[S_N2] = to_n2;

    let d = &mut rows[DECAY];
    d[X_H] = -1.0;
    d[X_I] = p.f_i;
    d[S_S] = 1.0 - p.f_i;

    Ok(StoichMatrix { rows })
}

#[inline]
fn monod(s: f64, k: f64) -> f64 {
    if s <= 0.0 {
        0.0
    } else {
        s / (k + s)
    }
}

/// Process rates (gCOD/(m³·d)): growth on nitrate, growth on nitrite, decay.
pub fn process_rates(c: &Components, p: &KineticParams) -> [f64; N_PROCESSES] {
    let x_h = c.x_h.max(0.0);
    let substrate = monod(c.s_s, p.k_s);
    [
        p.mu_h * p.eta_no3 * substrate * monod(c.s_no3, p.k_no3) * x_h,
        p.mu_h * p.eta_no2 * substrate * monod(c.s_no2, p.k_no2) * x_h,
        p.b_h * x_h,
    ]
}

/// Applies the transposed conversion table to a rate vector.
pub fn apply_rates(m: &StoichMatrix, rates: &[f64; N_PROCESSES]) -> [f64; N_COMPONENTS] {
    let mut out = [0.0; N_COMPONENTS];
    for (row, r) in m.rows.iter().zip(rates) {
        for (o, coef) in out.iter_mut().zip(row) {
            *o += coef * r;
        }
    }
    out
}

/// Reaction-only time derivative of `c`.
pub fn conversion_derivatives(c: &Components, p: &KineticParams, m: &StoichMatrix) -> Components {
    Components::from_array(apply_rates(m, &process_rates(c, p)))
}

/// COD and nitrogen residuals of one conversion process.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProcessResidual {
    pub cod: f64,
    pub nitrogen: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContinuityReport {
    pub processes: [ProcessResidual; N_PROCESSES],
}

impl ContinuityReport {
    pub fn max_abs(&self) -> f64 {
        self.processes
            .iter()
            .flat_map(|r| [r.cod.abs(), r.nitrogen.abs()])
            .fold(0.0, f64::max)
    }

    pub fn is_balanced(&self, tol: f64) -> bool {
        self.max_abs() <= tol
    }
}

/// Residuals of the COD and N balances for every row of `m`.
pub fn check_continuity(m: &StoichMatrix) -> ContinuityReport {
    let cod = cod_weights();
    let n = nitrogen_weights(0.0);
    let processes = m.rows.map(|row| ProcessResidual {
        cod: row.iter().zip(&cod).map(|(a, w)| a * w).sum(),
        nitrogen: row.iter().zip(&n).map(|(a, w)| a * w).sum(),
    });
    ContinuityReport { processes }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(y: f64) -> KineticParams {
        KineticParams {
            y_h: y,
            ..KineticParams::default()
        }
    }

    // 8 g O2 accepted per mole of electrons, 14 g N per mole.
    fn electron_oracle(electrons_per_n: f64) -> f64 {
        electrons_per_n * 32.0 / 4.0 / 14.0
    }

    #[test]
    fn acceptor_equivalents_match_electron_counts() {
        let a = acceptor_cod_equivalent(ReductionStep::NitrateToNitrite);
        let b = acceptor_cod_equivalent(ReductionStep::NitriteToDinitrogen);
        assert!((a - electron_oracle(2.0)).abs() < 1e-15);
        assert!((b - electron_oracle(3.0)).abs() < 1e-15);
        assert!((a - 1.1429).abs() < 1e-4);
        assert!((b - 1.7143).abs() < 1e-4);
        assert!((a + b - electron_oracle(5.0)).abs() < 1e-15);
        assert!((a + b - 2.857).abs() < 1e-3);
    }

    #[test]
    fn stoichiometry_half_yield() {
        let m = build_stoichiometry(&params(0.5)).unwrap();
        assert!((m.rows[GROWTH_NO3][S_NO3] + 0.875).abs() < 1e-12);
        assert!((m.rows[GROWTH_NO3][S_NO2] - 0.875).abs() < 1e-12);
        assert!((m.rows[GROWTH_NO2][S_NO2] + 0.5833).abs() < 1e-4);
        assert!((m.rows[GROWTH_NO2][S_N2] - 0.58333).abs() < 1e-4);
        assert_eq!(m.rows[GROWTH_NO3][S_S], -2.0);
    }

    #[test]
    fn decay_without_inerts_returns_everything_to_substrate() {
        let p = KineticParams {
            f_i: 0.0,
            ..KineticParams::default()
        };
        let m = build_stoichiometry(&p).unwrap();
        assert_eq!(m.rows[DECAY][S_S], 1.0);
        assert_eq!(m.rows[DECAY][X_I], 0.0);
        assert_eq!(m.rows[DECAY][X_H], -1.0);
    }

    #[test]
    fn yield_out_of_range_is_rejected() {
        for y in [0.0, 1.0, -0.2, 1.5] {
            assert!(build_stoichiometry(&params(y)).is_err(), "Y_H = {y}");
            assert!(params(y).validate().is_err());
        }
    }

    #[test]
    fn validation_rejects_biomass_nitrogen() {
        let p = KineticParams {
            i_xb: 0.08,
            ..KineticParams::default()
        };
        assert!(p.validate().is_err());
        assert!(KineticParams::default().validate().is_ok());
    }

    #[test]
    fn zero_substrate_or_biomass_stops_growth() {
        let p = KineticParams::default();
        let c = Components {
            s_s: 0.0,
            s_no3: 10.0,
            s_no2: 1.0,
            x_h: 100.0,
            ..Components::ZERO
        };
        let r = process_rates(&c, &p);
        assert_eq!((r[0], r[1]), (0.0, 0.0));
        assert!(r[2] > 0.0);

        let c = Components {
            s_s: 20.0,
            s_no3: 10.0,
            s_no2: 1.0,
            ..Components::ZERO
        };
        assert_eq!(process_rates(&c, &p), [0.0; 3]);
    }

    #[test]
    fn saturated_growth_approaches_maximum() {
        // Two Monod factors multiply, so each must be at 200 K to keep the
        // product within 1 % of the ceiling (100 K each gives 1.97 %).
        let p = KineticParams::default();
        let max_at = |mult: f64| {
            let c = Components {
                s_s: mult * p.k_s,
                s_no3: mult * p.k_no3,
                x_h: 50.0,
                ..Components::ZERO
            };
            let max = p.mu_h * p.eta_no3 * c.x_h;
            (max - process_rates(&c, &p)[0]) / max
        };
        assert!(max_at(100.0) > 0.0 && max_at(100.0) < 0.02);
        assert!(max_at(200.0) < 0.01);
    }

    #[test]
    fn zero_state_has_zero_derivative() {
        let p = KineticParams::default();
        let m = build_stoichiometry(&p).unwrap();
        assert_eq!(conversion_derivatives(&Components::ZERO, &p, &m), Components::ZERO);
    }

    #[test]
    fn growth_row_moves_nitrate_into_nitrite() {
        let m = build_stoichiometry(&params(0.5)).unwrap();
        let r = 3.7;
        let d = apply_rates(&m, &[r, 0.0, 0.0]);
        assert!((d[S_NO3] + 0.875 * r).abs() < 1e-12);
        assert!((d[S_NO2] - 0.875 * r).abs() < 1e-12);
    }

    #[test]
    fn canonical_matrix_is_balanced() {
        let rep = check_continuity(&build_stoichiometry(&params(0.5)).unwrap());
        assert!(rep.is_balanced(1e-12), "{rep:?}");
        let rep = check_continuity(&build_stoichiometry(&KineticParams::default()).unwrap());
        assert!(rep.is_balanced(1e-12), "{rep:?}");
    }

    #[test]
    fn perturbed_nitrate_coefficient_shows_up_in_n_residual() {
        let mut m = build_stoichiometry(&params(0.5)).unwrap();
        m.rows[GROWTH_NO3][S_NO3] += 0.01;
        let rep = check_continuity(&m);
        assert!((rep.processes[GROWTH_NO3].nitrogen - 0.01).abs() < 1e-12);
        assert!(!rep.is_balanced(1e-9));
    }

    #[test]
    fn decay_with_inerts_conserves_cod() {
        let p = KineticParams {
            f_i: 0.1,
            ..KineticParams::default()
        };
        let m = build_stoichiometry(&p).unwrap();
        assert!((m.rows[DECAY][X_I] - 0.1).abs() < 1e-15);
        assert!((m.rows[DECAY][S_S] - 0.9).abs() < 1e-15);
        assert!(check_continuity(&m).processes[DECAY].cod.abs() < 1e-12);
    }

    #[test]
    fn serde_uses_published_field_names() {
        let json = serde_json::to_value(KineticParams::default()).unwrap();
        for key in ["mu_H", "K_S", "K_NO3", "K_NO2", "eta_NO3", "eta_NO2", "Y_H", "b_H", "f_I", "i_XB"] {
            assert!(json.get(key).is_some(), "missing {key}");
        }
        let back: KineticParams = serde_json::from_value(json).unwrap();
        assert_eq!(back, KineticParams::default());
    }
}
