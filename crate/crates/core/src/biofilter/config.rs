use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinetics::{N_COMPONENTS, S_N2, S_NO2, S_NO3, S_S};

/// Largest supported number of biofilm layers.
pub const MAX_LAYERS: usize = 32;

/// Effective diffusivity of each soluble component inside the biofilm (m²/d).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Diffusivities {
    #[serde(rename = "S_S")]
    pub s_s: f64,
    #[serde(rename = "S_NO3")]
    pub s_no3: f64,
    #[serde(rename = "S_NO2")]
    pub s_no2: f64,
    #[serde(rename = "S_N2")]
    pub s_n2: f64,
}

impl Diffusivities {
    pub fn uniform(d: f64) -> Self {
        Diffusivities {
            s_s: d,
            s_no3: d,
            s_no2: d,
            s_n2: d,
        }
    }

    /// Diffusivity indexed by component; zero for particulates.
    pub fn by_component(&self) -> [f64; N_COMPONENTS] {
        let mut d = [0.0; N_COMPONENTS];
        d[S_S] = self.s_s;
        d[S_NO3] = self.s_no3;
        d[S_NO2] = self.s_no2;
        d[S_N2] = self.s_n2;
        d
    }
}

/// Initial biofilm: uniform thickness with a given active-biomass fraction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Inoculum {
    /// Total film thickness (m).
    pub thickness: f64,
    /// Share of the particulate density that is heterotrophic biomass.
    pub xh_fraction: f64,
}

impl Default for Inoculum {
    fn default() -> Self {
        Inoculum {
            thickness: 200e-6,
            xh_fraction: 0.7,
        }
    }
}

/// Plant geometry and transport coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BiofilterConfig {
    pub n_tanks: usize,
    /// Total empty-bed volume (m³).
    #[serde(rename = "V_total")]
    pub v_total: f64,
    /// Liquid fraction of the bed.
    pub porosity: f64,
    /// Bed depth (m); sets the superficial velocity used by filtration.
    pub bed_depth: f64,
    /// Biofilm surface per empty-bed volume (m²/m³).
    pub a_spec: f64,
    pub n_layers: usize,
    /// Particulate density of a compact biofilm (gCOD/m³).
    pub rho_f: f64,
    #[serde(rename = "D_eff")]
    pub d_eff: Diffusivities,
    /// External mass-transfer coefficient (m/d).
    pub k_l: f64,
    /// Filtration coefficient (1/m).
    pub lambda_f: f64,
    /// Detachment coefficient (1/(d·m)).
    pub k_det: f64,
    /// Residual film thickness that survives washing and detachment (m).
    #[serde(rename = "L_min")]
    pub l_min: f64,
    /// Fraction of the film thickness removed by one backwash.
    pub f_bw: f64,
    /// Time of day of the backwash (d).
    pub t_bw: f64,
    pub inoculum: Inoculum,
}

impl Default for BiofilterConfig {
    fn default() -> Self {
        BiofilterConfig {
            n_tanks: 6,
            v_total: 6000.0,
            porosity: 0.38,
            bed_depth: 3.0,
            a_spec: 800.0,
            n_layers: 3,
            rho_f: 10_000.0,
            d_eff: Diffusivities::uniform(8.0e-5),
            k_l: 10.0,
            lambda_f: 1.0,
            k_det: 1000.0,
            l_min: 120e-6,
            f_bw: 0.3,
            t_bw: 0.0,
            inoculum: Inoculum::default(),
        }
    }
}

impl BiofilterConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_tanks < 1 {
            return Err(Error::invalid("n_tanks", "at least one tank is required"));
        }
        if self.n_layers < 1 || self.n_layers > MAX_LAYERS {
            return Err(Error::invalid(
                "n_layers",
                format!("must lie in 1..={MAX_LAYERS}, got {}", self.n_layers),
            ));
        }
        if !(self.porosity > 0.0 && self.porosity <= 1.0) {
            return Err(Error::invalid("porosity", format!("must lie in (0, 1], got {}", self.porosity)));
        }
        if !(0.0..=1.0).contains(&self.f_bw) {
            return Err(Error::invalid("f_bw", format!("must lie in [0, 1], got {}", self.f_bw)));
        }
        let d = &self.d_eff;
        for (name, v) in [
            ("V_total", self.v_total),
            ("bed_depth", self.bed_depth),
            ("rho_f", self.rho_f),
            ("L_min", self.l_min),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(name, format!("must be finite and > 0, got {v}")));
            }
        }
        for (name, v) in [
            ("a_spec", self.a_spec),
            ("k_L", self.k_l),
            ("lambda_f", self.lambda_f),
            ("k_det", self.k_det),
            ("t_bw", self.t_bw),
            ("D_eff.S_S", d.s_s),
            ("D_eff.S_NO3", d.s_no3),
            ("D_eff.S_NO2", d.s_no2),
            ("D_eff.S_N2", d.s_n2),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid(name, format!("must be finite and >= 0, got {v}")));
            }
        }
        if !(0.0..=1.0).contains(&self.inoculum.xh_fraction) {
            return Err(Error::invalid("inoculum.xh_fraction", "must lie in [0, 1]"));
        }
        Ok(())
    }

    pub fn tank_volume(&self) -> f64 {
        self.v_total / self.n_tanks as f64
    }

    /// Liquid volume of one tank (m³).
    pub fn liquid_volume(&self) -> f64 {
        self.porosity * self.tank_volume()
    }

    /// Biofilm support area of one tank (m²).
    pub fn film_area(&self) -> f64 {
        self.a_spec * self.tank_volume()
    }

    pub fn cross_section(&self) -> f64 {
        self.v_total / self.bed_depth
    }

    /// Total hydraulic residence time at flow `q` (d).
    pub fn residence_time(&self, q: f64) -> f64 {
        self.porosity * self.v_total / q
    }
}
