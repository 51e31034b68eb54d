//! Biofilter plant: tanks in series over a layered biofilm.
//!
//! Each tank is a completely mixed liquid volume (empty-bed volume times
//! porosity) in contact with a biofilm split into equally thick layers.
//! Solubles diffuse between layers and cross a boundary layer to the bulk;
//! particulates are filtered onto the surface layer and detach from it.
//! Film thickness follows the particulate mass at the configured density and
//! never drops below a residual floor; below that mass the film keeps the
//! floor thickness at reduced density. Film masses are carried per unit of
//! support area so that growth, washing and re-layering conserve mass.

mod backwash;
mod config;
mod dynamics;
mod integrator;
mod sensor;
mod state;

pub use backwash::apply_backwash;
pub use config::{BiofilterConfig, Diffusivities, Inoculum, MAX_LAYERS};
pub use dynamics::{dose_to_concentration, Plant, StepReport, INSTABILITY_LIMIT};
pub use integrator::{rk4_step, Rk4Work};
pub use sensor::{effluent_measurement, EffluentSensor, Measurement, MeasurementStatus, SensorModel};
pub use state::{
    init_plant, BalanceTerm, FilmGeometry, FilmLayer, Layout, MassBalance, PlantState,
    SludgeLedger, TankState,
};

impl Plant {
    /// Backwash every tank with the configured fraction.
    pub fn backwash(&self, s: &mut PlantState) -> crate::error::Result<crate::kinetics::Components> {
        apply_backwash(s, self.config().film_area(), self.config().f_bw)
    }

    pub fn init(&self) -> crate::error::Result<PlantState> {
        init_plant(self.config(), &self.config().inoculum)
    }
}
