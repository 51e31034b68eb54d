use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::classical::{classical_dose, ClassicalConfig};
use super::controller::{controller_step, ControlOutput, ControllerState, InletMeasurement};
use super::mfc::MfcConfig;
use crate::biofilter::Measurement;
use crate::error::{Error, Result};

pub const CLASSICAL: &str = "classical";
pub const CLASSICAL_MFC: &str = "classical+mfc";

/// The "control" section of a scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ControlConfig {
    /// Registered strategy name.
    pub mode: String,
    pub classical: ClassicalConfig,
    pub mfc: MfcConfig,
}

impl Default for ControlConfig {
    fn default() -> Self {
        ControlConfig {
            mode: CLASSICAL_MFC.to_string(),
            classical: ClassicalConfig::default(),
            mfc: MfcConfig::default(),
        }
    }
}

/// A dosing policy called once per controller period.
pub trait DosingStrategy: Send {
    fn name(&self) -> &str;
    fn step(&mut self, t: f64, inlet: &InletMeasurement, outlet: &Measurement) -> Result<ControlOutput>;
}

/// Feedforward only.
#[derive(Debug, Clone)]
pub struct ClassicalStrategy {
    cfg: ClassicalConfig,
}

impl ClassicalStrategy {
    pub fn new(cfg: ClassicalConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(ClassicalStrategy { cfg })
    }
}

impl DosingStrategy for ClassicalStrategy {
    fn name(&self) -> &str {
        CLASSICAL
    }

    fn step(&mut self, _t: f64, inlet: &InletMeasurement, _outlet: &Measurement) -> Result<ControlOutput> {
        let u_ff = classical_dose(inlet.q, inlet.c_no3_in, &self.cfg);
        Ok(ControlOutput {
            u_ff,
            u_total: u_ff,
            ..ControlOutput::IDLE
        })
    }
}

/// Feedforward plus the gated iP correction on effluent nitrite.
#[derive(Debug, Clone)]
pub struct ModelFreeStrategy {
    state: ControllerState,
}

impl ModelFreeStrategy {
    pub fn new(classical: ClassicalConfig, mfc: MfcConfig) -> Result<Self> {
        Ok(ModelFreeStrategy {
            state: ControllerState::new(classical, mfc, true)?,
        })
    }

    pub fn state(&self) -> &ControllerState {
        &self.state
    }
}

impl DosingStrategy for ModelFreeStrategy {
    fn name(&self) -> &str {
        CLASSICAL_MFC
    }

    fn step(&mut self, t: f64, inlet: &InletMeasurement, outlet: &Measurement) -> Result<ControlOutput> {
        controller_step(&mut self.state, inlet, outlet, t)
    }
}

pub type StrategyFactory = Box<dyn Fn(&ControlConfig) -> Result<Box<dyn DosingStrategy>> + Send + Sync>;

/// Name → constructor table for dosing strategies.
pub struct StrategyRegistry {
    factories: BTreeMap<String, StrategyFactory>,
}

impl Default for StrategyRegistry {
    fn default() -> Self {
        let mut r = StrategyRegistry::empty();
        r.register(CLASSICAL, |c| Ok(Box::new(ClassicalStrategy::new(c.classical.clone())?)));
        r.register(CLASSICAL_MFC, |c| {
            Ok(Box::new(ModelFreeStrategy::new(c.classical.clone(), c.mfc.clone())?))
        });
        r
    }
}

impl StrategyRegistry {
    pub fn empty() -> Self {
        StrategyRegistry {
            factories: BTreeMap::new(),
        }
    }

    /// Adds or replaces a strategy.
    pub fn register<F>(&mut self, name: &str, factory: F)
    where
        F: Fn(&ControlConfig) -> Result<Box<dyn DosingStrategy>> + Send + Sync + 'static,
    {
        self.factories.insert(name.to_string(), Box::new(factory));
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.factories.keys().map(String::as_str)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.factories.contains_key(name)
    }

    pub fn build(&self, cfg: &ControlConfig) -> Result<Box<dyn DosingStrategy>> {
        let factory = self
            .factories
            .get(&cfg.mode)
            .ok_or_else(|| Error::UnknownStrategy(cfg.mode.clone()))?;
        factory(cfg)
    }
}
