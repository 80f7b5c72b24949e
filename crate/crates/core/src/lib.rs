//! Deterministic multi-region climate-economy simulator.
//!
//! The crate couples a discrete-step carbon/temperature box model with
//! regional Cobb-Douglas economies, international trade under bid/tariff
//! normalization constraints, and a pluggable negotiation-protocol framework
//! whose agreements become action masks. A calibration toolkit fits region
//! parameters from historical series, and the evaluation pipeline scores
//! solution sets through Pareto fronts and the 2-D hypervolume indicator.

pub mod actions;
pub mod agents;
pub mod calibration;
pub mod climate;
pub mod dataio;
pub mod econ;
pub mod engine;
pub mod error;
pub mod evaluation;
pub mod negotiation;
pub mod params;
pub mod scenario;
pub mod state;
pub mod trade;

pub use actions::{ActionGrid, ActionMask, ActionSet};
pub use error::{Error, Result};
pub use params::{EmissionsForm, GlobalParams, RegionParams};
pub use scenario::{validate_scenario, Scenario};
pub use state::{ClimateState, RegionState, WorldState};
