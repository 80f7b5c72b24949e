//! Simulation state types. All immutable value records; stepping produces a
//! fresh state rather than mutating in place.

use serde::{Deserialize, Serialize};

/// Global climate state: two temperature layers and three carbon reservoirs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClimateState {
    /// Atmospheric temperature rise, deg C.
    pub t_at: f64,
    /// Lower-ocean temperature rise, deg C.
    pub t_lo: f64,
    /// Carbon masses, GtC.
    pub m_at: f64,
    pub m_up: f64,
    pub m_lo: f64,
}

impl ClimateState {
    pub fn masses(&self) -> [f64; 3] {
        [self.m_at, self.m_up, self.m_lo]
    }

    pub fn total_carbon(&self) -> f64 {
        self.m_at + self.m_up + self.m_lo
    }
}

/// One region's state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionState {
    /// Capital, trillion USD.
    pub capital: f64,
    /// Labor (population), millions.
    pub labor: f64,
    /// Total factor productivity.
    pub tfp: f64,
    /// Carbon intensity of economic activity.
    pub sigma: f64,
    /// Trade balance, trillion USD, signed.
    pub balance: f64,
}

/// Full world state at one timestep.
///
/// `theta1` is the time-varying mitigation-cost coefficient, recomputed from
/// sigma each step rather than stored in the region parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldState {
    pub step: u32,
    pub climate: ClimateState,
    pub regions: Vec<RegionState>,
    pub theta1: Vec<f64>,
}

impl WorldState {
    pub fn num_regions(&self) -> usize {
        self.regions.len()
    }

    /// Returns the first non-finite field, if any, as (field name, value).
    pub fn find_non_finite(&self) -> Option<(String, f64)> {
        let climate = [
            ("t_at", self.climate.t_at),
            ("t_lo", self.climate.t_lo),
            ("m_at", self.climate.m_at),
            ("m_up", self.climate.m_up),
            ("m_lo", self.climate.m_lo),
        ];
        for (name, v) in climate {
            if !v.is_finite() {
                return Some((name.to_string(), v));
            }
        }
        for (i, r) in self.regions.iter().enumerate() {
            let fields = [
                ("capital", r.capital),
                ("labor", r.labor),
                ("tfp", r.tfp),
                ("sigma", r.sigma),
                ("balance", r.balance),
            ];
            for (name, v) in fields {
                if !v.is_finite() {
                    return Some((format!("regions[{i}].{name}"), v));
                }
            }
        }
        for (i, v) in self.theta1.iter().enumerate() {
            if !v.is_finite() {
                return Some((format!("theta1[{i}]"), *v));
            }
        }
        None
    }
}
