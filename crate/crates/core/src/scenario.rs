//! Scenario assembly and validation.
//!
//! A scenario couples the world-level constants, the per-region parameter
//! table, and the initial climate state. Validation is pure and reports every
//! violated invariant in a stable order.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{GlobalParams, RegionParams};
use crate::state::{ClimateState, RegionState, WorldState};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub global: GlobalParams,
    pub regions: Vec<RegionParams>,
    pub initial_climate: ClimateState,
    /// Optional per-region capital depreciation overriding the global rate.
    #[serde(default)]
    pub delta_k_overrides: BTreeMap<String, f64>,
}

impl Scenario {
    pub fn num_regions(&self) -> usize {
        self.regions.len()
    }

    /// Effective capital depreciation rate for region `idx`.
    pub fn delta_k_for(&self, idx: usize) -> f64 {
        self.delta_k_overrides
            .get(&self.regions[idx].id)
            .copied()
            .unwrap_or(self.global.delta_k)
    }

    /// Validates the whole scenario, collecting every violation.
    // Negated comparisons here reject NaN, which `<` would let through.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<()> {
        let mut issues = validation_issues(&self.global, &self.regions);
        let c = &self.initial_climate;
        for (name, v) in [("m_at", c.m_at), ("m_up", c.m_up), ("m_lo", c.m_lo)] {
            if !(v >= 0.0) {
                issues.push(format!("initial climate {name} must be >= 0, got {v}"));
            }
        }
        for (id, v) in &self.delta_k_overrides {
            if !self.regions.iter().any(|r| &r.id == id) {
                issues.push(format!("delta_k override references unknown region '{id}'"));
            }
            if !(0.0..=1.0).contains(v) {
                issues.push(format!("delta_k override for '{id}' out of [0,1]: {v}"));
            }
        }
        if issues.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(issues))
        }
    }

    /// Initial world state at step 0. `theta1` is seeded from the initial
    /// sigma values at the first-step time index.
    pub fn initial_state(&self) -> WorldState {
        let regions: Vec<RegionState> = self
            .regions
            .iter()
            .map(|r| RegionState {
                capital: r.k0,
                labor: r.l0,
                tfp: r.a0,
                sigma: r.sigma0,
                balance: 0.0,
            })
            .collect();
        let theta1 = self
            .regions
            .iter()
            .map(|r| crate::econ::mitigation_cost_coeff(r.sigma0, 1, &self.global))
            .collect();
        WorldState {
            step: 0,
            climate: self.initial_climate,
            regions,
            theta1,
        }
    }
}

/// Validates globals and region parameters, returning the full list of
/// violations (empty when the scenario is acceptable).
pub fn validate_scenario(global: &GlobalParams, regions: &[RegionParams]) -> Result<()> {
    let issues = validation_issues(global, regions);
    if issues.is_empty() {
        Ok(())
    } else {
        Err(Error::Validation(issues))
    }
}

// Negated comparisons here reject NaN, which `<` would let through.
#[allow(clippy::neg_cmp_op_on_partial_ord)]
fn validation_issues(g: &GlobalParams, regions: &[RegionParams]) -> Vec<String> {
    let mut issues = Vec::new();

    for (r, row) in g.phi_t.iter().enumerate() {
        for (c, v) in row.iter().enumerate() {
            if !v.is_finite() {
                issues.push(format!("phi_t[{}][{}] is not finite", r + 1, c + 1));
            }
        }
    }
    for (r, row) in g.phi_m.iter().enumerate() {
        for (c, v) in row.iter().enumerate() {
            if !v.is_finite() {
                issues.push(format!("phi_m[{}][{}] is not finite", r + 1, c + 1));
            }
        }
    }
    // Structural zeros of the carbon system and forcing weights.
    if g.phi_m[0][2] != 0.0 {
        issues.push(format!(
            "phi_m structural zero violated at (1,3): {}",
            g.phi_m[0][2]
        ));
    }
    if g.phi_m[2][0] != 0.0 {
        issues.push(format!(
            "phi_m structural zero violated at (3,1): {}",
            g.phi_m[2][0]
        ));
    }
    if g.b_m[1] != 0.0 {
        issues.push(format!("b_m structural zero violated at 2: {}", g.b_m[1]));
    }
    if g.b_m[2] != 0.0 {
        issues.push(format!("b_m structural zero violated at 3: {}", g.b_m[2]));
    }
    if g.b_t[1] != 0.0 {
        issues.push(format!("b_t structural zero violated at 2: {}", g.b_t[1]));
    }

    if !(0.0..=1.0).contains(&g.gamma) {
        issues.push(format!("gamma out of [0,1]: {}", g.gamma));
    }
    for (name, v) in [
        ("delta_k", g.delta_k),
        ("delta_pb", g.delta_pb),
        ("delta_el", g.delta_el),
    ] {
        if !(0.0..=1.0).contains(&v) {
            issues.push(format!("{name} out of [0,1]: {v}"));
        }
    }
    if !(g.delta_el > 0.0 && g.delta_el < 1.0) {
        issues.push(format!("delta_el out of (0,1): {}", g.delta_el));
    }
    if !(g.eta >= 0.0) {
        issues.push(format!("eta must be >= 0: {}", g.eta));
    }
    if !(g.theta2 > 1.0) {
        issues.push(format!("theta2 must be > 1: {}", g.theta2));
    }
    if !(g.p_b > 0.0) {
        issues.push(format!("p_b must be > 0: {}", g.p_b));
    }
    if !(g.e_l0 >= 0.0) {
        issues.push(format!("e_l0 must be >= 0: {}", g.e_l0));
    }
    if !(g.alpha_util >= 0.0) || g.alpha_util == 1.0 {
        issues.push(format!(
            "alpha_util must be >= 0 and != 1: {}",
            g.alpha_util
        ));
    }
    if g.lambda_arm == 0.0 {
        issues.push("lambda_arm must be nonzero".to_string());
    }
    if !(g.psi_dom > 0.0) {
        issues.push(format!("psi_dom must be > 0: {}", g.psi_dom));
    }
    if !(g.psi_for > 0.0) {
        issues.push(format!("psi_for must be > 0: {}", g.psi_for));
    }
    if !(g.discount > 0.0 && g.discount <= 1.0) {
        issues.push(format!("discount out of (0,1]: {}", g.discount));
    }
    if g.delta_years < 1 {
        issues.push(format!("delta_years must be >= 1: {}", g.delta_years));
    }
    if g.horizon < 1 {
        issues.push(format!("horizon must be >= 1: {}", g.horizon));
    }
    if g.num_action_levels < 2 {
        issues.push(format!(
            "num_action_levels must be >= 2: {}",
            g.num_action_levels
        ));
    }
    if (g.f_ex_series.len() as u32) < g.horizon {
        issues.push(format!(
            "f_ex_series has {} entries but horizon is {}",
            g.f_ex_series.len(),
            g.horizon
        ));
    }

    let mut seen = std::collections::BTreeSet::new();
    for r in regions {
        if !seen.insert(&r.id) {
            issues.push(format!("duplicate region id '{}'", r.id));
        }
        for (name, v) in [
            ("a0", r.a0),
            ("k0", r.k0),
            ("l0", r.l0),
            ("l_a", r.l_a),
            ("sigma0", r.sigma0),
        ] {
            if !(v > 0.0) {
                issues.push(format!("region '{}': {name} must be > 0, got {v}", r.id));
            }
        }
        for (name, v) in [("g_a", r.g_a), ("delta_a", r.delta_a), ("l_g", r.l_g)] {
            if !v.is_finite() {
                issues.push(format!("region '{}': {name} is not finite", r.id));
            }
        }
        if !(r.delta_sigma >= 0.0 && r.delta_sigma < 1.0) {
            issues.push(format!(
                "region '{}': delta_sigma out of [0,1): {}",
                r.id, r.delta_sigma
            ));
        }
    }

    issues
}

#[cfg(test)]
mod tests {
    use super::*;

    fn region(id: &str) -> RegionParams {
        RegionParams {
            id: id.to_string(),
            a0: 1.872,
            k0: 0.239,
            l0: 476.878,
            l_a: 669.594,
            l_g: 0.034,
            g_a: 0.122,
            delta_a: 0.139,
            sigma0: 0.456,
            g_sigma: 0.0152,
            delta_sigma: 0.001,
        }
    }

    #[test]
    fn default_globals_with_table_row_validate() {
        let g = GlobalParams::new_defaults();
        assert!(validate_scenario(&g, &[region("r01")]).is_ok());
    }

    #[test]
    fn gamma_out_of_range_is_reported() {
        let mut g = GlobalParams::new_defaults();
        g.gamma = 1.5;
        let err = validate_scenario(&g, &[region("r01")]).unwrap_err();
        match err {
            Error::Validation(issues) => {
                assert!(issues.iter().any(|m| m.contains("gamma out of [0,1]")));
            }
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn phi_m_structural_zero_violation_is_reported() {
        let mut g = GlobalParams::new_defaults();
        g.phi_m[0][2] = 0.01;
        let err = validate_scenario(&g, &[region("r01")]).unwrap_err();
        match err {
            Error::Validation(issues) => {
                assert!(issues
                    .iter()
                    .any(|m| m.contains("structural zero violated at (1,3)")));
            }
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn validation_collects_every_violation_in_stable_order() {
        let mut g = GlobalParams::new_defaults();
        g.gamma = -0.2;
        g.theta2 = 0.5;
        g.b_t[1] = 1.0;
        let issues = match validate_scenario(&g, &[region("r01")]) {
            Err(Error::Validation(v)) => v,
            other => panic!("expected validation error, got {other:?}"),
        };
        assert_eq!(issues.len(), 3);
        let again = match validate_scenario(&g, &[region("r01")]) {
            Err(Error::Validation(v)) => v,
            _ => unreachable!(),
        };
        assert_eq!(issues, again);
    }
}
