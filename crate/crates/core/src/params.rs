//! Structural parameters: world-level constants and per-region calibrated constants.
//!
//! Units follow the region-table scale: population in millions, capital and
//! output in trillion USD, carbon in GtC, temperatures in degrees Celsius
//! above preindustrial.

use serde::{Deserialize, Serialize};

/// Which emission formula feeds the carbon-mass update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum EmissionsForm {
    /// `E_i = sigma_i * (1 - mu_i) * Y_i`, land emissions added once globally.
    #[default]
    CarbonEq,
    /// `E_i = E_land + sigma_i * A_i * (1 - mu_i) * Y_i`, summed over regions
    /// (land emissions enter once per region).
    SigmaTEq,
}

/// World-level structural constants shared by every region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalParams {
    /// Heat-transfer transition matrix (2x2, per step).
    pub phi_t: [[f64; 2]; 2],
    /// Forcing weight; entry 1 is xi_1, entry 2 is structurally zero.
    pub b_t: [f64; 2],
    /// Carbon transition matrix (3x3, per step); entries (1,3) and (3,1) are
    /// structurally zero.
    pub phi_m: [[f64; 3]; 3],
    /// Emission weight; entry 1 is xi_2, entries 2 and 3 are structurally zero.
    pub b_m: [f64; 3],
    /// Radiative forcing at CO2 doubling, W/m^2.
    pub f_2x: f64,
    /// Preindustrial atmospheric carbon, GtC.
    pub m_at_1750: f64,
    /// Exogenous forcing per step, W/m^2; must cover the horizon.
    pub f_ex_series: Vec<f64>,
    /// Capital elasticity, in [0,1].
    pub gamma: f64,
    /// Long-term TFP growth.
    pub eta: f64,
    /// Annual capital depreciation rate, in [0,1].
    pub delta_k: f64,
    /// Damage-function coefficients (linear and quadratic in t_at).
    pub a1: f64,
    pub a2: f64,
    /// Mitigation cost exponent, > 1.
    pub theta2: f64,
    /// Backstop price and its per-step decay.
    pub p_b: f64,
    pub delta_pb: f64,
    /// Base-year land emissions and their per-step decay.
    pub e_l0: f64,
    pub delta_el: f64,
    /// Isoelastic utility curvature; must not equal 1.
    pub alpha_util: f64,
    /// Armington substitution parameter and share parameters.
    pub lambda_arm: f64,
    pub psi_dom: f64,
    pub psi_for: f64,
    /// Per-step welfare discount factor, in (0,1].
    pub discount: f64,
    /// Interest rate applied to trade balances each step.
    pub interest_rate: f64,
    /// Multiplier in the debt-to-initial-capital ratio.
    pub debt_scale: f64,
    /// Years per step.
    pub delta_years: u32,
    /// Steps per episode.
    pub horizon: u32,
    /// Number of discrete levels for rate actions.
    pub num_action_levels: usize,
    #[serde(default)]
    pub emissions_form: EmissionsForm,
    /// Calendar year of the initial state (step index 0).
    pub start_year: i32,
}

impl GlobalParams {
    pub fn new_defaults() -> Self {
        Self {
            phi_t: [[0.8718106290322581, 0.008844], [0.025, 0.975]],
            b_t: [0.1005, 0.0],
            phi_m: [
                [0.88, 0.196, 0.0],
                [0.12, 0.797, 0.0014651162790697675],
                [0.0, 0.007, 0.9985348837209302],
            ],
            b_m: [0.003, 0.0, 0.0],
            f_2x: 3.6813,
            m_at_1750: 588.0,
            f_ex_series: vec![0.0; 20],
            gamma: 0.3,
            eta: 0.0033,
            delta_k: 0.1,
            a1: 0.0,
            a2: 0.00236,
            theta2: 2.6,
            p_b: 550.0,
            delta_pb: 0.025,
            e_l0: 2.6,
            delta_el: 0.115,
            alpha_util: 0.5,
            lambda_arm: 0.5,
            psi_dom: 0.5,
            psi_for: 0.02,
            discount: 0.92826,
            interest_rate: 0.10,
            debt_scale: 10.0,
            delta_years: 5,
            horizon: 20,
            num_action_levels: 10,
            emissions_form: EmissionsForm::CarbonEq,
            start_year: 2020,
        }
    }

    /// Capital retention per step, `(1 - delta_k)^delta_years`.
    pub fn phi_k(&self, delta_k: f64) -> f64 {
        (1.0 - delta_k).powi(self.delta_years as i32)
    }
}

/// Per-region calibrated constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionParams {
    pub id: String,
    /// Initial TFP.
    pub a0: f64,
    /// Initial capital, trillion USD.
    pub k0: f64,
    /// Initial population, millions.
    pub l0: f64,
    /// Convergence population, millions.
    pub l_a: f64,
    /// Population convergence rate.
    pub l_g: f64,
    /// Short-term TFP growth.
    pub g_a: f64,
    /// TFP growth decay.
    pub delta_a: f64,
    /// Initial carbon intensity.
    pub sigma0: f64,
    /// Carbon-intensity dynamics.
    pub g_sigma: f64,
    pub delta_sigma: f64,
}
