//! Scenario TOML parsing and serialization.
//!
//! A scenario file carries the world constants in grouped tables and either
//! inlines the region table (`[[regions]]`) or points at a region CSV
//! (`regions_file`, resolved relative to the TOML file).

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{EmissionsForm, GlobalParams, RegionParams};
use crate::scenario::Scenario;
use crate::state::ClimateState;

pub const SCENARIO_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ScenarioFile {
    schema_version: u32,
    world: WorldSection,
    climate: ClimateSection,
    economy: EconomySection,
    welfare: WelfareSection,
    trade: TradeSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    overrides: Option<OverridesSection>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    regions: Vec<RegionEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct WorldSection {
    start_year: i32,
    delta_years: u32,
    horizon: u32,
    num_action_levels: usize,
    emissions_form: EmissionsForm,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    regions_file: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ClimateSection {
    phi_t: [[f64; 2]; 2],
    b_t: [f64; 2],
    phi_m: [[f64; 3]; 3],
    b_m: [f64; 3],
    f_2x: f64,
    m_at_1750: f64,
    f_ex: Vec<f64>,
    e_l0: f64,
    delta_el: f64,
    initial: ClimateState,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct EconomySection {
    gamma: f64,
    eta: f64,
    delta_k: f64,
    a1: f64,
    a2: f64,
    theta2: f64,
    p_b: f64,
    delta_pb: f64,
    g_sigma: f64,
    delta_sigma: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct WelfareSection {
    alpha_util: f64,
    discount: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TradeSection {
    lambda_arm: f64,
    psi_dom: f64,
    psi_for: f64,
    interest_rate: f64,
    debt_scale: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct OverridesSection {
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    delta_k: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RegionEntry {
    id: String,
    a0: f64,
    k0: f64,
    l0: f64,
    l_a: f64,
    delta_a: f64,
    g_a: f64,
    l_g: f64,
    sigma0: f64,
}

fn assemble(file: ScenarioFile, external_regions: Option<Vec<RegionParams>>) -> Result<Scenario> {
    if file.schema_version != SCENARIO_SCHEMA_VERSION {
        return Err(Error::SchemaVersion {
            expected: SCENARIO_SCHEMA_VERSION,
            found: file.schema_version,
        });
    }
    let global = GlobalParams {
        phi_t: file.climate.phi_t,
        b_t: file.climate.b_t,
        phi_m: file.climate.phi_m,
        b_m: file.climate.b_m,
        f_2x: file.climate.f_2x,
        m_at_1750: file.climate.m_at_1750,
        f_ex_series: file.climate.f_ex.clone(),
        gamma: file.economy.gamma,
        eta: file.economy.eta,
        delta_k: file.economy.delta_k,
        a1: file.economy.a1,
        a2: file.economy.a2,
        theta2: file.economy.theta2,
        p_b: file.economy.p_b,
        delta_pb: file.economy.delta_pb,
        e_l0: file.climate.e_l0,
        delta_el: file.climate.delta_el,
        alpha_util: file.welfare.alpha_util,
        lambda_arm: file.trade.lambda_arm,
        psi_dom: file.trade.psi_dom,
        psi_for: file.trade.psi_for,
        discount: file.welfare.discount,
        interest_rate: file.trade.interest_rate,
        debt_scale: file.trade.debt_scale,
        delta_years: file.world.delta_years,
        horizon: file.world.horizon,
        num_action_levels: file.world.num_action_levels,
        emissions_form: file.world.emissions_form,
        start_year: file.world.start_year,
    };
    let regions = match external_regions {
        Some(r) => r,
        None => file
            .regions
            .iter()
            .map(|e| RegionParams {
                id: e.id.clone(),
                a0: e.a0,
                k0: e.k0,
                l0: e.l0,
                l_a: e.l_a,
                l_g: e.l_g,
                g_a: e.g_a,
                delta_a: e.delta_a,
                sigma0: e.sigma0,
                g_sigma: file.economy.g_sigma,
                delta_sigma: file.economy.delta_sigma,
            })
            .collect(),
    };
    if regions.is_empty() {
        return Err(Error::Config(
            "scenario declares no regions (inline or regions_file)".to_string(),
        ));
    }
    let scenario = Scenario {
        global,
        regions,
        initial_climate: file.climate.initial,
        delta_k_overrides: file.overrides.map(|o| o.delta_k).unwrap_or_default(),
    };
    scenario.validate()?;
    Ok(scenario)
}

/// Parses a scenario from TOML text. Regions must be inlined.
pub fn parse_scenario_toml(text: &str) -> Result<Scenario> {
    let file: ScenarioFile =
        toml::from_str(text).map_err(|e| Error::Config(format!("scenario toml: {e}")))?;
    if file.world.regions_file.is_some() {
        return Err(Error::Config(
            "parse_scenario_toml cannot resolve regions_file; use load_scenario".to_string(),
        ));
    }
    assemble(file, None)
}

/// Loads a scenario file from disk, resolving a `regions_file` reference
/// (and injecting the global sigma-dynamics parameters into each region).
pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path)?;
    let file: ScenarioFile =
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let external = match &file.world.regions_file {
        Some(rel) => {
            let table_path = path.parent().unwrap_or_else(|| Path::new(".")).join(rel);
            let csv = std::fs::read_to_string(&table_path)?;
            let mut regions = super::region_table::parse_region_table(&csv)?;
            for r in regions.iter_mut() {
                r.g_sigma = file.economy.g_sigma;
                r.delta_sigma = file.economy.delta_sigma;
            }
            Some(regions)
        }
        None => None,
    };
    assemble(file, external)
}

/// Serializes a scenario to TOML with inline regions. Accepted scenarios
/// round-trip through `parse_scenario_toml` bit-identically.
pub fn scenario_to_toml(scenario: &Scenario) -> Result<String> {
    let g = &scenario.global;
    let file = ScenarioFile {
        schema_version: SCENARIO_SCHEMA_VERSION,
        world: WorldSection {
            start_year: g.start_year,
            delta_years: g.delta_years,
            horizon: g.horizon,
            num_action_levels: g.num_action_levels,
            emissions_form: g.emissions_form,
            regions_file: None,
        },
        climate: ClimateSection {
            phi_t: g.phi_t,
            b_t: g.b_t,
            phi_m: g.phi_m,
            b_m: g.b_m,
            f_2x: g.f_2x,
            m_at_1750: g.m_at_1750,
            f_ex: g.f_ex_series.clone(),
            e_l0: g.e_l0,
            delta_el: g.delta_el,
            initial: scenario.initial_climate,
        },
        economy: EconomySection {
            gamma: g.gamma,
            eta: g.eta,
            delta_k: g.delta_k,
            a1: g.a1,
            a2: g.a2,
            theta2: g.theta2,
            p_b: g.p_b,
            delta_pb: g.delta_pb,
            g_sigma: scenario.regions.first().map(|r| r.g_sigma).unwrap_or(0.0),
            delta_sigma: scenario
                .regions
                .first()
                .map(|r| r.delta_sigma)
                .unwrap_or(0.0),
        },
        welfare: WelfareSection {
            alpha_util: g.alpha_util,
            discount: g.discount,
        },
        trade: TradeSection {
            lambda_arm: g.lambda_arm,
            psi_dom: g.psi_dom,
            psi_for: g.psi_for,
            interest_rate: g.interest_rate,
            debt_scale: g.debt_scale,
        },
        overrides: if scenario.delta_k_overrides.is_empty() {
            None
        } else {
            Some(OverridesSection {
                delta_k: scenario.delta_k_overrides.clone(),
            })
        },
        regions: scenario
            .regions
            .iter()
            .map(|r| RegionEntry {
                id: r.id.clone(),
                a0: r.a0,
                k0: r.k0,
                l0: r.l0,
                l_a: r.l_a,
                delta_a: r.delta_a,
                g_a: r.g_a,
                l_g: r.l_g,
                sigma0: r.sigma0,
            })
            .collect(),
    };
    toml::to_string(&file).map_err(|e| Error::Config(format!("scenario serialization: {e}")))
}
