//! Orchestrates negotiation stages and the activity step, producing
//! deterministic rollouts.
//!
//! The activity step executes in this exact order: mitigation-cost
//! coefficient, damages, abatement, production, gross output, interest
//! accrual, investment, the three bid normalizations, tariffed and domestic
//! consumption, aggregation, utility, balance update, then the temperature
//! step (from the pre-update carbon mass), the carbon step, and finally the
//! per-region capital, labor, technology, and carbon-intensity updates.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::actions::{ActionGrid, ActionMask, ActionSet};
use crate::agents::{Observation, Policy, PolicySpec, PublicRegion};
use crate::climate;
use crate::econ;
use crate::error::{Error, Result};
use crate::negotiation::{build_masks, AgreementState, Proposal, ProtocolKind};
use crate::params::EmissionsForm;
use crate::scenario::Scenario;
use crate::state::WorldState;
use crate::trade;

pub const ROLLOUT_SCHEMA_VERSION: u32 = 1;

/// Protocol selection plus its knobs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolSpec {
    pub kind: ProtocolKind,
    /// Mitigation-correction coefficient for unilateral contracts.
    pub unilateral_alpha: f64,
    /// When false, agreements are not enforced through masks; compliance
    /// flags are recorded instead.
    pub enforce_masks: bool,
}

impl ProtocolSpec {
    pub fn new(kind: ProtocolKind) -> Self {
        Self {
            kind,
            unilateral_alpha: 1.0,
            enforce_masks: true,
        }
    }
}

/// Named, platform-independent RNG sub-streams for one episode.
///
/// Streams are ChaCha8 generators keyed by the little-endian layout
/// `[episode seed | stream id | perturbation | zero padding]`.
#[derive(Debug, Clone, Copy)]
pub struct EpisodeRng {
    pub seed: u64,
}

impl EpisodeRng {
    const PROTOCOL_STREAM: u64 = 0;
    const REGION_STREAM_BASE: u64 = 1;

    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    fn stream(&self, id: u64, perturbation: u64) -> ChaCha8Rng {
        let mut key = [0u8; 32];
        key[0..8].copy_from_slice(&self.seed.to_le_bytes());
        key[8..16].copy_from_slice(&id.to_le_bytes());
        key[16..24].copy_from_slice(&perturbation.to_le_bytes());
        ChaCha8Rng::from_seed(key)
    }

    pub fn protocol_stream(&self) -> ChaCha8Rng {
        self.stream(Self::PROTOCOL_STREAM, 0)
    }

    pub fn region_stream(&self, region: usize, perturbation: u64) -> ChaCha8Rng {
        self.stream(Self::REGION_STREAM_BASE + region as u64, perturbation)
    }
}

/// Clamp and adjustment counters accumulated over an episode.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub damage_clamps: u64,
    pub abatement_clamps: u64,
    pub consumption_clamps: u64,
    pub mask_adjustments: u64,
}

/// Global quantities recorded after each step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepGlobal {
    pub step: u32,
    pub t_at: f64,
    pub t_lo: f64,
    pub m_at: f64,
    pub m_up: f64,
    pub m_lo: f64,
    /// Total emissions fed into the carbon step.
    pub e_total: f64,
    /// Accepted deals enacted this step (0 outside deal-forming protocols).
    pub accepted_deals: u32,
}

/// Per-step, per-region record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionRow {
    pub step: u32,
    pub region: usize,
    pub actions: ActionSet,
    /// Start-of-step state.
    pub labor: f64,
    pub capital: f64,
    pub tfp: f64,
    pub sigma: f64,
    pub production: f64,
    pub gross_output: f64,
    /// Applied (clamped) fractions, so `gross_output` factors exactly.
    pub damage_fraction: f64,
    pub abatement_fraction: f64,
    pub theta1: f64,
    pub emissions: f64,
    pub investment: f64,
    /// Realized imports from each region.
    pub imports: Vec<f64>,
    pub exports_total: f64,
    pub consumption_dom: f64,
    /// Post-tariff foreign consumption per counterpart.
    pub consumption_for: Vec<f64>,
    pub consumption_agg: f64,
    pub utility: f64,
    /// Balance after interest and the trade update.
    pub balance: f64,
    pub tariff_revenue: f64,
    /// Cumulative reserve fund after this step.
    pub reserve_fund: f64,
    /// Minimum mitigation rate agreed for this step.
    pub agreed_min_rate: f64,
    /// Chosen mitigation meets the agreed minimum.
    pub mitigation_compliant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RolloutMeta {
    pub schema_version: u32,
    pub seed: u64,
    pub config_hash: String,
    pub protocol: String,
    pub policies: Vec<String>,
    pub start_year: i32,
    pub delta_years: u32,
    pub horizon: u32,
    pub region_ids: Vec<String>,
    pub enforce_masks: bool,
    pub diagnostics: Diagnostics,
}

/// Complete record of one episode: `horizon x regions` rows plus per-step
/// globals.
#[derive(Debug, Clone, PartialEq)]
pub struct RolloutRecord {
    pub meta: RolloutMeta,
    pub globals: Vec<StepGlobal>,
    pub rows: Vec<RegionRow>,
}

impl RolloutRecord {
    pub fn num_regions(&self) -> usize {
        self.meta.region_ids.len()
    }

    pub fn final_t_at(&self) -> f64 {
        self.globals.last().map(|g| g.t_at).unwrap_or(0.0)
    }

    /// Atmospheric temperature at a calendar year, when the year falls on a
    /// step boundary within the horizon.
    pub fn t_at_in_year(&self, year: i32) -> Option<f64> {
        let offset = year - self.meta.start_year;
        if offset <= 0 || offset % self.meta.delta_years as i32 != 0 {
            return None;
        }
        let state_index = (offset / self.meta.delta_years as i32) as usize;
        self.globals.get(state_index - 1).map(|g| g.t_at)
    }

    pub fn cumulative_production(&self) -> f64 {
        self.rows.iter().map(|r| r.production).sum()
    }

    pub fn terminal_production(&self) -> f64 {
        let last = self.meta.horizon - 1;
        self.rows
            .iter()
            .filter(|r| r.step == last)
            .map(|r| r.production)
            .sum()
    }

    pub fn cumulative_consumption(&self) -> f64 {
        self.rows.iter().map(|r| r.consumption_agg).sum()
    }

    pub fn cumulative_emissions(&self) -> f64 {
        self.globals.iter().map(|g| g.e_total).sum()
    }

    /// Per-region discounted utility sums.
    pub fn discounted_utilities(&self, discount: f64) -> Vec<f64> {
        let n = self.num_regions();
        let mut acc = vec![0.0; n];
        for row in &self.rows {
            acc[row.region] += discount.powi(row.step as i32) * row.utility;
        }
        acc
    }
}

/// Output of one activity step.
#[derive(Debug, Clone)]
pub struct StepOutput {
    pub state: WorldState,
    pub rewards: Vec<f64>,
    pub global: StepGlobal,
    pub rows: Vec<RegionRow>,
    pub diagnostics: Diagnostics,
}

/// Executes one activity step in the documented order.
///
/// `reserve_funds` carries the cumulative pre-step funds; the returned rows
/// hold post-step values. Mask compliance is the caller's contract.
pub fn activity_step(
    scenario: &Scenario,
    state: &WorldState,
    actions: &[ActionSet],
    reserve_funds: &[f64],
) -> Result<StepOutput> {
    let g = &scenario.global;
    let n = state.num_regions();
    if actions.len() != n {
        return Err(Error::Config(format!(
            "expected {n} action sets, got {}",
            actions.len()
        )));
    }
    let t_paper = state.step + 1;
    let mut diagnostics = Diagnostics::default();

    let mut theta1 = vec![0.0; n];
    let mut damage = vec![0.0; n];
    let mut abate = vec![0.0; n];
    let mut production = vec![0.0; n];
    let mut gross = vec![0.0; n];
    let mut balances = vec![0.0; n];
    let mut investment = vec![0.0; n];
    let mut bids: Vec<Vec<f64>> = actions.iter().map(|a| a.bids.clone()).collect();

    for i in 0..n {
        let r = &state.regions[i];
        theta1[i] = econ::mitigation_cost_coeff(r.sigma, t_paper, g);
        let mut d = econ::damage_fraction(state.climate.t_at, g.a1, g.a2);
        if d < 0.0 {
            d = 0.0;
            diagnostics.damage_clamps += 1;
        }
        damage[i] = d;
        let mut a = econ::abatement_fraction(theta1[i], actions[i].mitigation, g.theta2);
        if a < 0.0 {
            a = 0.0;
            diagnostics.abatement_clamps += 1;
        }
        abate[i] = a;
        production[i] = econ::production(r.tfp, r.capital, r.labor, g.gamma);
        gross[i] = econ::gross_output(damage[i], abate[i], production[i]);
        balances[i] = trade::accrue_interest(r.balance, g.interest_rate);
        investment[i] = gross[i] * actions[i].savings;
        bids[i][i] = 0.0;
    }

    let export_limits: Vec<f64> = actions.iter().map(|a| a.export_limit).collect();
    let tariffs: Vec<Vec<f64>> = actions.iter().map(|a| a.tariffs.clone()).collect();
    let k0: Vec<f64> = scenario.regions.iter().map(|r| r.k0).collect();
    let flows = trade::settle_trade(
        bids,
        &gross,
        &investment,
        &export_limits,
        &tariffs,
        &balances,
        &k0,
        g.debt_scale,
    );

    let mut rewards = vec![0.0; n];
    let mut rows = Vec::with_capacity(n);
    for i in 0..n {
        let imports_total: f64 = flows.imports[i].iter().sum();
        let (c_dom, clamped) =
            trade::domestic_consumption(gross[i], actions[i].savings, flows.exports[i]);
        if clamped {
            diagnostics.consumption_clamps += 1;
        }
        let foreign: Vec<f64> = (0..n)
            .filter(|j| *j != i)
            .map(|j| flows.tariffed[i][j])
            .collect();
        let c_agg =
            trade::aggregate_consumption(c_dom, &foreign, g.lambda_arm, g.psi_dom, g.psi_for)?;
        rewards[i] = trade::utility(state.regions[i].labor, c_agg, g.alpha_util)?;
        if !rewards[i].is_finite() {
            // Isoelastic utility diverges at zero consumption for alpha > 1.
            return Err(Error::NonFinite {
                step: state.step,
                field: format!("utility[{i}]"),
                dump: format!(
                    "consumption_agg = {c_agg}, labor = {}, alpha = {}",
                    state.regions[i].labor, g.alpha_util
                ),
            });
        }
        balances[i] =
            trade::update_balance(balances[i], imports_total, flows.exports[i], g.delta_years);

        rows.push(RegionRow {
            step: state.step,
            region: i,
            actions: actions[i].clone(),
            labor: state.regions[i].labor,
            capital: state.regions[i].capital,
            tfp: state.regions[i].tfp,
            sigma: state.regions[i].sigma,
            production: production[i],
            gross_output: gross[i],
            damage_fraction: damage[i],
            abatement_fraction: abate[i],
            theta1: theta1[i],
            emissions: 0.0,
            investment: investment[i],
            imports: flows.imports[i].clone(),
            exports_total: flows.exports[i],
            consumption_dom: c_dom,
            consumption_for: flows.tariffed[i].clone(),
            consumption_agg: c_agg,
            utility: rewards[i],
            balance: balances[i],
            tariff_revenue: flows.tariff_revenue[i],
            reserve_fund: reserve_funds[i] + flows.tariff_revenue[i],
            agreed_min_rate: 0.0,
            mitigation_compliant: true,
        });
    }

    // Emissions, then temperature from the pre-update carbon mass, then the
    // carbon step itself.
    let e_land = climate::land_emissions(t_paper, g);
    let mut e_total = 0.0;
    for i in 0..n {
        let r = &state.regions[i];
        let e_i = match g.emissions_form {
            EmissionsForm::CarbonEq => r.sigma * (1.0 - actions[i].mitigation) * production[i],
            EmissionsForm::SigmaTEq => {
                e_land + r.sigma * r.tfp * (1.0 - actions[i].mitigation) * production[i]
            }
        };
        rows[i].emissions = e_i;
        e_total += e_i;
    }
    if g.emissions_form == EmissionsForm::CarbonEq {
        e_total += e_land;
    }

    let f_ex = g.f_ex_series[state.step as usize];
    let forcing = climate::radiative_forcing(state.climate.m_at, f_ex, g)?;
    let (t_at, t_lo) =
        climate::step_temperature(state.climate.t_at, state.climate.t_lo, forcing, g);
    let masses = climate::step_carbon(state.climate.masses(), e_total, g)?;

    let mut regions = Vec::with_capacity(n);
    let mut next_theta1 = Vec::with_capacity(n);
    for i in 0..n {
        let r = &state.regions[i];
        let params = &scenario.regions[i];
        let capital = econ::step_capital(
            r.capital,
            gross[i],
            actions[i].savings,
            scenario.delta_k_for(i),
            g.delta_years,
        );
        let labor = econ::step_population(r.labor, params);
        let tfp = econ::step_technology(r.tfp, t_paper, params, g);
        let sigma = econ::step_carbon_intensity(r.sigma, t_paper, params, g.delta_years);
        next_theta1.push(econ::mitigation_cost_coeff(sigma, t_paper + 1, g));
        regions.push(crate::state::RegionState {
            capital,
            labor,
            tfp,
            sigma,
            balance: balances[i],
        });
    }

    let new_state = WorldState {
        step: state.step + 1,
        climate: crate::state::ClimateState {
            t_at,
            t_lo,
            m_at: masses[0],
            m_up: masses[1],
            m_lo: masses[2],
        },
        regions,
        theta1: next_theta1,
    };
    if let Some((field, _)) = new_state.find_non_finite() {
        return Err(Error::NonFinite {
            step: state.step,
            field,
            dump: format!("{new_state:?}"),
        });
    }

    let global = StepGlobal {
        step: state.step,
        t_at,
        t_lo,
        m_at: masses[0],
        m_up: masses[1],
        m_lo: masses[2],
        e_total,
        accepted_deals: 0,
    };

    Ok(StepOutput {
        state: new_state,
        rewards,
        global,
        rows,
        diagnostics,
    })
}

fn hash_config(scenario: &Scenario) -> String {
    let bytes = serde_json::to_vec(scenario).expect("scenario serializes");
    let digest = Sha256::digest(&bytes);
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

fn observation(
    state: &WorldState,
    region: usize,
    agreements: &AgreementState,
    proposals: &[Proposal],
    compliance: &[bool],
) -> Observation {
    Observation {
        step: state.step,
        region,
        climate: state.climate,
        own: state.regions[region],
        theta1: state.theta1[region],
        public: state
            .regions
            .iter()
            .map(|r| PublicRegion {
                labor: r.labor,
                tfp: r.tfp,
                capital: r.capital,
                sigma: r.sigma,
            })
            .collect(),
        agreed_min_rate: agreements.min_mitigation_rate.clone(),
        incoming: proposals
            .iter()
            .filter(|p| p.recipient == region)
            .copied()
            .collect(),
        outgoing: proposals
            .iter()
            .filter(|p| p.proposer == region)
            .copied()
            .collect(),
        compliance: compliance.to_vec(),
    }
}

/// Runs one full episode: per step, the protocol sub-stages, agreement
/// resolution, mask construction, policy queries, and the activity step.
pub fn run_episode(
    scenario: &Scenario,
    protocol: impl Into<ProtocolSpec>,
    policy_specs: &[PolicySpec],
    seed: u64,
) -> Result<RolloutRecord> {
    let protocol_spec: ProtocolSpec = protocol.into();
    let g = &scenario.global;
    let n = scenario.num_regions();
    if policy_specs.len() != n {
        return Err(Error::Config(format!(
            "scenario has {n} regions but {} policies were supplied",
            policy_specs.len()
        )));
    }
    scenario.validate()?;

    let grid = ActionGrid::new(g.num_action_levels);
    let rng = EpisodeRng::new(seed);
    let mut protocol_rng = rng.protocol_stream();
    let mut region_rngs: Vec<ChaCha8Rng> = (0..n)
        .map(|i| rng.region_stream(i, policy_specs[i].stream_seed()))
        .collect();
    let mut policies: Vec<Box<dyn Policy>> = policy_specs
        .iter()
        .map(|s| s.instantiate(n, grid))
        .collect::<Result<_>>()?;
    for p in policies.iter_mut() {
        p.reset(seed);
    }
    let mut proto = protocol_spec
        .kind
        .instantiate(g.num_action_levels, protocol_spec.unilateral_alpha);

    let mut state = scenario.initial_state();
    let mut reserve_funds = vec![0.0; n];
    let mut compliance = vec![true; n];
    let mut diagnostics = Diagnostics::default();
    let mut globals = Vec::with_capacity(g.horizon as usize);
    let mut rows = Vec::with_capacity(g.horizon as usize * n);

    for _ in 0..g.horizon {
        proto.begin_step(n, &mut protocol_rng);
        let unconstrained = AgreementState::unconstrained(n);
        for stage in 0..proto.num_stages() {
            for region in 0..n {
                let view = proto.view(stage, region);
                // Later stages observe the proposals exchanged so far.
                let exchanged = proto.proposals().to_vec();
                let obs = observation(&state, region, &unconstrained, &exchanged, &compliance);
                let action = policies[region].negotiate(&obs, &view, &mut region_rngs[region]);
                proto.submit(stage, region, action)?;
            }
        }
        let agreements = proto.resolve(n)?;
        // Masks are always built so that empty-mask errors surface before the
        // activity stage, even in non-binding mode.
        let masks = build_masks(&agreements, g.num_action_levels, n)?;
        let step_proposals: Vec<Proposal> = proto.proposals().to_vec();

        let all_allowed = ActionMask::all_allowed(g.num_action_levels, n);
        let mut actions = Vec::with_capacity(n);
        for region in 0..n {
            let obs = observation(&state, region, &agreements, &step_proposals, &compliance);
            let mask = if protocol_spec.enforce_masks {
                &masks[region]
            } else {
                &all_allowed
            };
            actions.push(policies[region].act(&obs, mask, &mut region_rngs[region]));
        }
        proto.transform_actions(&mut actions);

        for (region, action) in actions.iter().enumerate() {
            if protocol_spec.enforce_masks {
                if let Err(head) = masks[region].permits(grid, action) {
                    return Err(Error::MaskViolation { region, head });
                }
            }
            compliance[region] =
                action.mitigation >= agreements.min_mitigation_rate[region] - 1e-12;
        }

        let mut out = activity_step(scenario, &state, &actions, &reserve_funds)?;
        out.global.accepted_deals = agreements.ledger.len() as u32;
        for (i, row) in out.rows.iter_mut().enumerate() {
            row.agreed_min_rate = agreements.min_mitigation_rate[i];
            row.mitigation_compliant = compliance[i];
            reserve_funds[i] = row.reserve_fund;
        }
        diagnostics.damage_clamps += out.diagnostics.damage_clamps;
        diagnostics.abatement_clamps += out.diagnostics.abatement_clamps;
        diagnostics.consumption_clamps += out.diagnostics.consumption_clamps;
        globals.push(out.global);
        rows.append(&mut out.rows);
        state = out.state;
    }
    diagnostics.mask_adjustments = policies.iter().map(|p| p.mask_adjustments()).sum();

    Ok(RolloutRecord {
        meta: RolloutMeta {
            schema_version: ROLLOUT_SCHEMA_VERSION,
            seed,
            config_hash: hash_config(scenario),
            protocol: protocol_spec.kind.to_string(),
            policies: policy_specs.iter().map(|p| p.to_string()).collect(),
            start_year: g.start_year,
            delta_years: g.delta_years,
            horizon: g.horizon,
            region_ids: scenario.regions.iter().map(|r| r.id.clone()).collect(),
            enforce_masks: protocol_spec.enforce_masks,
            diagnostics,
        },
        globals,
        rows,
    })
}

impl From<ProtocolKind> for ProtocolSpec {
    fn from(kind: ProtocolKind) -> Self {
        ProtocolSpec::new(kind)
    }
}

/// Per-episode metrics aggregated by [`monte_carlo`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeMetrics {
    pub seed: u64,
    pub t_at_end: f64,
    pub t_at_2100: Option<f64>,
    pub cumulative_production: f64,
    pub terminal_production: f64,
    pub cumulative_consumption: f64,
    pub cumulative_emissions: f64,
    pub mean_discounted_utility: f64,
}

impl EpisodeMetrics {
    pub fn from_rollout(r: &RolloutRecord, discount: f64) -> Self {
        let utilities = r.discounted_utilities(discount);
        Self {
            seed: r.meta.seed,
            t_at_end: r.final_t_at(),
            t_at_2100: r.t_at_in_year(2100),
            cumulative_production: r.cumulative_production(),
            terminal_production: r.terminal_production(),
            cumulative_consumption: r.cumulative_consumption(),
            cumulative_emissions: r.cumulative_emissions(),
            mean_discounted_utility: utilities.iter().sum::<f64>() / utilities.len() as f64,
        }
    }
}

/// Mean and population standard deviation per metric across seeds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricStats {
    pub t_at_end: f64,
    pub t_at_2100: Option<f64>,
    pub cumulative_production: f64,
    pub terminal_production: f64,
    pub cumulative_consumption: f64,
    pub cumulative_emissions: f64,
    pub mean_discounted_utility: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloSummary {
    pub per_seed: Vec<EpisodeMetrics>,
    pub mean: MetricStats,
    pub std: MetricStats,
}

fn stats<F: Fn(&EpisodeMetrics) -> f64>(metrics: &[EpisodeMetrics], f: F) -> (f64, f64) {
    let n = metrics.len() as f64;
    let mean = metrics.iter().map(&f).sum::<f64>() / n;
    let var = metrics.iter().map(|m| (f(m) - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

fn opt_stats<F: Fn(&EpisodeMetrics) -> Option<f64>>(
    metrics: &[EpisodeMetrics],
    f: F,
) -> (Option<f64>, Option<f64>) {
    let values: Vec<f64> = metrics.iter().filter_map(&f).collect();
    if values.len() != metrics.len() || values.is_empty() {
        return (None, None);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (Some(mean), Some(var.sqrt()))
}

pub fn summarize(metrics: Vec<EpisodeMetrics>) -> MonteCarloSummary {
    let (mean_t, std_t) = stats(&metrics, |m| m.t_at_end);
    let (mean_t2100, std_t2100) = opt_stats(&metrics, |m| m.t_at_2100);
    let (mean_cp, std_cp) = stats(&metrics, |m| m.cumulative_production);
    let (mean_tp, std_tp) = stats(&metrics, |m| m.terminal_production);
    let (mean_cc, std_cc) = stats(&metrics, |m| m.cumulative_consumption);
    let (mean_ce, std_ce) = stats(&metrics, |m| m.cumulative_emissions);
    let (mean_u, std_u) = stats(&metrics, |m| m.mean_discounted_utility);
    MonteCarloSummary {
        per_seed: metrics,
        mean: MetricStats {
            t_at_end: mean_t,
            t_at_2100: mean_t2100,
            cumulative_production: mean_cp,
            terminal_production: mean_tp,
            cumulative_consumption: mean_cc,
            cumulative_emissions: mean_ce,
            mean_discounted_utility: mean_u,
        },
        std: MetricStats {
            t_at_end: std_t,
            t_at_2100: std_t2100,
            cumulative_production: std_cp,
            terminal_production: std_tp,
            cumulative_consumption: std_cc,
            cumulative_emissions: std_ce,
            mean_discounted_utility: std_u,
        },
    }
}

/// Runs one episode per seed (in parallel when `threads != Some(1)`) and
/// aggregates end-of-horizon metrics. The returned rollouts follow seed
/// order regardless of scheduling.
pub fn monte_carlo(
    scenario: &Scenario,
    protocol: ProtocolSpec,
    policy_specs: &[PolicySpec],
    seeds: &[u64],
    threads: Option<usize>,
) -> Result<(Vec<RolloutRecord>, MonteCarloSummary)> {
    if seeds.is_empty() {
        return Err(Error::Config("monte carlo needs at least one seed".into()));
    }
    let run = |seed: &u64| run_episode(scenario, protocol, policy_specs, *seed);
    let rollouts: Vec<RolloutRecord> = match threads {
        Some(1) => seeds.iter().map(run).collect::<Result<_>>()?,
        Some(k) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(k)
                .build()
                .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
            pool.install(|| seeds.par_iter().map(run).collect::<Result<_>>())?
        }
        None => seeds.par_iter().map(run).collect::<Result<_>>()?,
    };
    let metrics = rollouts
        .iter()
        .map(|r| EpisodeMetrics::from_rollout(r, scenario.global.discount))
        .collect();
    Ok((rollouts, summarize(metrics)))
}
