//! Negotiation protocol framework and the concrete protocols: none,
//! unilateral tariff contracts, bilateral mitigation deals, and climate
//! clubs. Enacted agreements are converted into per-region action masks.
//!
//! Consent rule: a proposal binds nobody unless every implicated region
//! consented. Proposing counts as consent, so the proposer of an accepted
//! deal (and the club proposer) is bound by its own terms.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::actions::{ActionGrid, ActionMask, ActionSet};
use crate::error::{Error, Result};

/// A bilateral mitigation proposal: if enacted, the proposer commits to
/// `rate_proposer` and the recipient to `rate_recipient`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Proposal {
    pub proposer: usize,
    pub recipient: usize,
    pub rate_proposer: f64,
    pub rate_recipient: f64,
}

/// A deal whose recipient accepted it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AcceptedDeal {
    pub proposal: Proposal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClubState {
    pub members: Vec<bool>,
    pub mu_min: f64,
    pub tau_min: f64,
}

/// Resolved agreements for one step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementState {
    /// Per-region minimum mitigation rate. Usually a grid value, but mask
    /// construction accepts any rate in [0, 1].
    pub min_mitigation_rate: Vec<f64>,
    /// Every accepted proposal, in (proposer, recipient) order.
    pub ledger: Vec<AcceptedDeal>,
    pub club: Option<ClubState>,
}

impl AgreementState {
    pub fn unconstrained(num_regions: usize) -> Self {
        Self {
            min_mitigation_rate: vec![0.0; num_regions],
            ledger: Vec::new(),
            club: None,
        }
    }
}

/// What a policy sees during one negotiation sub-stage.
#[derive(Debug, Clone, PartialEq)]
pub struct NegotiationView {
    pub stage: usize,
    /// Proposals addressed to this region (evaluation stage).
    pub incoming: Vec<Proposal>,
    /// Club terms on offer, when a club proposer has spoken.
    pub club_offer: Option<(f64, f64)>,
    /// Whether this region was selected as the club proposer this step.
    pub is_club_proposer: bool,
}

impl NegotiationView {
    fn empty(stage: usize) -> Self {
        Self {
            stage,
            incoming: Vec::new(),
            club_offer: None,
            is_club_proposer: false,
        }
    }
}

/// A region's reply in one negotiation sub-stage.
#[derive(Debug, Clone, PartialEq)]
pub enum NegotiationAction {
    /// One proposal per other region, ordered by recipient index.
    Propose(Vec<Proposal>),
    /// One accept/reject bit per incoming proposal, in the order shown.
    Decide(Vec<bool>),
    /// Club terms (mu_min, tau_min); only honored from the selected proposer.
    ClubTerms {
        mu_min: f64,
        tau_min: f64,
    },
    Join(bool),
    None,
}

/// Everything a protocol must supply: its sub-stage count, per-stage views,
/// the agreement resolver, the mask builder, and an optional post-hoc action
/// transform.
pub trait Protocol: Send {
    fn name(&self) -> &'static str;

    fn num_stages(&self) -> usize;

    /// Resets per-step state; called once per step before any stage.
    fn begin_step(&mut self, num_regions: usize, rng: &mut ChaCha8Rng);

    /// The view shown to `region` in `stage`.
    fn view(&self, stage: usize, region: usize) -> NegotiationView;

    /// Records `region`'s reply for `stage`.
    fn submit(&mut self, stage: usize, region: usize, action: NegotiationAction) -> Result<()>;

    /// Resolves the collected replies into enacted agreements.
    fn resolve(&mut self, num_regions: usize) -> Result<AgreementState>;

    /// Applied to the activity actions after policies have chosen them.
    fn transform_actions(&self, _actions: &mut [ActionSet]) {}

    /// Every proposal exchanged this step, for observation building.
    fn proposals(&self) -> &[Proposal] {
        &[]
    }
}

/// Builds per-region action masks from enacted agreements.
///
/// Mitigation level `k` stays allowed iff `k / (levels - 1) >= min rate - 1e-12`.
/// Club members additionally get a tariff floor towards non-members.
pub fn build_masks(
    agreements: &AgreementState,
    num_levels: usize,
    num_regions: usize,
) -> Result<Vec<ActionMask>> {
    let grid = ActionGrid::new(num_levels);
    let mut masks = Vec::with_capacity(num_regions);
    for i in 0..num_regions {
        let mut mask = ActionMask::all_allowed(num_levels, num_regions);
        let min_rate = agreements.min_mitigation_rate[i];
        if min_rate > 1.0 + 1e-12 {
            return Err(Error::Protocol(format!(
                "region {i} agreed to a minimum mitigation rate above 1 ({min_rate}); the mask would be empty"
            )));
        }
        for k in 0..num_levels {
            mask.mitigation[k] = grid.rate(k) >= min_rate - 1e-12;
        }
        if let Some(club) = &agreements.club {
            if club.members[i] {
                let first = grid.first_level_at_least(club.tau_min);
                for (j, member) in club.members.iter().enumerate() {
                    if j != i && !member {
                        for k in 0..num_levels {
                            mask.tariffs[j][k] = k >= first;
                        }
                    }
                }
            }
        }
        if let Some(head) = mask.has_empty_head() {
            return Err(Error::Protocol(format!(
                "agreements left region {i} with an empty {head} mask"
            )));
        }
        masks.push(mask);
    }
    Ok(masks)
}

/// Tariff overrides from the unilateral contract rule: for every ordered pair
/// with `mu_a > mu_b`, region `a` imposes `clamp(alpha * (mu_a - mu_b), 0, 1)`
/// on region `b`. Pairs with `mu_a <= mu_b` are untouched.
pub fn unilateral_tariff_rule(mitigation: &[f64], alpha: f64) -> Vec<Vec<Option<f64>>> {
    let n = mitigation.len();
    let mut overrides = vec![vec![None; n]; n];
    for a in 0..n {
        for b in 0..n {
            if a != b && mitigation[a] > mitigation[b] {
                overrides[a][b] = Some((alpha * (mitigation[a] - mitigation[b])).clamp(0.0, 1.0));
            }
        }
    }
    overrides
}

/// The empty protocol: zero sub-stages, all-true masks.
#[derive(Debug, Default)]
pub struct NoNegotiation;

impl Protocol for NoNegotiation {
    fn name(&self) -> &'static str {
        "none"
    }

    fn num_stages(&self) -> usize {
        0
    }

    fn begin_step(&mut self, _num_regions: usize, _rng: &mut ChaCha8Rng) {}

    fn view(&self, stage: usize, _region: usize) -> NegotiationView {
        NegotiationView::empty(stage)
    }

    fn submit(&mut self, _stage: usize, _region: usize, _action: NegotiationAction) -> Result<()> {
        Ok(())
    }

    fn resolve(&mut self, num_regions: usize) -> Result<AgreementState> {
        Ok(AgreementState::unconstrained(num_regions))
    }
}

/// Unilateral contracts: no negotiation stages; after actions are chosen,
/// tariffs are overridden by the mitigation-correction rule.
#[derive(Debug)]
pub struct UnilateralContracts {
    pub alpha: f64,
}

impl Protocol for UnilateralContracts {
    fn name(&self) -> &'static str {
        "unilateral"
    }

    fn num_stages(&self) -> usize {
        0
    }

    fn begin_step(&mut self, _num_regions: usize, _rng: &mut ChaCha8Rng) {}

    fn view(&self, stage: usize, _region: usize) -> NegotiationView {
        NegotiationView::empty(stage)
    }

    fn submit(&mut self, _stage: usize, _region: usize, _action: NegotiationAction) -> Result<()> {
        Ok(())
    }

    fn resolve(&mut self, num_regions: usize) -> Result<AgreementState> {
        Ok(AgreementState::unconstrained(num_regions))
    }

    fn transform_actions(&self, actions: &mut [ActionSet]) {
        let mitigation: Vec<f64> = actions.iter().map(|a| a.mitigation).collect();
        let overrides = unilateral_tariff_rule(&mitigation, self.alpha);
        for (a, row) in overrides.iter().enumerate() {
            for (b, tau) in row.iter().enumerate() {
                if let Some(tau) = tau {
                    actions[a].tariffs[b] = *tau;
                }
            }
        }
    }
}

/// Two-stage bilateral mitigation negotiation: every ordered pair produces a
/// proposal, recipients accept or reject, and each region's minimum
/// mitigation is the largest rate it promised across accepted deals.
#[derive(Debug, Default)]
pub struct BilateralNegotiation {
    grid: Option<ActionGrid>,
    proposals: Vec<Proposal>,
    decisions: Vec<(usize, Vec<bool>)>,
    num_regions: usize,
}

impl BilateralNegotiation {
    pub fn new(num_levels: usize) -> Self {
        Self {
            grid: Some(ActionGrid::new(num_levels)),
            ..Self::default()
        }
    }

    fn incoming_for(&self, region: usize) -> Vec<Proposal> {
        // (proposer, recipient) lexicographic order is preserved because
        // proposals are submitted region by region in index order.
        self.proposals
            .iter()
            .filter(|p| p.recipient == region)
            .copied()
            .collect()
    }
}

impl Protocol for BilateralNegotiation {
    fn name(&self) -> &'static str {
        "bilateral"
    }

    fn num_stages(&self) -> usize {
        2
    }

    fn begin_step(&mut self, num_regions: usize, _rng: &mut ChaCha8Rng) {
        self.proposals.clear();
        self.decisions.clear();
        self.num_regions = num_regions;
    }

    fn view(&self, stage: usize, region: usize) -> NegotiationView {
        let mut view = NegotiationView::empty(stage);
        if stage == 1 {
            view.incoming = self.incoming_for(region);
        }
        view
    }

    fn submit(&mut self, stage: usize, region: usize, action: NegotiationAction) -> Result<()> {
        match (stage, action) {
            (0, NegotiationAction::Propose(list)) => {
                if list.len() != self.num_regions - 1 {
                    return Err(Error::Protocol(format!(
                        "region {region} submitted {} proposals, expected {}",
                        list.len(),
                        self.num_regions - 1
                    )));
                }
                let grid = self.grid.expect("protocol not initialized");
                for p in &list {
                    if p.proposer != region || p.recipient == region {
                        return Err(Error::Protocol(format!(
                            "malformed proposal indices from region {region}"
                        )));
                    }
                    if grid.level_of(p.rate_proposer).is_none()
                        || grid.level_of(p.rate_recipient).is_none()
                    {
                        return Err(Error::Protocol(format!(
                            "proposal rates from region {region} are off the action grid"
                        )));
                    }
                }
                self.proposals.extend(list);
                Ok(())
            }
            (1, NegotiationAction::Decide(bits)) => {
                let expected = self.incoming_for(region).len();
                if bits.len() != expected {
                    return Err(Error::Protocol(format!(
                        "region {region} decided on {} proposals, expected {expected}",
                        bits.len()
                    )));
                }
                self.decisions.push((region, bits));
                Ok(())
            }
            (s, _) => Err(Error::Protocol(format!(
                "unexpected negotiation action in stage {s}"
            ))),
        }
    }

    fn proposals(&self) -> &[Proposal] {
        &self.proposals
    }

    fn resolve(&mut self, num_regions: usize) -> Result<AgreementState> {
        let mut ledger = Vec::new();
        for (region, bits) in &self.decisions {
            let incoming = self.incoming_for(*region);
            for (p, accepted) in incoming.iter().zip(bits) {
                if *accepted {
                    ledger.push(AcceptedDeal { proposal: *p });
                }
            }
        }
        ledger.sort_by_key(|d| (d.proposal.proposer, d.proposal.recipient));
        let mut min_rate = vec![0.0f64; num_regions];
        for deal in &ledger {
            let p = deal.proposal;
            min_rate[p.proposer] = min_rate[p.proposer].max(p.rate_proposer);
            min_rate[p.recipient] = min_rate[p.recipient].max(p.rate_recipient);
        }
        Ok(AgreementState {
            min_mitigation_rate: min_rate,
            ledger,
            club: None,
        })
    }
}

/// Climate club: a seeded-RNG-selected proposer offers (mu_min, tau_min);
/// every other region joins or refuses. Members must mitigate at least
/// mu_min and tariff non-members at least tau_min. The proposer is bound by
/// its own offer even if nobody joins.
#[derive(Debug)]
pub struct ClimateClub {
    grid: ActionGrid,
    proposer: usize,
    terms: Option<(f64, f64)>,
    joins: Vec<(usize, bool)>,
    num_regions: usize,
}

impl ClimateClub {
    pub fn new(num_levels: usize) -> Self {
        Self {
            grid: ActionGrid::new(num_levels),
            proposer: 0,
            terms: None,
            joins: Vec::new(),
            num_regions: 0,
        }
    }

    pub fn proposer(&self) -> usize {
        self.proposer
    }
}

impl Protocol for ClimateClub {
    fn name(&self) -> &'static str {
        "club"
    }

    fn num_stages(&self) -> usize {
        2
    }

    fn begin_step(&mut self, num_regions: usize, rng: &mut ChaCha8Rng) {
        self.num_regions = num_regions;
        self.proposer = rng.random_range(0..num_regions);
        self.terms = None;
        self.joins.clear();
    }

    fn view(&self, stage: usize, region: usize) -> NegotiationView {
        let mut view = NegotiationView::empty(stage);
        view.is_club_proposer = region == self.proposer;
        if stage == 1 {
            view.club_offer = self.terms;
        }
        view
    }

    fn submit(&mut self, stage: usize, region: usize, action: NegotiationAction) -> Result<()> {
        match (stage, action) {
            (0, NegotiationAction::ClubTerms { mu_min, tau_min }) if region == self.proposer => {
                if self.grid.level_of(mu_min).is_none() || self.grid.level_of(tau_min).is_none() {
                    return Err(Error::Protocol(
                        "club terms are off the action grid".to_string(),
                    ));
                }
                self.terms = Some((mu_min, tau_min));
                Ok(())
            }
            (0, _) => Ok(()), // everyone else is silent in the proposal stage
            (1, NegotiationAction::Join(join)) if region != self.proposer => {
                self.joins.push((region, join));
                Ok(())
            }
            (1, _) => Ok(()),
            (s, _) => Err(Error::Protocol(format!(
                "unexpected negotiation action in stage {s}"
            ))),
        }
    }

    fn resolve(&mut self, num_regions: usize) -> Result<AgreementState> {
        let mut state = AgreementState::unconstrained(num_regions);
        let Some((mu_min, tau_min)) = self.terms else {
            return Ok(state);
        };
        let mut members = vec![false; num_regions];
        members[self.proposer] = true; // internally proposed terms bind the proposer
        for (region, join) in &self.joins {
            if *join {
                members[*region] = true;
            }
        }
        for (i, member) in members.iter().enumerate() {
            if *member {
                state.min_mitigation_rate[i] = mu_min;
            }
        }
        state.club = Some(ClubState {
            members,
            mu_min,
            tau_min,
        });
        Ok(state)
    }
}

/// Protocol selection, as spelled in scenario configs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProtocolKind {
    None,
    Unilateral,
    Bilateral,
    Club,
}

impl ProtocolKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Self::None),
            "unilateral" => Ok(Self::Unilateral),
            "bilateral" => Ok(Self::Bilateral),
            "club" => Ok(Self::Club),
            other => Err(Error::Config(format!(
                "unknown protocol '{other}' (expected none|unilateral|bilateral|club)"
            ))),
        }
    }

    /// Fresh protocol instance for one episode.
    pub fn instantiate(self, num_levels: usize, unilateral_alpha: f64) -> Box<dyn Protocol> {
        match self {
            Self::None => Box::new(NoNegotiation),
            Self::Unilateral => Box::new(UnilateralContracts {
                alpha: unilateral_alpha,
            }),
            Self::Bilateral => Box::new(BilateralNegotiation::new(num_levels)),
            Self::Club => Box::new(ClimateClub::new(num_levels)),
        }
    }
}

impl std::fmt::Display for ProtocolKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Self::None => "none",
            Self::Unilateral => "unilateral",
            Self::Bilateral => "bilateral",
            Self::Club => "club",
        };
        f.write_str(s)
    }
}
