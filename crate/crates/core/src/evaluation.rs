//! Climate/economic indices, Pareto fronts, and the hypervolume score.
//!
//! Both indices normalize a solution linearly between the two extremal
//! rollouts (no mitigation vs. full mitigation), so the generating extremal
//! policies land exactly on 0 and 1. Indices are not clipped; a solution
//! worse than an extremal can go negative and is then excluded from the
//! hypervolume by the weak-dominance precondition.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The normalization formulas, echoed into every evaluation report.
pub const INDEX_FORMULA: &str = "C = (T_none - T_sol) / (T_none - T_full); \
E = (P_sol - P_min) / (P_max - P_min)";

/// A scored rollout in (climate, economic) index space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomePoint {
    pub climate: f64,
    pub economic: f64,
    /// Where the point came from (config and seeds).
    pub provenance: String,
}

impl OutcomePoint {
    pub fn new(climate: f64, economic: f64, provenance: impl Into<String>) -> Result<Self> {
        if !climate.is_finite() || !economic.is_finite() {
            return Err(Error::Evaluation(format!(
                "outcome point must be finite, got ({climate}, {economic})"
            )));
        }
        Ok(Self {
            climate,
            economic,
            provenance: provenance.into(),
        })
    }
}

/// Climate index `(T_none - T_sol) / (T_none - T_full)`, each temperature an
/// end-of-horizon atmospheric rise averaged over Monte-Carlo seeds.
// Negated comparisons here reject NaN, which `<` would let through.
#[allow(clippy::neg_cmp_op_on_partial_ord)]
pub fn climate_index(t_solution: f64, t_none: f64, t_full: f64) -> Result<f64> {
    let den = t_none - t_full;
    if !(den > 0.0) {
        return Err(Error::Evaluation(format!(
            "degenerate climate normalization: t_none={t_none} must exceed t_full={t_full}"
        )));
    }
    Ok((t_none - t_solution) / den)
}

/// Economic index `(P_sol - P_min) / (P_max - P_min)` over the production
/// totals of the two extremal policies.
// Negated comparisons here reject NaN, which `<` would let through.
#[allow(clippy::neg_cmp_op_on_partial_ord)]
pub fn economic_index(p_solution: f64, p_min: f64, p_max: f64) -> Result<f64> {
    let den = p_max - p_min;
    if !(den > 0.0) {
        return Err(Error::Evaluation(format!(
            "degenerate economic normalization: p_max={p_max} must exceed p_min={p_min}"
        )));
    }
    Ok((p_solution - p_min) / den)
}

/// Strict Pareto dominance: at least one index strictly higher and the other
/// at least as high.
pub fn pareto_dominates(a: &OutcomePoint, b: &OutcomePoint) -> bool {
    (a.climate > b.climate && a.economic >= b.economic)
        || (a.climate >= b.climate && a.economic > b.economic)
}

/// Non-dominated subset; duplicate coordinates are retained once.
pub fn pareto_front(points: &[OutcomePoint]) -> Vec<OutcomePoint> {
    let mut front: Vec<OutcomePoint> = Vec::new();
    for p in points {
        if points.iter().any(|q| pareto_dominates(q, p)) {
            continue;
        }
        if front
            .iter()
            .any(|q| q.climate == p.climate && q.economic == p.economic)
        {
            continue;
        }
        front.push(p.clone());
    }
    front
}

/// 2-D hypervolume: the area of the union of rectangles spanned by `points`
/// and the reference corner, computed by sorting the front by climate index
/// descending and summing disjoint strips.
///
/// Points that fail to weakly dominate the reference are discarded; the
/// count of discarded points is returned alongside the area.
pub fn hypervolume(points: &[OutcomePoint], reference: (f64, f64)) -> (f64, usize) {
    let (ref_c, ref_e) = reference;
    let mut usable: Vec<&OutcomePoint> = points
        .iter()
        .filter(|p| p.climate >= ref_c && p.economic >= ref_e)
        .collect();
    let discarded = points.len() - usable.len();
    usable.sort_by(|a, b| {
        b.climate
            .partial_cmp(&a.climate)
            .unwrap()
            .then(b.economic.partial_cmp(&a.economic).unwrap())
    });
    let mut area = 0.0;
    let mut best_e = ref_e;
    for p in usable {
        if p.economic > best_e {
            area += (p.climate - ref_c) * (p.economic - best_e);
            best_e = p.economic;
        }
    }
    (area, discarded)
}

/// One solution set's evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedSet {
    pub name: String,
    pub hypervolume: f64,
    pub discarded_points: usize,
    /// Indices into the submitted point list that sit on the Pareto front.
    pub front: Vec<usize>,
}

/// Ranks solution sets by hypervolume, descending, with a stable tie-break
/// by submission order.
pub fn rank_solution_sets(
    sets: &[(String, Vec<OutcomePoint>)],
    reference: (f64, f64),
) -> Vec<RankedSet> {
    let mut ranked: Vec<RankedSet> = sets
        .iter()
        .map(|(name, points)| {
            let (hv, discarded) = hypervolume(points, reference);
            let front = pareto_front(points);
            let front_idx = points
                .iter()
                .enumerate()
                .filter(|(_, p)| {
                    front
                        .iter()
                        .any(|q| q.climate == p.climate && q.economic == p.economic)
                })
                .map(|(i, _)| i)
                .collect();
            RankedSet {
                name: name.clone(),
                hypervolume: hv,
                discarded_points: discarded,
                front: front_idx,
            }
        })
        .collect();
    ranked.sort_by(|a, b| b.hypervolume.partial_cmp(&a.hypervolume).unwrap());
    ranked
}
