//! Action records, the discrete rate grid, and per-head action masks.

use serde::{Deserialize, Serialize};

/// Evenly spaced grid of rate levels over [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ActionGrid {
    levels: usize,
}

impl ActionGrid {
    pub fn new(levels: usize) -> Self {
        assert!(levels >= 2, "action grid needs at least two levels");
        Self { levels }
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    /// Rate value of a level index: `k / (levels - 1)`.
    pub fn rate(&self, level: usize) -> f64 {
        level as f64 / (self.levels - 1) as f64
    }

    /// Level whose rate is closest to `rate`.
    pub fn nearest_level(&self, rate: f64) -> usize {
        let k = (rate.clamp(0.0, 1.0) * (self.levels - 1) as f64).round() as usize;
        k.min(self.levels - 1)
    }

    /// Level index if `rate` lies on the grid (within 1e-9), else None.
    pub fn level_of(&self, rate: f64) -> Option<usize> {
        let k = self.nearest_level(rate);
        if (self.rate(k) - rate).abs() <= 1e-9 {
            Some(k)
        } else {
            None
        }
    }

    /// Smallest level whose rate is >= `rate - 1e-12`.
    pub fn first_level_at_least(&self, rate: f64) -> usize {
        (0..self.levels)
            .find(|&k| self.rate(k) >= rate - 1e-12)
            .unwrap_or(self.levels - 1)
    }
}

/// One region's activity decisions for a step.
///
/// The self-tariff and self-bid entries exist positionally but are forced to
/// zero. Rate-valued heads produced by policies lie on the action grid;
/// negotiation decisions are collected separately through the protocol
/// contract.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionSet {
    /// Savings rate, in [0,1].
    pub savings: f64,
    /// Mitigation rate, in [0,1].
    pub mitigation: f64,
    /// Import tariff imposed on each region, in [0,1]; self entry 0.
    pub tariffs: Vec<f64>,
    /// Upper bound on the exported share of gross output, in [0,1].
    pub export_limit: f64,
    /// Import bids towards each region, >= 0 in output units; self entry 0.
    pub bids: Vec<f64>,
}

impl ActionSet {
    /// All-zero actions for a world of `n` regions.
    pub fn zeros(n: usize) -> Self {
        Self {
            savings: 0.0,
            mitigation: 0.0,
            tariffs: vec![0.0; n],
            export_limit: 0.0,
            bids: vec![0.0; n],
        }
    }
}

/// Boolean vector per action head: true marks an allowed level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionMask {
    pub savings: Vec<bool>,
    pub mitigation: Vec<bool>,
    pub export_limit: Vec<bool>,
    /// One mask per counterpart region (self entry unused).
    pub tariffs: Vec<Vec<bool>>,
    pub bids: Vec<Vec<bool>>,
}

impl ActionMask {
    /// Mask allowing every level on every head.
    pub fn all_allowed(levels: usize, num_regions: usize) -> Self {
        Self {
            savings: vec![true; levels],
            mitigation: vec![true; levels],
            export_limit: vec![true; levels],
            tariffs: vec![vec![true; levels]; num_regions],
            bids: vec![vec![true; levels]; num_regions],
        }
    }

    pub fn is_all_allowed(&self) -> bool {
        self.savings.iter().all(|&b| b)
            && self.mitigation.iter().all(|&b| b)
            && self.export_limit.iter().all(|&b| b)
            && self.tariffs.iter().all(|m| m.iter().all(|&b| b))
            && self.bids.iter().all(|m| m.iter().all(|&b| b))
    }

    /// Every head must retain at least one allowed level.
    pub fn has_empty_head(&self) -> Option<&'static str> {
        if !self.savings.iter().any(|&b| b) {
            return Some("savings");
        }
        if !self.mitigation.iter().any(|&b| b) {
            return Some("mitigation");
        }
        if !self.export_limit.iter().any(|&b| b) {
            return Some("export_limit");
        }
        if self.tariffs.iter().any(|m| !m.iter().any(|&b| b)) {
            return Some("tariffs");
        }
        if self.bids.iter().any(|m| !m.iter().any(|&b| b)) {
            return Some("bids");
        }
        None
    }

    /// First allowed level at or above `level`, falling back to the nearest
    /// allowed level in either direction.
    pub fn nearest_allowed(head: &[bool], level: usize) -> usize {
        if head.get(level).copied().unwrap_or(false) {
            return level;
        }
        for d in 1..head.len() {
            if level + d < head.len() && head[level + d] {
                return level + d;
            }
            if level >= d && head[level - d] {
                return level - d;
            }
        }
        level
    }

    /// Checks that `actions` complies with this mask.
    ///
    /// Heads with at least one forbidden level require the chosen rate to sit
    /// exactly on an allowed grid level; unconstrained heads accept any value
    /// in range. Returns the violating head name on failure.
    pub fn permits(
        &self,
        grid: ActionGrid,
        actions: &ActionSet,
    ) -> std::result::Result<(), &'static str> {
        fn check(head: &[bool], grid: ActionGrid, rate: f64) -> bool {
            if head.iter().all(|&b| b) {
                return (0.0..=1.0).contains(&rate);
            }
            match grid.level_of(rate) {
                Some(k) => head[k],
                None => false,
            }
        }
        if !check(&self.savings, grid, actions.savings) {
            return Err("savings");
        }
        if !check(&self.mitigation, grid, actions.mitigation) {
            return Err("mitigation");
        }
        if !check(&self.export_limit, grid, actions.export_limit) {
            return Err("export_limit");
        }
        for (j, &tau) in actions.tariffs.iter().enumerate() {
            if !check(&self.tariffs[j], grid, tau) {
                return Err("tariffs");
            }
        }
        for (j, &b) in actions.bids.iter().enumerate() {
            if b < 0.0 {
                return Err("bids");
            }
            // Bid heads are only grid-checked when actually constrained.
            if !self.bids[j].iter().all(|&x| x) && !check(&self.bids[j], grid, b) {
                return Err("bids");
            }
        }
        Ok(())
    }
}
