//! Fits region parameters from historical series, imputes missing values,
//! and merges or splits regions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Yearly observations for one region. Any of the value columns may be
/// missing for a given year.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoricalSeries {
    pub id: String,
    pub years: Vec<i32>,
    pub population: Vec<Option<f64>>,
    pub tfp: Vec<Option<f64>>,
    pub capital: Vec<Option<f64>>,
    pub gdp: Vec<Option<f64>>,
    pub emissions: Vec<Option<f64>>,
    /// Convergence population when known from external data.
    pub l_a: Option<f64>,
}

impl HistoricalSeries {
    pub fn validate(&self) -> Result<()> {
        if !self.years.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::Calibration(format!(
                "series '{}' years are not strictly increasing",
                self.id
            )));
        }
        let columns = [
            ("population", &self.population),
            ("tfp", &self.tfp),
            ("capital", &self.capital),
            ("gdp", &self.gdp),
            ("emissions", &self.emissions),
        ];
        for (name, col) in columns {
            if col.len() != self.years.len() {
                return Err(Error::Calibration(format!(
                    "series '{}' column {name} has {} entries for {} years",
                    self.id,
                    col.len(),
                    self.years.len()
                )));
            }
            if col.iter().flatten().any(|v| *v < 0.0) {
                return Err(Error::Calibration(format!(
                    "series '{}' column {name} contains negative values",
                    self.id
                )));
            }
        }
        Ok(())
    }

    /// Dense values of a column, dropping missing entries.
    pub fn dense(col: &[Option<f64>]) -> Vec<f64> {
        col.iter().flatten().copied().collect()
    }
}

/// Closed-form no-intercept least squares for the population convergence
/// rate: regress `ln L_{t+1} - ln L_t` on `ln(1 + L_a) - ln(1 + L_t)`.
// Negated comparisons here reject NaN, which `<` would let through.
#[allow(clippy::neg_cmp_op_on_partial_ord)]
pub fn fit_population(series: &[f64], l_a: f64) -> Result<f64> {
    if series.len() < 2 {
        return Err(Error::Calibration(
            "population fit needs at least 2 observations".into(),
        ));
    }
    if !(l_a > 0.0) {
        return Err(Error::Calibration(format!(
            "population fit needs l_a > 0, got {l_a}"
        )));
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for w in series.windows(2) {
        let x = (1.0 + l_a).ln() - (1.0 + w[0]).ln();
        let y = w[1].ln() - w[0].ln();
        num += x * y;
        den += x * x;
    }
    if den == 0.0 {
        return Err(Error::Calibration(
            "population series is pinned at l_a; the fit is degenerate".into(),
        ));
    }
    Ok(num / den)
}

/// Result of the technology fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TechFit {
    pub g_a: f64,
    pub delta_a: f64,
    /// Sum of squared one-step-ahead residuals at the optimum.
    pub residual: f64,
}

fn tech_residual(series: &[f64], eta: f64, delta_years: u32, g_a: f64, delta_a: f64) -> f64 {
    let mut acc = 0.0;
    for (idx, w) in series.windows(2).enumerate() {
        let t = idx as f64 + 1.0; // paper's 1-based time index
        let predicted =
            (eta.exp() + g_a * (-delta_a * delta_years as f64 * (t - 1.0)).exp()) * w[0];
        let r = w[1] - predicted;
        acc += r * r;
    }
    acc
}

/// Nelder-Mead simplex minimization in two dimensions.
///
/// Returns (point, value, converged).
fn nelder_mead<F: Fn(&[f64; 2]) -> f64>(
    f: F,
    start: [f64; 2],
    scale: [f64; 2],
    max_iters: usize,
    tol: f64,
) -> ([f64; 2], f64, bool) {
    const ALPHA: f64 = 1.0; // reflection
    const GAMMA: f64 = 2.0; // expansion
    const RHO: f64 = 0.5; // contraction
    const SIGMA: f64 = 0.5; // shrink

    let mut simplex = [
        start,
        [start[0] + scale[0], start[1]],
        [start[0], start[1] + scale[1]],
    ];
    let mut values = simplex.map(|p| f(&p));

    for _ in 0..max_iters {
        // Order ascending by value.
        let mut order = [0usize, 1, 2];
        order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
        simplex = [simplex[order[0]], simplex[order[1]], simplex[order[2]]];
        values = [values[order[0]], values[order[1]], values[order[2]]];

        let spread = (values[2] - values[0]).abs();
        let size = simplex[1..]
            .iter()
            .map(|p| ((p[0] - simplex[0][0]).powi(2) + (p[1] - simplex[0][1]).powi(2)).sqrt())
            .fold(0.0f64, f64::max);
        if spread <= tol * (1.0 + values[0].abs()) && size <= tol * (1.0 + simplex[0][0].abs()) {
            return (simplex[0], values[0], true);
        }

        let centroid = [
            (simplex[0][0] + simplex[1][0]) / 2.0,
            (simplex[0][1] + simplex[1][1]) / 2.0,
        ];
        let reflect = [
            centroid[0] + ALPHA * (centroid[0] - simplex[2][0]),
            centroid[1] + ALPHA * (centroid[1] - simplex[2][1]),
        ];
        let fr = f(&reflect);
        if fr < values[0] {
            let expand = [
                centroid[0] + GAMMA * (reflect[0] - centroid[0]),
                centroid[1] + GAMMA * (reflect[1] - centroid[1]),
            ];
            let fe = f(&expand);
            if fe < fr {
                simplex[2] = expand;
                values[2] = fe;
            } else {
                simplex[2] = reflect;
                values[2] = fr;
            }
        } else if fr < values[1] {
            simplex[2] = reflect;
            values[2] = fr;
        } else {
            let contract = [
                centroid[0] + RHO * (simplex[2][0] - centroid[0]),
                centroid[1] + RHO * (simplex[2][1] - centroid[1]),
            ];
            let fc = f(&contract);
            if fc < values[2] {
                simplex[2] = contract;
                values[2] = fc;
            } else {
                for i in 1..3 {
                    simplex[i] = [
                        simplex[0][0] + SIGMA * (simplex[i][0] - simplex[0][0]),
                        simplex[0][1] + SIGMA * (simplex[i][1] - simplex[0][1]),
                    ];
                    values[i] = f(&simplex[i]);
                }
            }
        }
    }
    let mut best = 0;
    for i in 1..3 {
        if values[i] < values[best] {
            best = i;
        }
    }
    (simplex[best], values[best], false)
}

/// Fits `(g_a, delta_a)` by minimizing the squared one-step residual of the
/// technology recursion with a derivative-free simplex search from
/// multi-start initial points.
// Negated comparisons here reject NaN, which `<` would let through.
#[allow(clippy::neg_cmp_op_on_partial_ord)]
pub fn fit_technology(series: &[f64], eta: f64, delta_years: u32) -> Result<TechFit> {
    if series.len() < 3 {
        return Err(Error::Calibration(
            "technology fit needs at least 3 observations".into(),
        ));
    }
    if series.iter().any(|a| !(*a > 0.0)) {
        return Err(Error::Calibration(
            "technology fit needs strictly positive values".into(),
        ));
    }
    let objective = |p: &[f64; 2]| {
        // The model is only meaningful for g_a >= 0; penalize outside.
        let penalty = if p[0] < 0.0 { 1e6 * p[0] * p[0] } else { 0.0 };
        tech_residual(series, eta, delta_years, p[0].max(0.0), p[1]) + penalty
    };

    // First transition pins e^eta + g_a at delta_a's zero-decay point, which
    // seeds g_a for every delta_a start.
    let g_seed = (series[1] / series[0] - eta.exp()).max(0.0);
    let mut starts = Vec::new();
    for d in [0.01, 0.05, 0.1, 0.2, 0.5, 1.0, 1.8] {
        starts.push(([g_seed, d], [0.05, 0.1]));
        starts.push(([0.1, d], [0.05, 0.1]));
    }

    const MAX_ITERS: usize = 4000;
    let mut best: Option<([f64; 2], f64, bool)> = None;
    for (start, scale) in starts {
        let candidate = nelder_mead(objective, start, scale, MAX_ITERS, 1e-14);
        if best.as_ref().is_none_or(|b| candidate.1 < b.1) {
            best = Some(candidate);
        }
    }
    let (point, _, _) = best.unwrap();
    // Polish from the incumbent with a tight simplex.
    let (point, value, converged) = nelder_mead(objective, point, [1e-5, 1e-5], MAX_ITERS, 1e-15);
    let fit = TechFit {
        g_a: point[0].max(0.0),
        delta_a: point[1],
        residual: tech_residual(series, eta, delta_years, point[0].max(0.0), point[1]),
    };
    if !converged && value > 1e-9 {
        return Err(Error::FitDidNotConverge {
            iterations: MAX_ITERS,
            g_a: fit.g_a,
            delta_a: fit.delta_a,
            residual: fit.residual,
        });
    }
    Ok(fit)
}

/// A reference observation for imputation: features plus the known value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reference {
    pub gdp: f64,
    pub population: f64,
    pub value: f64,
}

/// K-nearest-neighbor imputation in z-scored (GDP, population) space.
///
/// Each target receives the arithmetic mean of its `k` nearest references'
/// values. Distance ties are broken by reference order, which callers keep
/// sorted by region id.
pub fn knn_impute(targets: &[(f64, f64)], references: &[Reference], k: usize) -> Result<Vec<f64>> {
    if references.len() < k {
        return Err(Error::Calibration(format!(
            "knn imputation needs at least k={k} references, got {}",
            references.len()
        )));
    }
    let n = references.len() as f64;
    let mean_g = references.iter().map(|r| r.gdp).sum::<f64>() / n;
    let mean_p = references.iter().map(|r| r.population).sum::<f64>() / n;
    let std_g = (references
        .iter()
        .map(|r| (r.gdp - mean_g).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    let std_p = (references
        .iter()
        .map(|r| (r.population - mean_p).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    let z = |v: f64, mean: f64, std: f64| if std > 0.0 { (v - mean) / std } else { 0.0 };

    let mut out = Vec::with_capacity(targets.len());
    for &(gdp, pop) in targets {
        let tg = z(gdp, mean_g, std_g);
        let tp = z(pop, mean_p, std_p);
        let mut dist: Vec<(f64, usize)> = references
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let dg = z(r.gdp, mean_g, std_g) - tg;
                let dp = z(r.population, mean_p, std_p) - tp;
                ((dg * dg + dp * dp).sqrt(), i)
            })
            .collect();
        dist.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        let mean = dist[..k]
            .iter()
            .map(|(_, i)| references[*i].value)
            .sum::<f64>()
            / k as f64;
        out.push(mean);
    }
    Ok(out)
}

/// Economic aggregates of one region used by merge/split.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionEcon {
    pub gdp: f64,
    pub capital: f64,
    pub labor: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MergedRegion {
    pub gdp: f64,
    pub capital: f64,
    pub labor: f64,
    pub tfp: f64,
    pub sigma: f64,
}

/// Merges regions: GDP, capital, and population are additive; TFP is imputed
/// from the merged production identity and sigma is output-weighted.
pub fn merge_regions(parts: &[RegionEcon], gamma: f64) -> Result<MergedRegion> {
    if parts.is_empty() {
        return Err(Error::Calibration("cannot merge zero regions".into()));
    }
    let gdp: f64 = parts.iter().map(|p| p.gdp).sum();
    let capital: f64 = parts.iter().map(|p| p.capital).sum();
    let labor: f64 = parts.iter().map(|p| p.labor).sum();
    if capital <= 0.0 || labor <= 0.0 {
        return Err(Error::Calibration(
            "merged capital and labor must be positive".into(),
        ));
    }
    let tfp = gdp / (capital.powf(gamma) * labor.powf(1.0 - gamma));
    let sigma = parts.iter().map(|p| p.sigma * p.gdp).sum::<f64>() / gdp;
    Ok(MergedRegion {
        gdp,
        capital,
        labor,
        tfp,
        sigma,
    })
}

/// Splits a merged region into pieces with given output/population fractions
/// and sampled TFP values. Capital is backed out of the production identity,
/// `K_i = (Y_i / (A_i * L_i^(1-gamma)))^(1/gamma)`, so each piece satisfies
/// `Y_i = A_i * K_i^gamma * L_i^(1-gamma)`.
pub fn split_region(
    merged: &MergedRegion,
    fractions: &[f64],
    tfps: &[f64],
    gamma: f64,
) -> Result<Vec<MergedRegion>> {
    if fractions.len() != tfps.len() || fractions.is_empty() {
        return Err(Error::Calibration(
            "split needs matching, non-empty fractions and tfp samples".into(),
        ));
    }
    let total: f64 = fractions.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::Calibration(format!(
            "split fractions sum to {total}, expected 1"
        )));
    }
    if fractions.iter().any(|c| *c <= 0.0) || tfps.iter().any(|a| *a <= 0.0) {
        return Err(Error::Calibration(
            "split fractions and tfp samples must be positive".into(),
        ));
    }
    Ok(fractions
        .iter()
        .zip(tfps)
        .map(|(&c, &a)| {
            let labor = c * merged.labor;
            let gdp = c * merged.gdp;
            let capital = (gdp / (a * labor.powf(1.0 - gamma))).powf(1.0 / gamma);
            MergedRegion {
                gdp,
                capital,
                labor,
                tfp: a,
                sigma: merged.sigma,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn generate_population(l0: f64, l_a: f64, l_g: f64, steps: usize) -> Vec<f64> {
        let mut out = vec![l0];
        for _ in 0..steps {
            let l = *out.last().unwrap();
            out.push(l * ((1.0 + l_a) / (1.0 + l)).powf(l_g));
        }
        out
    }

    fn generate_technology(
        a0: f64,
        eta: f64,
        g_a: f64,
        delta_a: f64,
        delta: u32,
        steps: usize,
    ) -> Vec<f64> {
        let mut out = vec![a0];
        for t in 1..=steps {
            let a = *out.last().unwrap();
            let factor = eta.exp() + g_a * (-delta_a * delta as f64 * (t as f64 - 1.0)).exp();
            out.push(factor * a);
        }
        out
    }

    #[test]
    fn population_fit_recovers_table_rate() {
        let series = generate_population(476.878, 669.594, 0.034, 30);
        let got = fit_population(&series, 669.594).unwrap();
        assert!((got - 0.034).abs() < 1e-10);
    }

    #[test]
    fn population_fit_on_constant_series_is_zero() {
        let series = vec![100.0; 10];
        assert_eq!(fit_population(&series, 200.0).unwrap(), 0.0);
    }

    #[test]
    fn population_fit_two_points_interpolates_exactly() {
        let series = generate_population(100.0, 200.0, 0.07, 1);
        let got = fit_population(&series, 200.0).unwrap();
        assert!((got - 0.07).abs() < 1e-12);
    }

    #[test]
    fn population_fit_pinned_at_l_a_is_degenerate() {
        let series = vec![200.0, 200.0, 200.0];
        assert!(matches!(
            fit_population(&series, 200.0),
            Err(Error::Calibration(_))
        ));
    }

    #[test]
    fn technology_fit_recovers_table_pair() {
        let series = generate_technology(1.872, 0.0033, 0.122, 0.139, 1, 30);
        let fit = fit_technology(&series, 0.0033, 1).unwrap();
        assert!((fit.g_a - 0.122).abs() < 1e-4, "g_a = {}", fit.g_a);
        assert!(
            (fit.delta_a - 0.139).abs() < 1e-4,
            "delta_a = {}",
            fit.delta_a
        );
    }

    #[test]
    fn technology_fit_handles_zero_growth() {
        let series = generate_technology(2.5, 0.0033, 0.0, 0.5, 1, 20);
        let fit = fit_technology(&series, 0.0033, 1).unwrap();
        assert!(fit.g_a.abs() < 1e-6, "g_a = {}", fit.g_a);
    }

    #[test]
    fn technology_fit_beats_every_start_point() {
        let series = generate_technology(1.0, 0.0033, 0.2, 0.3, 1, 25);
        let fit = fit_technology(&series, 0.0033, 1).unwrap();
        for d in [0.01, 0.1, 0.5, 1.0, 1.8] {
            for g in [0.0, 0.1, 0.3] {
                assert!(fit.residual <= tech_residual(&series, 0.0033, 1, g, d) + 1e-12);
            }
        }
    }

    #[test]
    fn knn_exact_hit_with_k1() {
        let refs = vec![
            Reference {
                gdp: 1.0,
                population: 1.0,
                value: 10.0,
            },
            Reference {
                gdp: 5.0,
                population: 5.0,
                value: 50.0,
            },
        ];
        let got = knn_impute(&[(1.0, 1.0)], &refs, 1).unwrap();
        assert_eq!(got, vec![10.0]);
    }

    #[test]
    fn knn_constant_references_return_the_constant() {
        let refs: Vec<Reference> = (0..6)
            .map(|i| Reference {
                gdp: i as f64,
                population: 10.0 - i as f64,
                value: 7.5,
            })
            .collect();
        let got = knn_impute(&[(2.0, 3.0)], &refs, 5).unwrap();
        assert_eq!(got, vec![7.5]);
    }

    #[test]
    fn knn_mean_of_five_nearest_of_six() {
        // Five references cluster near the target; the sixth sits far away.
        let mut refs: Vec<Reference> = (0..5)
            .map(|i| Reference {
                gdp: 1.0 + 0.01 * i as f64,
                population: 2.0,
                value: i as f64,
            })
            .collect();
        refs.push(Reference {
            gdp: 100.0,
            population: 80.0,
            value: 1000.0,
        });
        let got = knn_impute(&[(1.0, 2.0)], &refs, 5).unwrap();
        assert_eq!(got, vec![(0.0 + 1.0 + 2.0 + 3.0 + 4.0) / 5.0]);
    }

    #[test]
    fn knn_needs_enough_references() {
        let refs = vec![Reference {
            gdp: 1.0,
            population: 1.0,
            value: 1.0,
        }];
        assert!(knn_impute(&[(1.0, 1.0)], &refs, 5).is_err());
    }

    #[test]
    fn knn_is_permutation_invariant_with_stable_ties() {
        let refs = vec![
            Reference {
                gdp: 1.0,
                population: 1.0,
                value: 3.0,
            },
            Reference {
                gdp: 2.0,
                population: 2.0,
                value: 5.0,
            },
            Reference {
                gdp: 3.0,
                population: 3.0,
                value: 9.0,
            },
            Reference {
                gdp: 8.0,
                population: 1.0,
                value: 2.0,
            },
        ];
        let a = knn_impute(&[(2.0, 2.0)], &refs, 3).unwrap();
        let mut shuffled = refs.clone();
        shuffled.swap(0, 2);
        shuffled.swap(1, 3);
        let b = knn_impute(&[(2.0, 2.0)], &shuffled, 3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn merging_identical_regions_preserves_tfp() {
        let gamma = 0.3;
        let a = 2.5;
        let (k, l) = (4.0f64, 9.0f64);
        let y = a * k.powf(gamma) * l.powf(1.0 - gamma);
        let part = RegionEcon {
            gdp: y,
            capital: k,
            labor: l,
            sigma: 0.5,
        };
        let merged = merge_regions(&[part, part], gamma).unwrap();
        assert!((merged.tfp - a).abs() < 1e-12);
    }

    #[test]
    fn merging_single_region_is_identity() {
        let gamma = 0.3;
        let part = RegionEcon {
            gdp: 12.0,
            capital: 3.0,
            labor: 7.0,
            sigma: 0.9,
        };
        let merged = merge_regions(&[part], gamma).unwrap();
        assert_eq!(merged.gdp, 12.0);
        assert_eq!(merged.capital, 3.0);
        assert_eq!(merged.labor, 7.0);
        assert_eq!(merged.sigma, 0.9);
        // Production identity holds by construction.
        let y = merged.tfp * merged.capital.powf(gamma) * merged.labor.powf(1.0 - gamma);
        assert!((y - merged.gdp).abs() < 1e-12 * merged.gdp);
    }

    #[test]
    fn sigma_merge_is_output_weighted() {
        let parts = [
            RegionEcon {
                gdp: 1.0,
                capital: 1.0,
                labor: 1.0,
                sigma: 1.0,
            },
            RegionEcon {
                gdp: 3.0,
                capital: 1.0,
                labor: 1.0,
                sigma: 3.0,
            },
        ];
        let merged = merge_regions(&parts, 0.3).unwrap();
        assert!((merged.sigma - 2.5).abs() < 1e-12);
    }

    #[test]
    fn split_into_one_piece_with_merged_tfp_is_identity() {
        let merged = MergedRegion {
            gdp: 10.0,
            capital: 2.0,
            labor: 50.0,
            tfp: 0.0,
            sigma: 0.4,
        };
        let gamma = 0.3;
        let tfp = merged.gdp / (merged.capital.powf(gamma) * merged.labor.powf(1.0 - gamma));
        let merged = MergedRegion { tfp, ..merged };
        let pieces = split_region(&merged, &[1.0], &[tfp], gamma).unwrap();
        assert!((pieces[0].capital - merged.capital).abs() < 1e-9);
        assert!((pieces[0].labor - merged.labor).abs() < 1e-12);
    }

    #[test]
    fn split_pieces_satisfy_production_identity() {
        let gamma = 0.3;
        let merged = MergedRegion {
            gdp: 40.0,
            capital: 6.0,
            labor: 300.0,
            tfp: 3.1,
            sigma: 0.7,
        };
        let pieces = split_region(&merged, &[0.5, 0.3, 0.2], &[2.0, 3.0, 4.0], gamma).unwrap();
        for p in &pieces {
            let y = p.tfp * p.capital.powf(gamma) * p.labor.powf(1.0 - gamma);
            assert!((y - p.gdp).abs() <= 1e-10 * p.gdp);
        }
    }

    #[test]
    fn remerging_split_pieces_recovers_output_and_labor() {
        let gamma = 0.3;
        let merged = MergedRegion {
            gdp: 40.0,
            capital: 6.0,
            labor: 300.0,
            tfp: 3.1,
            sigma: 0.7,
        };
        let pieces = split_region(&merged, &[0.6, 0.4], &[2.0, 5.0], gamma).unwrap();
        let parts: Vec<RegionEcon> = pieces
            .iter()
            .map(|p| RegionEcon {
                gdp: p.gdp,
                capital: p.capital,
                labor: p.labor,
                sigma: p.sigma,
            })
            .collect();
        let back = merge_regions(&parts, gamma).unwrap();
        assert!((back.gdp - merged.gdp).abs() < 1e-9);
        assert!((back.labor - merged.labor).abs() < 1e-9);
        // Capital need not be preserved when the sampled TFPs differ.
    }

    #[test]
    fn split_rejects_bad_fractions() {
        let merged = MergedRegion {
            gdp: 1.0,
            capital: 1.0,
            labor: 1.0,
            tfp: 1.0,
            sigma: 1.0,
        };
        assert!(split_region(&merged, &[0.5, 0.4], &[1.0, 1.0], 0.3).is_err());
    }
}
