//! Bids, tariffs, export caps, the three trade normalizations, consumption
//! aggregation, utility, and trade-balance bookkeeping.
//!
//! Matrix convention: `bids[i][j]` is importer `i`'s desired imports from
//! exporter `j`, and `x[i][j]` the realized flow from `j` to `i`. Column `i`
//! therefore reads as region `i`'s exports. Import prices are fixed at one
//! output unit per unit.

use crate::error::{Error, Result};

/// Realized trade flows and their per-region aggregates for one step.
#[derive(Debug, Clone, PartialEq)]
pub struct TradeFlows {
    /// Bid matrix after all normalizations.
    pub bids: Vec<Vec<f64>>,
    /// Realized imports `x[i][j]` (from exporter j to importer i).
    pub imports: Vec<Vec<f64>>,
    /// Post-tariff foreign consumption `C[i][j]`.
    pub tariffed: Vec<Vec<f64>>,
    /// Tariff revenue collected by each importing region.
    pub tariff_revenue: Vec<f64>,
    /// Total exports per region (column sums of `imports`).
    pub exports: Vec<f64>,
}

/// Interest accrual on a trade balance, positive or negative alike.
pub fn accrue_interest(balance: f64, interest_rate: f64) -> f64 {
    balance * (1.0 + interest_rate)
}

/// First normalization: a region may not bid for more than its gross output.
/// Every bid in the row is scaled by `min(1, q / sum(bids))`; a zero bid sum
/// leaves the row unchanged.
pub fn scale_bids_to_output(bids_row: &mut [f64], gross_output: f64) {
    let sum: f64 = bids_row.iter().sum();
    if sum <= 0.0 {
        return;
    }
    let factor = (gross_output / sum).min(1.0);
    if factor < 1.0 {
        for b in bids_row.iter_mut() {
            *b *= factor;
        }
    }
}

/// Second normalization: bids scale with the debt-to-initial-capital ratio
/// `d = debt_scale * balance / k0`, clamped at zero when `1 + d` goes
/// negative.
pub fn apply_debt_scaling(bids_row: &mut [f64], balance: f64, k0: f64, debt_scale: f64) {
    let d = debt_scale * balance / k0;
    let factor = (1.0 + d).max(0.0);
    for b in bids_row.iter_mut() {
        *b = (*b * factor).max(0.0);
    }
}

/// Per-region export ceiling `min(p_x * q, q - investment)`, floored at zero.
pub fn export_ceiling(gross_output: f64, investment: f64, export_limit: f64) -> f64 {
    (export_limit * gross_output)
        .min(gross_output - investment)
        .max(0.0)
}

/// Third normalization: incoming bids for each exporter are scaled to its
/// export ceiling. Returns the realized import matrix.
pub fn cap_exports(
    bids: &[Vec<f64>],
    gross_output: &[f64],
    investment: &[f64],
    export_limits: &[f64],
) -> Vec<Vec<f64>> {
    let n = bids.len();
    let mut x: Vec<Vec<f64>> = bids.to_vec();
    for exporter in 0..n {
        let ceiling = export_ceiling(
            gross_output[exporter],
            investment[exporter],
            export_limits[exporter],
        );
        let incoming: f64 = (0..n).map(|i| bids[i][exporter]).sum();
        let mut factor = if incoming > 0.0 {
            (ceiling / incoming).min(1.0)
        } else {
            1.0
        };
        if factor < 1.0 {
            // Rounding in the scaled column sum can overshoot the ceiling by
            // a few ulps; shave the factor until the realized exports
            // actually fit. The cap is a hard constraint.
            for _ in 0..64 {
                let realized: f64 = (0..n).map(|i| bids[i][exporter] * factor).sum();
                if realized <= ceiling {
                    break;
                }
                factor *= 1.0 - 2f64.powi(-44);
            }
            for row in x.iter_mut() {
                row[exporter] *= factor;
            }
        }
    }
    x
}

/// Tariffed consumption `C = x * (1 - tau)` and the revenue `tau * x`.
pub fn tariff_consumption(import: f64, tariff: f64) -> (f64, f64) {
    (import * (1.0 - tariff), tariff * import)
}

/// Domestic consumption `(1 - s) * q - exports`, clamped at zero.
/// Returns the consumption and whether clamping occurred.
pub fn domestic_consumption(gross_output: f64, savings: f64, exports: f64) -> (f64, bool) {
    let c = (1.0 - savings) * gross_output - exports;
    if c < 0.0 {
        (0.0, true)
    } else {
        (c, false)
    }
}

/// Armington aggregation
/// `C = (psi_dom * C_dom^lambda + sum_j psi_for * C_j^lambda)^(1/lambda)`.
pub fn aggregate_consumption(
    domestic: f64,
    foreign: &[f64],
    lambda: f64,
    psi_dom: f64,
    psi_for: f64,
) -> Result<f64> {
    if lambda == 0.0 {
        return Err(Error::Config(
            "armington aggregation is undefined for lambda = 0".to_string(),
        ));
    }
    let mut acc = psi_dom * domestic.powf(lambda);
    for &c in foreign {
        acc += psi_for * c.powf(lambda);
    }
    Ok(acc.powf(1.0 / lambda))
}

/// Isoelastic utility `r = L / (1 - alpha) * (C / L)^(1 - alpha)`.
///
/// The log-utility limit `alpha = 1` is rejected rather than assumed.
pub fn utility(labor: f64, consumption: f64, alpha: f64) -> Result<f64> {
    if alpha == 1.0 {
        return Err(Error::Config(
            "utility is undefined for alpha = 1".to_string(),
        ));
    }
    Ok(labor / (1.0 - alpha) * (consumption / labor).powf(1.0 - alpha))
}

/// Balance update `D' = D + Delta * (exports - imports)`.
pub fn update_balance(
    balance: f64,
    imports_total: f64,
    exports_total: f64,
    delta_years: u32,
) -> f64 {
    balance + delta_years as f64 * (exports_total - imports_total)
}

/// Runs the full per-step trade pipeline in normalization order:
/// output scaling, debt scaling, export caps, then tariffs.
///
/// `balances` must already carry this step's interest.
#[allow(clippy::too_many_arguments)]
pub fn settle_trade(
    mut bids: Vec<Vec<f64>>,
    gross_output: &[f64],
    investment: &[f64],
    export_limits: &[f64],
    tariffs: &[Vec<f64>],
    balances: &[f64],
    k0: &[f64],
    debt_scale: f64,
) -> TradeFlows {
    let n = bids.len();
    for row in bids.iter_mut() {
        debug_assert_eq!(row.len(), n);
    }
    for (i, row) in bids.iter_mut().enumerate() {
        row[i] = 0.0;
        scale_bids_to_output(row, gross_output[i]);
        apply_debt_scaling(row, balances[i], k0[i], debt_scale);
    }
    let imports = cap_exports(&bids, gross_output, investment, export_limits);
    let mut tariffed = vec![vec![0.0; n]; n];
    let mut tariff_revenue = vec![0.0; n];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let (c, rev) = tariff_consumption(imports[i][j], tariffs[i][j]);
            tariffed[i][j] = c;
            tariff_revenue[i] += rev;
        }
    }
    let exports = (0..n)
        .map(|j| (0..n).map(|i| imports[i][j]).sum())
        .collect();
    TradeFlows {
        bids,
        imports,
        tariffed,
        tariff_revenue,
        exports,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn interest_examples() {
        assert_eq!(accrue_interest(0.0, 0.1), 0.0);
        assert!((accrue_interest(100.0, 0.10) - 110.0).abs() < 1e-12);
        assert!((accrue_interest(-50.0, 0.10) - -55.0).abs() < 1e-12);
    }

    #[test]
    fn bid_scaling_examples() {
        let mut row = vec![1.0, 0.5];
        scale_bids_to_output(&mut row, 2.0);
        assert_eq!(row, vec![1.0, 0.5]);

        let mut row = vec![2.0, 2.0];
        scale_bids_to_output(&mut row, 2.0);
        assert_eq!(row, vec![1.0, 1.0]);

        let mut row = vec![3.0, 1.0];
        scale_bids_to_output(&mut row, 2.0);
        assert_eq!(row, vec![1.5, 0.5]);

        let mut row = vec![0.0, 0.0];
        scale_bids_to_output(&mut row, 2.0);
        assert_eq!(row, vec![0.0, 0.0]);
    }

    #[test]
    fn debt_scaling_examples() {
        let mut row = vec![1.0, 2.0];
        apply_debt_scaling(&mut row, 0.0, 5.0, 10.0);
        assert_eq!(row, vec![1.0, 2.0]);

        // d = 10 * (k0/10) / k0 = 1 doubles the bids.
        let mut row = vec![1.0, 2.0];
        apply_debt_scaling(&mut row, 0.5, 5.0, 10.0);
        assert_eq!(row, vec![2.0, 4.0]);

        // 1 + d < 0 clamps to zero.
        let mut row = vec![1.0, 2.0];
        apply_debt_scaling(&mut row, -5.0, 5.0, 10.0);
        assert_eq!(row, vec![0.0, 0.0]);
    }

    #[test]
    fn export_cap_examples() {
        // Incoming bids below the ceiling are fulfilled in full.
        let bids = vec![vec![0.0, 0.3], vec![0.2, 0.0]];
        let x = cap_exports(&bids, &[10.0, 10.0], &[0.0, 0.0], &[1.0, 1.0]);
        assert_eq!(x, bids);

        // Zero export limit empties the column.
        let x = cap_exports(&bids, &[10.0, 10.0], &[0.0, 0.0], &[0.0, 1.0]);
        assert_eq!(x[1][0], 0.0);
        assert_eq!(x[0][1], 0.3);

        // Q=10, I=9, p_x=0.5, incoming (2,2): ceiling min(5,1)=1, factor 0.25.
        let bids = vec![
            vec![0.0, 2.0, 0.0],
            vec![2.0, 0.0, 0.0],
            vec![2.0, 0.0, 0.0],
        ];
        let x = cap_exports(
            &bids,
            &[10.0, 10.0, 10.0],
            &[9.0, 0.0, 0.0],
            &[0.5, 1.0, 1.0],
        );
        assert!((x[1][0] - 0.5).abs() < 1e-15);
        assert!((x[2][0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn tariff_examples() {
        assert_eq!(tariff_consumption(4.0, 0.0), (4.0, 0.0));
        assert_eq!(tariff_consumption(4.0, 1.0), (0.0, 4.0));
        assert_eq!(tariff_consumption(4.0, 0.25), (3.0, 1.0));
    }

    #[test]
    fn domestic_consumption_examples() {
        assert_eq!(domestic_consumption(10.0, 0.0, 0.0), (10.0, false));
        assert_eq!(domestic_consumption(10.0, 1.0, 0.0), (0.0, false));
        assert_eq!(domestic_consumption(10.0, 0.3, 2.0), (5.0, false));
        assert_eq!(domestic_consumption(1.0, 0.9, 2.0), (0.0, true));
    }

    #[test]
    fn aggregation_examples() {
        // All foreign components zero with psi_dom = 1 collapses to domestic.
        let c = aggregate_consumption(7.0, &[0.0, 0.0], 0.5, 1.0, 0.3).unwrap();
        assert!((c - 7.0).abs() < 1e-12);

        // lambda = 1 is the weighted linear sum.
        let c = aggregate_consumption(4.0, &[1.0, 2.0], 1.0, 0.5, 0.25).unwrap();
        assert!((c - (0.5 * 4.0 + 0.25 * 1.0 + 0.25 * 2.0)).abs() < 1e-12);

        // psi_dom = psi_for = 1, lambda = 0.5, components (4,1) -> (2+1)^2.
        let c = aggregate_consumption(4.0, &[1.0], 0.5, 1.0, 1.0).unwrap();
        assert!((c - 9.0).abs() < 1e-12);

        assert!(matches!(
            aggregate_consumption(1.0, &[], 0.0, 1.0, 1.0),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn utility_examples() {
        // alpha = 0 reduces to consumption.
        assert!((utility(3.0, 5.0, 0.0).unwrap() - 5.0).abs() < 1e-12);
        assert!((utility(1.0, 1.0, 0.5).unwrap() - 2.0).abs() < 1e-12);
        // alpha = 0.5, L = 4, C = 9 -> 4/0.5 * 1.5.
        assert!((utility(4.0, 9.0, 0.5).unwrap() - 12.0).abs() < 1e-12);
        assert!(matches!(utility(1.0, 1.0, 1.0), Err(Error::Config(_))));
    }

    #[test]
    fn balance_examples() {
        assert_eq!(update_balance(3.0, 2.0, 2.0, 5), 3.0);
        assert_eq!(update_balance(3.0, 1.0, 3.0, 5), 13.0);
        assert_eq!(update_balance(3.0, 0.0, 0.0, 5), 3.0);
    }

    fn matrix_strategy(n: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
        proptest::collection::vec(proptest::collection::vec(0.0f64..5.0, n), n)
    }

    proptest! {
        #[test]
        fn settle_trade_conserves_flows(bids in matrix_strategy(4),
                                        q in proptest::collection::vec(0.1f64..20.0, 4),
                                        s in proptest::collection::vec(0.0f64..=1.0, 4),
                                        px in proptest::collection::vec(0.0f64..=1.0, 4)) {
            let inv: Vec<f64> = q.iter().zip(&s).map(|(q, s)| q * s).collect();
            let tariffs = vec![vec![0.1; 4]; 4];
            let balances = vec![0.0; 4];
            let k0 = vec![1.0; 4];
            let flows = settle_trade(bids, &q, &inv, &px, &tariffs, &balances, &k0, 10.0);

            // Realized exports never exceed the ceiling.
            for j in 0..4 {
                let ceiling = export_ceiling(q[j], inv[j], px[j]);
                prop_assert!(flows.exports[j] <= ceiling + 1e-12);
            }
            // The same matrix read both ways balances exactly.
            let total_imports: f64 = flows.imports.iter().flatten().sum();
            let total_exports: f64 = flows.exports.iter().sum();
            prop_assert!((total_imports - total_exports).abs() <= 1e-12 * total_imports.max(1.0));
        }

        #[test]
        fn balance_updates_are_zero_sum(bids in matrix_strategy(4),
                                        q in proptest::collection::vec(0.1f64..20.0, 4)) {
            let inv = vec![0.0; 4];
            let px = vec![1.0; 4];
            let tariffs = vec![vec![0.0; 4]; 4];
            let balances = vec![0.0; 4];
            let k0 = vec![1.0; 4];
            let flows = settle_trade(bids, &q, &inv, &px, &tariffs, &balances, &k0, 10.0);
            let mut drift = 0.0;
            for i in 0..4 {
                let imports: f64 = flows.imports[i].iter().sum();
                drift += update_balance(0.0, imports, flows.exports[i], 5);
            }
            prop_assert!(drift.abs() <= 1e-12);
        }

        #[test]
        fn aggregation_is_monotone_for_unit_interval_lambda(
            dom in 0.0f64..10.0, f1 in 0.0f64..10.0, f2 in 0.0f64..10.0,
            lambda in 0.05f64..=1.0, bump in 0.01f64..5.0,
        ) {
            let base = aggregate_consumption(dom, &[f1, f2], lambda, 0.5, 0.25).unwrap();
            let more_dom = aggregate_consumption(dom + bump, &[f1, f2], lambda, 0.5, 0.25).unwrap();
            let more_for = aggregate_consumption(dom, &[f1 + bump, f2], lambda, 0.5, 0.25).unwrap();
            prop_assert!(more_dom >= base - 1e-12);
            prop_assert!(more_for >= base - 1e-12);
        }

        #[test]
        fn normalization_order_never_exceeds_export_caps(
            bids in matrix_strategy(5),
            q in proptest::collection::vec(0.1f64..20.0, 5),
            s in proptest::collection::vec(0.0f64..=1.0, 5),
            px in proptest::collection::vec(0.0f64..=1.0, 5),
            d in proptest::collection::vec(-2.0f64..2.0, 5),
        ) {
            let inv: Vec<f64> = q.iter().zip(&s).map(|(q, s)| q * s).collect();
            let tariffs = vec![vec![0.0; 5]; 5];
            let k0 = vec![1.0; 5];
            let flows = settle_trade(bids, &q, &inv, &px, &tariffs, &d, &k0, 10.0);
            for j in 0..5 {
                prop_assert!(flows.exports[j] <= export_ceiling(q[j], inv[j], px[j]) + 1e-12);
            }
            // With non-positive balances the row caps from the first
            // normalization survive debt scaling.
            for i in 0..5 {
                if d[i] <= 0.0 {
                    let row_sum: f64 = flows.bids[i].iter().sum();
                    prop_assert!(row_sum <= q[i] + 1e-9);
                }
            }
        }
    }
}
