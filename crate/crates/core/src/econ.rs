//! Production, damages, abatement, and the per-region economic updates.
//!
//! Time arguments use the 1-based paper convention, as in [`crate::climate`].

use crate::params::{GlobalParams, RegionParams};

/// Cobb-Douglas production `Y = A * K^gamma * L^(1-gamma)`, with `0^0 = 1`.
pub fn production(tfp: f64, capital: f64, labor: f64, gamma: f64) -> f64 {
    tfp * capital.powf(gamma) * labor.powf(1.0 - gamma)
}

/// Fraction of output retained after climate damages: `1 - a1*T - a2*T^2`.
///
/// May go negative for extreme temperatures; callers clamp before use.
pub fn damage_fraction(t_at: f64, a1: f64, a2: f64) -> f64 {
    1.0 - a1 * t_at - a2 * t_at * t_at
}

/// Mitigation-cost coefficient
/// `theta1 = p_b / (1000 * theta2) * (1 - delta_pb)^(t-1) * sigma`.
pub fn mitigation_cost_coeff(sigma: f64, t: u32, params: &GlobalParams) -> f64 {
    debug_assert!(t >= 1);
    params.p_b / (1000.0 * params.theta2) * (1.0 - params.delta_pb).powi(t as i32 - 1) * sigma
}

/// Fraction of output retained after abatement: `1 - theta1 * mu^theta2`.
pub fn abatement_fraction(theta1: f64, mu: f64, theta2: f64) -> f64 {
    1.0 - theta1 * mu.powf(theta2)
}

/// Gross output `Q = damage_frac * abate_frac * Y`.
pub fn gross_output(damage_frac: f64, abate_frac: f64, production: f64) -> f64 {
    damage_frac * abate_frac * production
}

/// Capital step `K' = (1-delta_k)^Delta * K + Delta * Q * s`.
///
/// `Q` already carries the damage and abatement multipliers.
pub fn step_capital(
    capital: f64,
    gross_output: f64,
    savings: f64,
    delta_k: f64,
    delta_years: u32,
) -> f64 {
    (1.0 - delta_k).powi(delta_years as i32) * capital + delta_years as f64 * gross_output * savings
}

/// Population step `L' = L * ((1 + L_a) / (1 + L))^l_g`.
pub fn step_population(labor: f64, region: &RegionParams) -> f64 {
    labor * ((1.0 + region.l_a) / (1.0 + labor)).powf(region.l_g)
}

/// Technology step `A' = (e^eta + g_a * e^(-delta_a * Delta * (t-1))) * A`.
pub fn step_technology(tfp: f64, t: u32, region: &RegionParams, global: &GlobalParams) -> f64 {
    debug_assert!(t >= 1);
    let decay = (-region.delta_a * global.delta_years as f64 * (t as f64 - 1.0)).exp();
    (global.eta.exp() + region.g_a * decay) * tfp
}

/// Carbon-intensity step
/// `sigma' = sigma * exp(-g_sigma * (1 - delta_sigma)^(Delta*(t-1)) * Delta)`.
pub fn step_carbon_intensity(sigma: f64, t: u32, region: &RegionParams, delta_years: u32) -> f64 {
    debug_assert!(t >= 1);
    let decay = (1.0 - region.delta_sigma).powf(delta_years as f64 * (t as f64 - 1.0));
    sigma * (-region.g_sigma * decay * delta_years as f64).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn region() -> RegionParams {
        RegionParams {
            id: "r01".into(),
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
    fn production_unit_case() {
        assert_eq!(production(1.0, 1.0, 1.0, 0.3), 1.0);
    }

    #[test]
    fn production_hand_example() {
        // 2 * 4^0.5 * 9^0.5 = 2 * 2 * 3
        assert!((production(2.0, 4.0, 9.0, 0.5) - 12.0).abs() < 1e-12);
    }

    #[test]
    fn production_zero_to_the_zero_is_one() {
        assert_eq!(production(3.0, 0.0, 5.0, 0.0), 15.0);
        assert_eq!(production(3.0, 5.0, 0.0, 1.0), 15.0);
    }

    #[test]
    fn damage_examples() {
        assert_eq!(damage_fraction(0.0, 0.01, 0.002), 1.0);
        assert_eq!(damage_fraction(12.0, 0.0, 0.0), 1.0);
        assert!((damage_fraction(2.0, 0.01, 0.002) - 0.972).abs() < 1e-12);
    }

    #[test]
    fn mitigation_cost_coeff_examples() {
        let mut g = GlobalParams::new_defaults();
        g.p_b = 550.0;
        g.theta2 = 2.6;
        g.delta_pb = 0.025;
        assert_eq!(mitigation_cost_coeff(0.0, 7, &g), 0.0);
        // p_b=550, theta2=2.6, sigma=0.456, t=1 -> 550/2600 * 0.456
        let got = mitigation_cost_coeff(0.456, 1, &g);
        assert!((got - 550.0 / 2600.0 * 0.456).abs() < 1e-12);
        assert!((got - 0.09646).abs() < 5e-6);
        // no decay: constant in t
        g.delta_pb = 0.0;
        assert_eq!(
            mitigation_cost_coeff(0.456, 1, &g),
            mitigation_cost_coeff(0.456, 9, &g)
        );
    }

    #[test]
    fn abatement_examples() {
        assert_eq!(abatement_fraction(0.3, 0.0, 2.6), 1.0);
        assert!((abatement_fraction(0.3, 1.0, 2.6) - 0.7).abs() < 1e-12);
        assert!((abatement_fraction(0.1, 0.5, 2.0) - 0.975).abs() < 1e-12);
    }

    #[test]
    fn gross_output_examples() {
        assert_eq!(gross_output(1.0, 1.0, 7.5), 7.5);
        assert_eq!(gross_output(0.0, 0.9, 7.5), 0.0);
        assert!((gross_output(0.972, 0.975, 12.0) - 11.3724).abs() < 1e-12);
    }

    #[test]
    fn capital_examples() {
        // No investment, no depreciation.
        assert_eq!(step_capital(3.0, 2.0, 0.0, 0.0, 5), 3.0);
        // Pure investment from zero capital.
        assert_eq!(step_capital(0.0, 2.0, 0.5, 0.1, 5), 5.0);
        // Pure depreciation: 10 * 0.9^5.
        let got = step_capital(10.0, 0.0, 0.7, 0.1, 5);
        assert!((got - 10.0 * 0.9f64.powi(5)).abs() < 1e-12);
        assert!((got - 5.9049).abs() < 1e-12);
    }

    #[test]
    fn population_fixed_point_at_convergence() {
        let mut r = region();
        r.l_a = 669.594;
        let next = step_population(669.594, &r);
        assert!((next - 669.594).abs() < 1e-12);
    }

    #[test]
    fn population_zero_rate_is_identity() {
        let mut r = region();
        r.l_g = 0.0;
        assert_eq!(step_population(123.4, &r), 123.4);
    }

    #[test]
    fn population_table_row_hand_value() {
        let r = region();
        let want = 476.878 * (670.594f64 / 477.878).powf(0.034);
        assert!((step_population(476.878, &r) - want).abs() < 1e-12);
    }

    #[test]
    fn technology_examples() {
        let mut g = GlobalParams::new_defaults();
        let mut r = region();
        // Long-run growth only.
        r.g_a = 0.0;
        g.eta = 0.0033;
        let got = step_technology(2.0, 5, &r, &g);
        assert!((got - 2.0 * 0.0033f64.exp()).abs() < 1e-12);
        // Identity when both growth terms vanish.
        g.eta = 0.0;
        assert_eq!(step_technology(2.0, 3, &r, &g), 2.0);
        // Table row 1 at t=1: (e^0.0033 + 0.122) * 1.872.
        g.eta = 0.0033;
        r.g_a = 0.122;
        r.delta_a = 0.139;
        let got = step_technology(1.872, 1, &r, &g);
        assert!((got - (0.0033f64.exp() + 0.122) * 1.872).abs() < 1e-12);
    }

    #[test]
    fn carbon_intensity_examples() {
        let mut r = region();
        r.g_sigma = 0.0;
        assert_eq!(step_carbon_intensity(0.8, 4, &r, 5), 0.8);
        r.g_sigma = 0.0152;
        assert_eq!(step_carbon_intensity(0.0, 4, &r, 5), 0.0);
        r.g_sigma = 0.01;
        r.delta_sigma = 0.0;
        let got = step_carbon_intensity(1.0, 1, &r, 5);
        assert!((got - (-0.05f64).exp()).abs() < 1e-12);
        assert!((got - 0.951229).abs() < 1e-6);
    }

    #[test]
    fn population_converges_to_l_a() {
        // |L_t - L_a| strictly decreasing, below 1e-6 * L_a within the cap.
        let r = region();
        let mut l = 100.0;
        let mut gap = (l - r.l_a).abs();
        let mut converged = false;
        for _ in 0..10_000 {
            l = step_population(l, &r);
            let next_gap = (l - r.l_a).abs();
            assert!(next_gap < gap);
            gap = next_gap;
            if gap < 1e-6 * r.l_a {
                converged = true;
                break;
            }
        }
        assert!(converged, "population did not converge within 1e4 steps");
    }

    proptest! {
        #[test]
        fn production_is_degree_one_homogeneous(
            a in 0.1f64..30.0, k in 0.01f64..20.0, l in 1.0f64..1000.0,
            gamma in 0.0f64..=1.0,
        ) {
            for c in [0.5, 2.0, 10.0] {
                let scaled = production(a, c * k, c * l, gamma);
                let want = c * production(a, k, l, gamma);
                prop_assert!((scaled - want).abs() <= 1e-12 * want.abs());
            }
        }
    }
}
