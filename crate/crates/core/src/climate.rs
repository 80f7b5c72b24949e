//! Carbon-cycle and energy-balance updates.
//!
//! Pure functions over the climate state. Time arguments use the 1-based
//! paper convention: the engine passes `step_index + 1`, so the first step
//! evaluates decay exponents at zero.

use crate::error::{Error, Result};
use crate::params::GlobalParams;

/// Radiative forcing `F = f_2x * log2(m_at / m_at_1750) + f_ex`, W/m^2.
pub fn radiative_forcing(m_at: f64, f_ex: f64, params: &GlobalParams) -> Result<f64> {
    if m_at <= 0.0 {
        return Err(Error::Domain(format!(
            "radiative forcing requires m_at > 0, got {m_at}"
        )));
    }
    Ok(params.f_2x * (m_at / params.m_at_1750).log2() + f_ex)
}

/// One energy-balance step: `T' = Phi_T * T + B_T * F`.
pub fn step_temperature(t_at: f64, t_lo: f64, forcing: f64, params: &GlobalParams) -> (f64, f64) {
    let p = &params.phi_t;
    (
        p[0][0] * t_at + p[0][1] * t_lo + params.b_t[0] * forcing,
        p[1][0] * t_at + p[1][1] * t_lo + params.b_t[1] * forcing,
    )
}

/// One carbon-cycle step: `M' = Phi_M * M + B_M * E_total`.
///
/// A resulting negative reservoir signals an invalid transition matrix and is
/// reported as a state error naming the reservoir.
pub fn step_carbon(
    masses: [f64; 3],
    total_emission: f64,
    params: &GlobalParams,
) -> Result<[f64; 3]> {
    let p = &params.phi_m;
    let mut out = [0.0f64; 3];
    for r in 0..3 {
        out[r] = p[r][0] * masses[0]
            + p[r][1] * masses[1]
            + p[r][2] * masses[2]
            + params.b_m[r] * total_emission;
    }
    let names = ["m_at", "m_up", "m_lo"];
    for (r, &v) in out.iter().enumerate() {
        if v < 0.0 {
            return Err(Error::State(format!(
                "carbon step drove reservoir {} below zero ({v})",
                names[r]
            )));
        }
    }
    Ok(out)
}

/// Land-use emissions at paper time `t >= 1`: `e_l0 * (1 - delta_el)^(t-1)`.
pub fn land_emissions(t: u32, params: &GlobalParams) -> f64 {
    debug_assert!(t >= 1);
    params.e_l0 * (1.0 - params.delta_el).powi(t as i32 - 1)
}
