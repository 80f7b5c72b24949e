//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Scenario validation collects every violated invariant, not just the first.
    #[error("scenario validation failed:\n{}", .0.join("\n"))]
    Validation(Vec<String>),

    /// A mathematical precondition was violated (e.g. log of a non-positive mass).
    #[error("domain error: {0}")]
    Domain(String),

    /// A state update produced an invalid value, e.g. a negative carbon reservoir.
    #[error("state error: {0}")]
    State(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("region {region} violated the {head} action mask")]
    MaskViolation { region: usize, head: &'static str },

    /// NaN or infinity appeared in the world state; carries a dump of the offending step.
    #[error("non-finite value in {field} at step {step}; state dump: {dump}")]
    NonFinite {
        step: u32,
        field: String,
        dump: String,
    },

    #[error("calibration error: {0}")]
    Calibration(String),

    /// Simplex search hit the iteration cap; carries the best point found so far.
    #[error("fit did not converge after {iterations} iterations (best g_a={g_a}, delta_a={delta_a}, residual={residual})")]
    FitDidNotConverge {
        iterations: usize,
        g_a: f64,
        delta_a: f64,
        residual: f64,
    },

    #[error("evaluation error: {0}")]
    Evaluation(String),

    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },

    #[error("fetch error: {0}")]
    Fetch(String),

    #[error("unsupported schema version {found} (expected {expected})")]
    SchemaVersion { expected: u32, found: u32 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
