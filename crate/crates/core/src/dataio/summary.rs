//! Simulation summaries and evaluation reports (JSON).

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::engine::MonteCarloSummary;
use crate::error::{Error, Result};
use crate::evaluation::RankedSet;

pub const SUMMARY_SCHEMA_VERSION: u32 = 1;

/// Output of the `simulate` command: per-seed end-of-horizon metrics plus
/// their mean and standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryFile {
    pub schema_version: u32,
    pub config_hash: String,
    pub protocol: String,
    pub policies: Vec<String>,
    pub seeds: Vec<u64>,
    pub summary: MonteCarloSummary,
}

pub fn write_summary(file: &SummaryFile, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(file)
        .map_err(|e| Error::Config(format!("summary serialization: {e}")))?;
    std::fs::write(path, text)?;
    Ok(())
}

pub fn read_summary(path: &Path) -> Result<SummaryFile> {
    let text = std::fs::read_to_string(path)?;
    let file: SummaryFile = serde_json::from_str(&text).map_err(|e| Error::Parse {
        offset: 0,
        message: format!("{}: {e}", path.display()),
    })?;
    if file.schema_version != SUMMARY_SCHEMA_VERSION {
        return Err(Error::SchemaVersion {
            expected: SUMMARY_SCHEMA_VERSION,
            found: file.schema_version,
        });
    }
    Ok(file)
}

/// One scored solution inside an evaluation report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportPoint {
    pub set: String,
    pub source: String,
    pub climate_index: f64,
    pub economic_index: f64,
    pub on_front: bool,
}

/// Output of the `evaluate` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub schema_version: u32,
    /// The normalization formulas used to compute the indices.
    pub formula: String,
    pub econ_index_mode: String,
    pub reference: (f64, f64),
    pub t_none: f64,
    pub t_full: f64,
    pub p_min: f64,
    pub p_max: f64,
    pub points: Vec<ReportPoint>,
    /// Sets ranked by hypervolume, descending.
    pub ranking: Vec<RankedSet>,
}

impl EvaluationReport {
    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)
            .map_err(|e| Error::Config(format!("report serialization: {e}")))?;
        std::fs::write(path, text)?;
        Ok(())
    }
}
