//! Config parsing, table and series files, rollout persistence, and the
//! World-Bank-format ingestion path.
//!
//! All parsers reject rather than coerce; serialization always uses '.' as
//! the decimal point regardless of locale. Formats are documented in
//! `docs/FORMATS.md`.

mod region_table;
mod rollout;
mod scenario_file;
mod series;
mod summary;
mod worldbank;

pub use region_table::{parse_region_table, write_region_table};
pub use rollout::{read_rollout, rollout_header, write_rollout};
pub use scenario_file::{load_scenario, parse_scenario_toml, scenario_to_toml};
pub use series::{parse_series_csv, write_series_csv};
pub use summary::{
    read_summary, write_summary, EvaluationReport, ReportPoint, SummaryFile, SUMMARY_SCHEMA_VERSION,
};
pub use worldbank::{
    cache_key, fetch_indicator, indicator_url, pages_to_fragments, parse_worldbank_json,
    FileTransport, PageMeta, SeriesFragment, Transport, WbObservation, WorldBankPage,
};
