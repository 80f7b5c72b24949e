//! World Bank API ingestion: the two-element `[metadata, observations]`
//! JSON layout, and a paginating fetcher over a pluggable transport so the
//! whole test suite runs offline.

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PageMeta {
    pub page: u32,
    pub pages: u32,
    pub per_page: u32,
    pub total: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WbObservation {
    pub country_id: String,
    pub country_value: String,
    pub indicator_id: String,
    pub indicator_value: String,
    pub date: String,
    pub value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldBankPage {
    pub meta: PageMeta,
    pub observations: Vec<WbObservation>,
}

/// Observations for one country, sorted ascending by year, nulls dropped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesFragment {
    pub country_id: String,
    pub country_name: String,
    pub indicator_id: String,
    pub points: Vec<(i32, f64)>,
}

#[derive(Debug, Deserialize)]
struct RawIdValue {
    id: String,
    value: String,
}

#[derive(Debug, Deserialize)]
struct RawObservation {
    indicator: RawIdValue,
    country: RawIdValue,
    date: String,
    value: Option<f64>,
}

fn byte_offset_of(input: &[u8], needle: &str) -> usize {
    input
        .windows(needle.len().max(1))
        .position(|w| w == needle.as_bytes())
        .unwrap_or(0)
}

fn json_error_offset(input: &[u8], e: &serde_json::Error) -> usize {
    // serde_json reports 1-based line/column; convert to a byte offset.
    let (line, column) = (e.line(), e.column());
    let mut offset = 0usize;
    for (i, l) in input.split(|b| *b == b'\n').enumerate() {
        if i + 1 == line {
            return offset + column.saturating_sub(1);
        }
        offset += l.len() + 1;
    }
    0
}

/// Parses one page of the two-element array form into a [`WorldBankPage`].
pub fn parse_worldbank_page(bytes: &[u8]) -> Result<WorldBankPage> {
    let value: serde_json::Value = serde_json::from_slice(bytes).map_err(|e| Error::Parse {
        offset: json_error_offset(bytes, &e),
        message: format!("malformed json: {e}"),
    })?;
    let serde_json::Value::Array(parts) = value else {
        return Err(Error::Parse {
            offset: 0,
            message: "expected a two-element array [metadata, observations]".to_string(),
        });
    };
    if parts.len() != 2 {
        return Err(Error::Parse {
            offset: 0,
            message: format!(
                "expected a two-element array [metadata, observations], got {} elements",
                parts.len()
            ),
        });
    }
    let meta: PageMeta = serde_json::from_value(parts[0].clone()).map_err(|e| Error::Parse {
        offset: 0,
        message: format!("page metadata: {e}"),
    })?;
    let observations = match &parts[1] {
        serde_json::Value::Null => Vec::new(),
        other => {
            let raw: Vec<RawObservation> =
                serde_json::from_value(other.clone()).map_err(|e| Error::Parse {
                    offset: 0,
                    message: format!("observation list: {e}"),
                })?;
            raw.into_iter()
                .map(|r| WbObservation {
                    country_id: r.country.id,
                    country_value: r.country.value,
                    indicator_id: r.indicator.id,
                    indicator_value: r.indicator.value,
                    date: r.date,
                    value: r.value,
                })
                .collect()
        }
    };
    if observations.len() as u32 > meta.per_page {
        return Err(Error::Parse {
            offset: 0,
            message: format!(
                "page holds {} observations but per_page is {}",
                observations.len(),
                meta.per_page
            ),
        });
    }
    Ok(WorldBankPage { meta, observations })
}

/// Parses raw page bytes into per-country series fragments: null values are
/// dropped, observations are sorted ascending by year, and grouping is by
/// country id.
pub fn parse_worldbank_json(bytes: &[u8]) -> Result<Vec<SeriesFragment>> {
    let page = parse_worldbank_page(bytes)?;
    fragments_of(&page.observations, bytes)
}

fn fragments_of(observations: &[WbObservation], raw: &[u8]) -> Result<Vec<SeriesFragment>> {
    let mut grouped: BTreeMap<String, SeriesFragment> = BTreeMap::new();
    for obs in observations {
        let Some(value) = obs.value else { continue };
        let year: i32 = obs.date.trim().parse().map_err(|_| Error::Parse {
            offset: byte_offset_of(raw, &obs.date),
            message: format!("unparseable year '{}'", obs.date),
        })?;
        grouped
            .entry(obs.country_id.clone())
            .or_insert_with(|| SeriesFragment {
                country_id: obs.country_id.clone(),
                country_name: obs.country_value.clone(),
                indicator_id: obs.indicator_id.clone(),
                points: Vec::new(),
            })
            .points
            .push((year, value));
    }
    let mut out: Vec<SeriesFragment> = grouped.into_values().collect();
    for frag in out.iter_mut() {
        frag.points.sort_by_key(|(year, _)| *year);
    }
    Ok(out)
}

/// Minimal HTTP-like transport; tests inject a fixture-backed fake.
pub trait Transport {
    /// Returns (status, body) for a GET of `url`.
    fn get(&self, url: &str) -> Result<(u16, Vec<u8>)>;
}

/// Serves responses from files in a directory, keyed by a sanitized URL.
/// Doubles as the offline cache for the fetch command.
pub struct FileTransport {
    pub dir: PathBuf,
}

/// Sanitizes a URL into the cache file name used by [`FileTransport`].
pub fn cache_key(url: &str) -> String {
    url.chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
        .collect::<String>()
        + ".json"
}

impl Transport for FileTransport {
    fn get(&self, url: &str) -> Result<(u16, Vec<u8>)> {
        let path = self.dir.join(cache_key(url));
        match std::fs::read(&path) {
            Ok(bytes) => Ok((200, bytes)),
            Err(_) => Err(Error::Fetch(format!(
                "no cached response for {url} (looked at {})",
                path.display()
            ))),
        }
    }
}

const MAX_PAGES: u32 = 1000;

pub fn indicator_url(country: &str, indicator: &str, page: u32) -> String {
    format!(
        "https://api.worldbank.org/v2/country/{country}/indicator/{indicator}?format=json&per_page=1000&page={page}"
    )
}

/// Fetches every page of an indicator for a country through `transport`,
/// paginating until `page == pages` (capped at 1000 pages).
pub fn fetch_indicator(
    country: &str,
    indicator: &str,
    transport: &dyn Transport,
) -> Result<Vec<WorldBankPage>> {
    let mut pages = Vec::new();
    let mut page = 1u32;
    loop {
        let url = indicator_url(country, indicator, page);
        let (status, body) = transport.get(&url)?;
        if !(200..300).contains(&status) {
            return Err(Error::Fetch(format!("GET {url} returned status {status}")));
        }
        let parsed = parse_worldbank_page(&body)?;
        let total_pages = parsed.meta.pages;
        pages.push(parsed);
        if total_pages == 0 {
            return Ok(Vec::new());
        }
        if page >= total_pages {
            return Ok(pages);
        }
        if page >= MAX_PAGES {
            return Err(Error::Fetch(format!(
                "pagination for {country}/{indicator} exceeded {MAX_PAGES} pages"
            )));
        }
        page += 1;
    }
}

/// Concatenates fetched pages into per-country series fragments.
pub fn pages_to_fragments(pages: &[WorldBankPage]) -> Result<Vec<SeriesFragment>> {
    let all: Vec<WbObservation> = pages
        .iter()
        .flat_map(|p| p.observations.iter().cloned())
        .collect();
    fragments_of(&all, &[])
}
