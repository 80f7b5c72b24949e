//! The fetch-data subcommand. Network access goes through the pluggable
//! transport: with `RICE_SIM_FETCH_CACHE` set, responses come from that
//! directory instead of the wire (and the rest of the binary never touches
//! the network at all).

use rice_core::dataio::{self, FileTransport, Transport, WorldBankPage};
use rice_core::error::Error;

use crate::FetchArgs;

struct HttpTransport;

impl Transport for HttpTransport {
    fn get(&self, url: &str) -> Result<(u16, Vec<u8>), Error> {
        let mut response = ureq::get(url)
            .call()
            .map_err(|e| Error::Fetch(format!("GET {url}: {e}")))?;
        let status = response.status().as_u16();
        let body = response
            .body_mut()
            .read_to_vec()
            .map_err(|e| Error::Fetch(format!("reading {url}: {e}")))?;
        Ok((status, body))
    }
}

pub fn cmd_fetch(args: FetchArgs) -> Result<(), Error> {
    let cache = std::env::var("RICE_SIM_FETCH_CACHE").ok();
    let pages = match cache {
        Some(dir) => {
            let transport = FileTransport { dir: dir.into() };
            dataio::fetch_indicator(&args.country, &args.indicator, &transport)?
        }
        None => dataio::fetch_indicator(&args.country, &args.indicator, &HttpTransport)?,
    };

    // Re-emit the canonical two-element layout with all pages concatenated.
    let observations: Vec<serde_json::Value> = pages
        .iter()
        .flat_map(|p: &WorldBankPage| p.observations.iter())
        .map(|o| {
            serde_json::json!({
                "indicator": {"id": o.indicator_id, "value": o.indicator_value},
                "country": {"id": o.country_id, "value": o.country_value},
                "date": o.date,
                "value": o.value,
            })
        })
        .collect();
    let total = observations.len();
    let merged = serde_json::json!([
        {"page": 1, "pages": 1, "per_page": total.max(1), "total": total},
        observations,
    ]);
    std::fs::write(&args.output, serde_json::to_string_pretty(&merged).unwrap())?;
    println!(
        "fetched {} observation(s) for {}/{} into {}",
        total,
        args.country,
        args.indicator,
        args.output.display()
    );
    Ok(())
}
