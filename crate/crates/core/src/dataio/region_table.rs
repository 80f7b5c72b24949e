//! Region parameter tables: CSV with the region id plus the eight calibrated
//! columns, in the conventional table order.

use crate::error::{Error, Result};
use crate::params::RegionParams;

pub const REGION_TABLE_HEADER: &str = "region_id,a0,k0,l0,l_a,delta_a,g_a,l_g,sigma0";

/// Parses a region table. The sigma-dynamics parameters are global config
/// inputs, so rows come back with `g_sigma`/`delta_sigma` set to zero for
/// the caller to fill in.
pub fn parse_region_table(text: &str) -> Result<Vec<RegionParams>> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| Error::Parse {
        offset: 0,
        message: "empty region table".to_string(),
    })?;
    if header.trim_end() != REGION_TABLE_HEADER {
        return Err(Error::Parse {
            offset: 0,
            message: format!(
                "unexpected region table header '{header}', expected '{REGION_TABLE_HEADER}'"
            ),
        });
    }
    let mut offset = header.len() + 1;
    let mut rows = Vec::new();
    for (line_no, line) in lines {
        let line_start = offset;
        offset += line.len() + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 9 {
            return Err(Error::Parse {
                offset: line_start,
                message: format!(
                    "region table line {} has {} fields, expected 9",
                    line_no + 1,
                    fields.len()
                ),
            });
        }
        let num = |idx: usize| -> Result<f64> {
            fields[idx].trim().parse::<f64>().map_err(|_| Error::Parse {
                offset: line_start,
                message: format!(
                    "region table line {}: '{}' is not a number",
                    line_no + 1,
                    fields[idx]
                ),
            })
        };
        rows.push(RegionParams {
            id: fields[0].trim().to_string(),
            a0: num(1)?,
            k0: num(2)?,
            l0: num(3)?,
            l_a: num(4)?,
            delta_a: num(5)?,
            g_a: num(6)?,
            l_g: num(7)?,
            sigma0: num(8)?,
            g_sigma: 0.0,
            delta_sigma: 0.0,
        });
    }
    Ok(rows)
}

/// Writes a region table. Floats use the shortest round-trip representation.
pub fn write_region_table(regions: &[RegionParams]) -> String {
    let mut out = String::from(REGION_TABLE_HEADER);
    out.push('\n');
    for r in regions {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.id, r.a0, r.k0, r.l0, r.l_a, r.delta_a, r.g_a, r.l_g, r.sigma0
        ));
    }
    out
}
