//! Rollout persistence: a CSV of `horizon x regions` rows with a fixed,
//! documented column order, plus a JSON sidecar carrying the seed, config
//! hash, and diagnostics. Floats are serialized with 17 significant digits
//! so that read-after-write reproduces every bit.

use std::path::Path;

use crate::actions::ActionSet;
use crate::engine::{RegionRow, RolloutMeta, RolloutRecord, StepGlobal, ROLLOUT_SCHEMA_VERSION};
use crate::error::{Error, Result};

/// The documented rollout schema for `n` regions: per-region vectors expand
/// into indexed columns, and the per-step globals are replicated onto each
/// row of the step.
pub fn rollout_header(n: usize) -> String {
    let mut cols: Vec<String> = vec![
        "step".into(),
        "region".into(),
        "savings".into(),
        "mitigation".into(),
        "export_limit".into(),
    ];
    cols.extend((0..n).map(|j| format!("tariff_{j}")));
    cols.extend((0..n).map(|j| format!("bid_{j}")));
    cols.extend([
        "labor".into(),
        "capital".into(),
        "tfp".into(),
        "sigma".into(),
        "production".into(),
        "gross_output".into(),
        "damage_fraction".into(),
        "abatement_fraction".into(),
        "theta1".into(),
        "emissions".into(),
        "investment".into(),
    ]);
    cols.extend((0..n).map(|j| format!("import_{j}")));
    cols.push("exports_total".into());
    cols.push("consumption_dom".into());
    cols.extend((0..n).map(|j| format!("cons_for_{j}")));
    cols.extend([
        "consumption_agg".into(),
        "utility".into(),
        "balance".into(),
        "tariff_revenue".into(),
        "reserve_fund".into(),
        "agreed_min_rate".into(),
        "mitigation_compliant".into(),
        "t_at".into(),
        "t_lo".into(),
        "m_at".into(),
        "m_up".into(),
        "m_lo".into(),
        "e_total".into(),
        "accepted_deals".into(),
    ]);
    cols.join(",")
}

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_row(out: &mut String, row: &RegionRow, global: &StepGlobal) {
    out.push_str(&row.step.to_string());
    out.push(',');
    out.push_str(&row.region.to_string());
    let mut push = |v: f64| {
        out.push(',');
        out.push_str(&fmt(v));
    };
    push(row.actions.savings);
    push(row.actions.mitigation);
    push(row.actions.export_limit);
    for v in &row.actions.tariffs {
        push(*v);
    }
    for v in &row.actions.bids {
        push(*v);
    }
    push(row.labor);
    push(row.capital);
    push(row.tfp);
    push(row.sigma);
    push(row.production);
    push(row.gross_output);
    push(row.damage_fraction);
    push(row.abatement_fraction);
    push(row.theta1);
    push(row.emissions);
    push(row.investment);
    for v in &row.imports {
        push(*v);
    }
    push(row.exports_total);
    push(row.consumption_dom);
    for v in &row.consumption_for {
        push(*v);
    }
    push(row.consumption_agg);
    push(row.utility);
    push(row.balance);
    push(row.tariff_revenue);
    push(row.reserve_fund);
    push(row.agreed_min_rate);
    out.push(',');
    out.push_str(if row.mitigation_compliant { "1" } else { "0" });
    let mut push = |v: f64| {
        out.push(',');
        out.push_str(&fmt(v));
    };
    push(global.t_at);
    push(global.t_lo);
    push(global.m_at);
    push(global.m_up);
    push(global.m_lo);
    push(global.e_total);
    out.push(',');
    out.push_str(&global.accepted_deals.to_string());
    out.push('\n');
}

/// Serializes a rollout to CSV text.
pub fn rollout_to_csv(record: &RolloutRecord) -> String {
    let n = record.num_regions();
    let mut out = rollout_header(n);
    out.push('\n');
    for row in &record.rows {
        let global = &record.globals[row.step as usize];
        write_row(&mut out, row, global);
    }
    out
}

/// Writes `<path>` (CSV) and `<path>.meta.json` (sidecar).
pub fn write_rollout(record: &RolloutRecord, path: &Path) -> Result<()> {
    std::fs::write(path, rollout_to_csv(record))?;
    let sidecar = serde_json::to_string_pretty(&record.meta)
        .map_err(|e| Error::Config(format!("sidecar serialization: {e}")))?;
    std::fs::write(sidecar_path(path), sidecar)?;
    Ok(())
}

fn sidecar_path(path: &Path) -> std::path::PathBuf {
    let mut name = path.as_os_str().to_os_string();
    name.push(".meta.json");
    std::path::PathBuf::from(name)
}

/// Reads a rollout written by [`write_rollout`]; `read o write` is the
/// identity.
pub fn read_rollout(path: &Path) -> Result<RolloutRecord> {
    let meta_text = std::fs::read_to_string(sidecar_path(path))?;
    let meta: RolloutMeta = serde_json::from_str(&meta_text).map_err(|e| Error::Parse {
        offset: 0,
        message: format!("rollout sidecar: {e}"),
    })?;
    if meta.schema_version != ROLLOUT_SCHEMA_VERSION {
        return Err(Error::SchemaVersion {
            expected: ROLLOUT_SCHEMA_VERSION,
            found: meta.schema_version,
        });
    }
    let n = meta.region_ids.len();
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default();
    if header != rollout_header(n) {
        return Err(Error::Parse {
            offset: 0,
            message: "rollout header does not match the documented schema".to_string(),
        });
    }

    let mut offset = header.len() + 1;
    let mut rows = Vec::new();
    let mut globals: Vec<StepGlobal> = Vec::new();
    for line in lines {
        let line_start = offset;
        offset += line.len() + 1;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        let expected = 32 + 4 * n;
        if fields.len() != expected {
            return Err(Error::Parse {
                offset: line_start,
                message: format!(
                    "rollout row has {} fields, expected {expected}",
                    fields.len()
                ),
            });
        }
        let mut idx = 0usize;
        let mut next = || {
            let f = fields[idx];
            idx += 1;
            f
        };
        let int = |f: &str| -> Result<u64> {
            f.parse::<u64>().map_err(|_| Error::Parse {
                offset: line_start,
                message: format!("'{f}' is not an integer"),
            })
        };
        let num = |f: &str| -> Result<f64> {
            f.parse::<f64>().map_err(|_| Error::Parse {
                offset: line_start,
                message: format!("'{f}' is not a number"),
            })
        };
        let step = int(next())? as u32;
        let region = int(next())? as usize;
        let savings = num(next())?;
        let mitigation = num(next())?;
        let export_limit = num(next())?;
        let mut tariffs = Vec::with_capacity(n);
        for _ in 0..n {
            tariffs.push(num(next())?);
        }
        let mut bids = Vec::with_capacity(n);
        for _ in 0..n {
            bids.push(num(next())?);
        }
        let labor = num(next())?;
        let capital = num(next())?;
        let tfp = num(next())?;
        let sigma = num(next())?;
        let production = num(next())?;
        let gross_output = num(next())?;
        let damage_fraction = num(next())?;
        let abatement_fraction = num(next())?;
        let theta1 = num(next())?;
        let emissions = num(next())?;
        let investment = num(next())?;
        let mut imports = Vec::with_capacity(n);
        for _ in 0..n {
            imports.push(num(next())?);
        }
        let exports_total = num(next())?;
        let consumption_dom = num(next())?;
        let mut consumption_for = Vec::with_capacity(n);
        for _ in 0..n {
            consumption_for.push(num(next())?);
        }
        let consumption_agg = num(next())?;
        let utility = num(next())?;
        let balance = num(next())?;
        let tariff_revenue = num(next())?;
        let reserve_fund = num(next())?;
        let agreed_min_rate = num(next())?;
        let compliant = next() == "1";
        let t_at = num(next())?;
        let t_lo = num(next())?;
        let m_at = num(next())?;
        let m_up = num(next())?;
        let m_lo = num(next())?;
        let e_total = num(next())?;
        let accepted_deals = int(next())? as u32;

        if globals.len() == step as usize {
            globals.push(StepGlobal {
                step,
                t_at,
                t_lo,
                m_at,
                m_up,
                m_lo,
                e_total,
                accepted_deals,
            });
        }
        rows.push(RegionRow {
            step,
            region,
            actions: ActionSet {
                savings,
                mitigation,
                tariffs,
                export_limit,
                bids,
            },
            labor,
            capital,
            tfp,
            sigma,
            production,
            gross_output,
            damage_fraction,
            abatement_fraction,
            theta1,
            emissions,
            investment,
            imports,
            exports_total,
            consumption_dom,
            consumption_for,
            consumption_agg,
            utility,
            balance,
            tariff_revenue,
            reserve_fund,
            agreed_min_rate,
            mitigation_compliant: compliant,
        });
    }

    Ok(RolloutRecord {
        meta,
        globals,
        rows,
    })
}
