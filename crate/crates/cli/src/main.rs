//! `rice-sim`: scenario simulation, calibration, evaluation, data fetching,
//! and region-table transforms over the rice-core library.
//!
//! Exit codes: 0 success, 1 runtime error, 2 invalid configuration or usage.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use rice_core::agents::PolicySpec;
use rice_core::calibration::{self, Reference};
use rice_core::dataio;
use rice_core::engine::{self, ProtocolSpec};
use rice_core::error::Error;
use rice_core::evaluation::{self, OutcomePoint};
use rice_core::negotiation::ProtocolKind;
use rice_core::params::RegionParams;
use rice_core::scenario::Scenario;

mod fetch;

#[derive(Parser)]
#[command(
    name = "rice-sim",
    version,
    about = "Deterministic multi-region climate-economy simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run Monte-Carlo rollouts for a scenario and write rollouts + summary.
    Simulate(SimulateArgs),
    /// Fit region parameters from historical series files.
    Calibrate(CalibrateArgs),
    /// Score solution summaries against extremal baselines.
    Evaluate(EvaluateArgs),
    /// Fetch World Bank indicator series (the only networked subcommand).
    FetchData(FetchArgs),
    /// Region-table transforms.
    #[command(subcommand)]
    Regions(RegionsCommand),
}

#[derive(Args)]
struct SimulateArgs {
    /// Scenario TOML (may reference a region table via regions_file).
    #[arg(long)]
    scenario: PathBuf,
    /// Override the region table referenced by the scenario.
    #[arg(long)]
    regions: Option<PathBuf>,
    /// Negotiation protocol: none|unilateral|bilateral|club.
    #[arg(long, default_value = "none")]
    protocol: String,
    /// Policy per region (one value applies to all):
    /// extremal_min|extremal_max|constant(...)|random(seed).
    #[arg(long = "policy", default_value = "extremal_min")]
    policies: Vec<String>,
    /// Comma-separated episode seeds.
    #[arg(long, default_value = "1", value_delimiter = ',')]
    seeds: Vec<u64>,
    #[arg(long, default_value = "out")]
    output_dir: PathBuf,
    /// Mitigation-correction coefficient for the unilateral protocol.
    #[arg(long, default_value_t = 1.0)]
    unilateral_alpha: f64,
    /// Record compliance flags instead of enforcing agreements via masks.
    #[arg(long)]
    non_binding: bool,
    /// Worker threads for the seed fan-out; defaults to RICE_SIM_THREADS.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct CalibrateArgs {
    /// Directory of per-region series CSVs (<region_id>.csv).
    #[arg(long)]
    series_dir: PathBuf,
    /// Output region-table CSV.
    #[arg(long)]
    output: PathBuf,
    #[arg(long, default_value_t = 0.0033)]
    eta: f64,
    /// Years between series observations.
    #[arg(long, default_value_t = 1)]
    delta_years: u32,
    /// Neighbors used to impute missing values.
    #[arg(long, default_value_t = 5)]
    knn: usize,
    /// Capital elasticity used when imputing TFP from output.
    #[arg(long, default_value_t = 0.3)]
    gamma: f64,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Summary files forming the default solution set.
    #[arg(required = false)]
    summaries: Vec<PathBuf>,
    /// Named solution sets: NAME=path1,path2,...
    #[arg(long = "set")]
    sets: Vec<String>,
    /// Summary of the no-mitigation extremal baseline.
    #[arg(long)]
    extremal_none: PathBuf,
    /// Summary of the full-mitigation extremal baseline.
    #[arg(long)]
    extremal_full: PathBuf,
    #[arg(long, default_value = "report.json")]
    output: PathBuf,
    /// Economic index source: cumulative|terminal production.
    #[arg(long, default_value = "cumulative")]
    econ_index: String,
}

#[derive(Args)]
struct FetchArgs {
    /// Country code, e.g. DE.
    #[arg(long)]
    country: String,
    /// Indicator code, e.g. SP.POP.TOTL.
    #[arg(long)]
    indicator: String,
    /// Output JSON (canonical two-element World Bank layout).
    #[arg(long)]
    output: PathBuf,
}

#[derive(Subcommand)]
enum RegionsCommand {
    /// Merge listed regions into one row.
    Merge(MergeArgs),
    /// Split one region into pieces.
    Split(SplitArgs),
}

#[derive(Args)]
struct MergeArgs {
    #[arg(long)]
    table: PathBuf,
    /// Region ids to merge, comma separated.
    #[arg(long, value_delimiter = ',')]
    ids: Vec<String>,
    #[arg(long)]
    new_id: String,
    #[arg(long, default_value_t = 0.3)]
    gamma: f64,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args)]
struct SplitArgs {
    #[arg(long)]
    table: PathBuf,
    /// Region id to split.
    #[arg(long)]
    id: String,
    /// Output/population fractions, comma separated (must sum to 1).
    #[arg(long, value_delimiter = ',')]
    fractions: Vec<f64>,
    /// Sampled TFP per piece, comma separated.
    #[arg(long, value_delimiter = ',')]
    tfps: Vec<f64>,
    #[arg(long, default_value_t = 0.3)]
    gamma: f64,
    #[arg(long)]
    output: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(args) => cmd_simulate(args),
        Command::Calibrate(args) => cmd_calibrate(args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::FetchData(args) => fetch::cmd_fetch(args),
        Command::Regions(RegionsCommand::Merge(args)) => cmd_merge(args),
        Command::Regions(RegionsCommand::Split(args)) => cmd_split(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

/// Validation and configuration problems exit 2; runtime failures exit 1.
fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::Validation(_)
        | Error::Config(_)
        | Error::Parse { .. }
        | Error::SchemaVersion { .. } => 2,
        _ => 1,
    }
}

fn load_scenario(path: &Path, regions_override: Option<&Path>) -> Result<Scenario, Error> {
    let mut scenario = dataio::load_scenario(path)?;
    if let Some(table) = regions_override {
        let text = std::fs::read_to_string(table)?;
        let mut regions = dataio::parse_region_table(&text)?;
        let (g_sigma, delta_sigma) = scenario
            .regions
            .first()
            .map(|r| (r.g_sigma, r.delta_sigma))
            .unwrap_or((0.0, 0.0));
        for r in regions.iter_mut() {
            r.g_sigma = g_sigma;
            r.delta_sigma = delta_sigma;
        }
        scenario.regions = regions;
        scenario.validate()?;
    }
    Ok(scenario)
}

fn threads_from_env() -> Option<usize> {
    std::env::var("RICE_SIM_THREADS")
        .ok()
        .and_then(|v| v.parse().ok())
}

fn cmd_simulate(args: SimulateArgs) -> Result<(), Error> {
    let scenario = load_scenario(&args.scenario, args.regions.as_deref())?;
    let kind = ProtocolKind::parse(&args.protocol)?;
    let mut protocol = ProtocolSpec::new(kind);
    protocol.unilateral_alpha = args.unilateral_alpha;
    protocol.enforce_masks = !args.non_binding;

    let n = scenario.num_regions();
    let specs: Vec<PolicySpec> = if args.policies.len() == 1 {
        vec![PolicySpec::parse(&args.policies[0])?; n]
    } else if args.policies.len() == n {
        args.policies
            .iter()
            .map(|p| PolicySpec::parse(p))
            .collect::<Result<_, _>>()?
    } else {
        return Err(Error::Config(format!(
            "got {} --policy values for {n} regions (pass one or one per region)",
            args.policies.len()
        )));
    };
    if args.seeds.is_empty() {
        return Err(Error::Config("at least one seed is required".into()));
    }
    let threads = args.threads.or_else(threads_from_env);

    let (rollouts, summary) =
        engine::monte_carlo(&scenario, protocol, &specs, &args.seeds, threads)?;

    std::fs::create_dir_all(&args.output_dir)?;
    for rollout in &rollouts {
        let path = args
            .output_dir
            .join(format!("rollout_seed{}.csv", rollout.meta.seed));
        dataio::write_rollout(rollout, &path)?;
    }
    let summary_file = dataio::SummaryFile {
        schema_version: dataio::SUMMARY_SCHEMA_VERSION,
        config_hash: rollouts[0].meta.config_hash.clone(),
        protocol: kind.to_string(),
        policies: specs.iter().map(|s| s.to_string()).collect(),
        seeds: args.seeds.clone(),
        summary,
    };
    let summary_path = args.output_dir.join("summary.json");
    dataio::write_summary(&summary_file, &summary_path)?;

    let s = &summary_file.summary;
    println!(
        "simulated {} seed(s): t_at_end {:.4} +/- {:.4} degC, cumulative production {:.4} +/- {:.4}",
        args.seeds.len(),
        s.mean.t_at_end,
        s.std.t_at_end,
        s.mean.cumulative_production,
        s.std.cumulative_production,
    );
    println!(
        "wrote {} rollout file(s) and {}",
        rollouts.len(),
        summary_path.display()
    );
    Ok(())
}

struct RegionInput {
    id: String,
    series: calibration::HistoricalSeries,
    /// Latest-year (gdp, population) features for imputation.
    features: (f64, f64),
}

fn cmd_calibrate(args: CalibrateArgs) -> Result<(), Error> {
    let mut entries: Vec<PathBuf> = std::fs::read_dir(&args.series_dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    entries.sort();
    if entries.is_empty() {
        return Err(Error::Config(format!(
            "no series CSVs found in {}",
            args.series_dir.display()
        )));
    }

    // Load everything first, collecting per-region errors.
    let mut inputs = Vec::new();
    let mut problems = Vec::new();
    for path in &entries {
        let id = path
            .file_stem()
            .map(|s| s.to_string_lossy().to_string())
            .unwrap_or_default();
        let text = std::fs::read_to_string(path)?;
        let series = match dataio::parse_series_csv(&id, &text) {
            Ok(s) => s,
            Err(e) => {
                problems.push(format!("{id}: {e}"));
                continue;
            }
        };
        let latest = |col: &[Option<f64>]| col.iter().rev().flatten().next().copied();
        let gdp = latest(&series.gdp);
        let pop = latest(&series.population);
        match (gdp, pop) {
            (Some(g), Some(p)) => inputs.push(RegionInput {
                id,
                series,
                features: (g, p),
            }),
            _ => problems.push(format!(
                "{id}: gdp and population series are required (for fitting and imputation features)"
            )),
        }
    }
    if !problems.is_empty() {
        return Err(Error::Config(format!(
            "calibration inputs are unusable for {} region(s):\n{}",
            problems.len(),
            problems.join("\n")
        )));
    }

    // Imputation references from the regions that carry each value.
    let latest = |col: &[Option<f64>]| col.iter().rev().flatten().next().copied();
    let reference_set = |value_of: &dyn Fn(&RegionInput) -> Option<f64>| -> Vec<Reference> {
        inputs
            .iter()
            .filter_map(|r| {
                value_of(r).map(|value| Reference {
                    gdp: r.features.0,
                    population: r.features.1,
                    value,
                })
            })
            .collect()
    };
    let capital_refs = reference_set(&|r| latest(&r.series.capital));
    let la_refs = reference_set(&|r| r.series.l_a);
    let sigma_refs = reference_set(&|r| {
        let e = latest(&r.series.emissions)?;
        let y = latest(&r.series.gdp)?;
        Some(e / y)
    });

    let impute = |refs: &[Reference], target: (f64, f64), what: &str| -> Result<f64, Error> {
        calibration::knn_impute(&[target], refs, args.knn)
            .map(|v| v[0])
            .map_err(|e| Error::Calibration(format!("imputing {what}: {e}")))
    };

    let mut table = Vec::new();
    println!("region    l_g         g_a         delta_a     pop_sse      tech_sse");
    for input in &inputs {
        let s = &input.series;
        let pop_series = calibration::HistoricalSeries::dense(&s.population);
        let l_a = match s.l_a {
            Some(v) => v,
            None => impute(&la_refs, input.features, "l_a")?,
        };
        let l_g = calibration::fit_population(&pop_series, l_a)
            .map_err(|e| Error::Calibration(format!("{}: {e}", input.id)))?;
        let pop_sse: f64 = pop_series
            .windows(2)
            .map(|w| {
                let predicted = w[0] * ((1.0 + l_a) / (1.0 + w[0])).powf(l_g);
                (w[1] - predicted).powi(2)
            })
            .sum();

        // TFP series: as given, or imputed from output, capital, and labor.
        let tfp_series: Vec<f64> = if s.tfp.iter().any(|v| v.is_some()) {
            calibration::HistoricalSeries::dense(&s.tfp)
        } else {
            s.gdp
                .iter()
                .zip(&s.capital)
                .zip(&s.population)
                .filter_map(|((y, k), l)| match (y, k, l) {
                    (Some(y), Some(k), Some(l)) => {
                        Some(y / (k.powf(args.gamma) * l.powf(1.0 - args.gamma)))
                    }
                    _ => None,
                })
                .collect()
        };
        let fit = calibration::fit_technology(&tfp_series, args.eta, args.delta_years)
            .map_err(|e| Error::Calibration(format!("{}: {e}", input.id)))?;

        let k0 = match latest(&s.capital) {
            Some(v) => v,
            None => impute(&capital_refs, input.features, "capital")?,
        };
        let sigma0 = match (latest(&s.emissions), latest(&s.gdp)) {
            (Some(e), Some(y)) => e / y,
            _ => impute(&sigma_refs, input.features, "sigma0")?,
        };
        let a0 = *tfp_series.last().ok_or_else(|| {
            Error::Calibration(format!("{}: no usable tfp observations", input.id))
        })?;
        let l0 = *pop_series.last().ok_or_else(|| {
            Error::Calibration(format!("{}: no usable population observations", input.id))
        })?;

        println!(
            "{:<9} {:<11.6} {:<11.6} {:<11.6} {:<12.3e} {:<12.3e}",
            input.id, l_g, fit.g_a, fit.delta_a, pop_sse, fit.residual
        );
        table.push(RegionParams {
            id: input.id.clone(),
            a0,
            k0,
            l0,
            l_a,
            l_g,
            g_a: fit.g_a,
            delta_a: fit.delta_a,
            sigma0,
            g_sigma: 0.0,
            delta_sigma: 0.0,
        });
    }

    std::fs::write(&args.output, dataio::write_region_table(&table))?;
    println!(
        "wrote {} region(s) to {}",
        table.len(),
        args.output.display()
    );
    Ok(())
}

fn cmd_evaluate(args: EvaluateArgs) -> Result<(), Error> {
    let econ_mode = match args.econ_index.as_str() {
        "cumulative" | "terminal" => args.econ_index.clone(),
        other => {
            return Err(Error::Config(format!(
                "unknown econ index mode '{other}' (expected cumulative|terminal)"
            )))
        }
    };
    let production_of = |s: &dataio::SummaryFile| -> f64 {
        if econ_mode == "terminal" {
            s.summary.mean.terminal_production
        } else {
            s.summary.mean.cumulative_production
        }
    };

    let none = dataio::read_summary(&args.extremal_none)?;
    let full = dataio::read_summary(&args.extremal_full)?;
    let t_none = none.summary.mean.t_at_end;
    let t_full = full.summary.mean.t_at_end;
    let p_values = [production_of(&none), production_of(&full)];
    let p_min = p_values[0].min(p_values[1]);
    let p_max = p_values[0].max(p_values[1]);

    let mut sets: Vec<(String, Vec<PathBuf>)> = Vec::new();
    if !args.summaries.is_empty() {
        sets.push(("solution".to_string(), args.summaries.clone()));
    }
    for spec in &args.sets {
        let (name, paths) = spec.split_once('=').ok_or_else(|| {
            Error::Config(format!("--set expects NAME=path1,path2,... got '{spec}'"))
        })?;
        let paths = paths.split(',').map(PathBuf::from).collect();
        sets.push((name.to_string(), paths));
    }
    if sets.is_empty() {
        return Err(Error::Config(
            "nothing to evaluate: pass summary files or --set".into(),
        ));
    }

    let mut report_points = Vec::new();
    let mut scored_sets: Vec<(String, Vec<OutcomePoint>)> = Vec::new();
    for (name, paths) in &sets {
        let mut points = Vec::new();
        for path in paths {
            let summary = dataio::read_summary(path)?;
            let climate = evaluation::climate_index(summary.summary.mean.t_at_end, t_none, t_full)?;
            let economic = evaluation::economic_index(production_of(&summary), p_min, p_max)?;
            let provenance = format!(
                "{} (config {}, seeds {:?})",
                path.display(),
                summary.config_hash,
                summary.seeds
            );
            points.push(OutcomePoint::new(climate, economic, provenance)?);
        }
        scored_sets.push((name.clone(), points));
    }
    let ranking = evaluation::rank_solution_sets(&scored_sets, (0.0, 0.0));
    for ((name, points), (_, paths)) in scored_sets.iter().zip(&sets) {
        let front = evaluation::pareto_front(points);
        for (point, path) in points.iter().zip(paths) {
            report_points.push(dataio::ReportPoint {
                set: name.clone(),
                source: path.display().to_string(),
                climate_index: point.climate,
                economic_index: point.economic,
                on_front: front
                    .iter()
                    .any(|q| q.climate == point.climate && q.economic == point.economic),
            });
        }
    }

    let report = dataio::EvaluationReport {
        schema_version: dataio::SUMMARY_SCHEMA_VERSION,
        formula: evaluation::INDEX_FORMULA.to_string(),
        econ_index_mode: econ_mode,
        reference: (0.0, 0.0),
        t_none,
        t_full,
        p_min,
        p_max,
        points: report_points,
        ranking: ranking.clone(),
    };
    report.write(&args.output)?;

    println!("index formulas: {}", evaluation::INDEX_FORMULA);
    for (rank, set) in ranking.iter().enumerate() {
        println!(
            "#{} {}: hypervolume {:.6} ({} point(s) on front, {} discarded)",
            rank + 1,
            set.name,
            set.hypervolume,
            set.front.len(),
            set.discarded_points
        );
    }
    println!("wrote {}", args.output.display());
    Ok(())
}

fn load_table(path: &Path) -> Result<Vec<RegionParams>, Error> {
    let text = std::fs::read_to_string(path)?;
    dataio::parse_region_table(&text)
}

fn production_of_row(r: &RegionParams, gamma: f64) -> f64 {
    r.a0 * r.k0.powf(gamma) * r.l0.powf(1.0 - gamma)
}

fn cmd_merge(args: MergeArgs) -> Result<(), Error> {
    if args.ids.len() < 2 {
        return Err(Error::Config("merge needs at least two region ids".into()));
    }
    let table = load_table(&args.table)?;
    let mut chosen = Vec::new();
    for id in &args.ids {
        let row = table
            .iter()
            .find(|r| &r.id == id)
            .ok_or_else(|| Error::Config(format!("region '{id}' not found in the table")))?;
        chosen.push(row.clone());
    }
    let parts: Vec<calibration::RegionEcon> = chosen
        .iter()
        .map(|r| calibration::RegionEcon {
            gdp: production_of_row(r, args.gamma),
            capital: r.k0,
            labor: r.l0,
            sigma: r.sigma0,
        })
        .collect();
    let merged = calibration::merge_regions(&parts, args.gamma)?;

    // Convergence population is additive; dynamic rates are output-weighted.
    let total_y: f64 = parts.iter().map(|p| p.gdp).sum();
    let weighted = |f: &dyn Fn(&RegionParams) -> f64| -> f64 {
        chosen
            .iter()
            .zip(&parts)
            .map(|(r, p)| f(r) * p.gdp)
            .sum::<f64>()
            / total_y
    };
    let merged_row = RegionParams {
        id: args.new_id.clone(),
        a0: merged.tfp,
        k0: merged.capital,
        l0: merged.labor,
        l_a: chosen.iter().map(|r| r.l_a).sum(),
        l_g: weighted(&|r| r.l_g),
        g_a: weighted(&|r| r.g_a),
        delta_a: weighted(&|r| r.delta_a),
        sigma0: merged.sigma,
        g_sigma: 0.0,
        delta_sigma: 0.0,
    };
    let mut out: Vec<RegionParams> = table
        .into_iter()
        .filter(|r| !args.ids.contains(&r.id))
        .collect();
    out.push(merged_row);
    std::fs::write(&args.output, dataio::write_region_table(&out))?;
    println!(
        "merged {} regions into '{}'; table now has {} rows",
        args.ids.len(),
        args.new_id,
        out.len()
    );
    Ok(())
}

fn cmd_split(args: SplitArgs) -> Result<(), Error> {
    let table = load_table(&args.table)?;
    let row = table
        .iter()
        .find(|r| r.id == args.id)
        .ok_or_else(|| Error::Config(format!("region '{}' not found in the table", args.id)))?
        .clone();
    let merged = calibration::MergedRegion {
        gdp: production_of_row(&row, args.gamma),
        capital: row.k0,
        labor: row.l0,
        tfp: row.a0,
        sigma: row.sigma0,
    };
    let pieces = calibration::split_region(&merged, &args.fractions, &args.tfps, args.gamma)?;

    let mut out: Vec<RegionParams> = table.into_iter().filter(|r| r.id != args.id).collect();
    for (i, (piece, fraction)) in pieces.iter().zip(&args.fractions).enumerate() {
        out.push(RegionParams {
            id: format!("{}_{}", args.id, i + 1),
            a0: piece.tfp,
            k0: piece.capital,
            l0: piece.labor,
            l_a: fraction * row.l_a,
            l_g: row.l_g,
            g_a: row.g_a,
            delta_a: row.delta_a,
            sigma0: piece.sigma,
            g_sigma: 0.0,
            delta_sigma: 0.0,
        });
    }
    std::fs::write(&args.output, dataio::write_region_table(&out))?;
    println!(
        "split '{}' into {} pieces; table now has {} rows",
        args.id,
        pieces.len(),
        out.len()
    );
    Ok(())
}
