//! `skillband`: simultaneous confidence bands for forecast skill scores.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use skillband::asymptotics::asymptotic_table;
use skillband::bands::{default_block_length, DEFAULT_BLOCK_MULTIPLIER, DEFAULT_REPLICATES};
use skillband::io::{
    load_panel, score_forecasts, write_asymptotics_csv, write_bands_csv, write_coverage_csv,
    write_json, write_panel, ScoringRule,
};
use skillband::simulation::{run_coverage_experiment, Bootstrap, CoverageGrid};
use skillband::{bootstrap_bands, BandConfig, BandType, ComparisonSelector, Error, Result, Target};

const THREADS_ENV: &str = "SKILLBAND_THREADS";

#[derive(Parser)]
#[command(
    name = "skillband",
    version,
    about = "Simultaneous confidence bands for forecast skill scores"
)]
struct Cli {
    /// Worker threads (0 = all cores).
    #[arg(long, global = true, env = THREADS_ENV, default_value_t = 0)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Bootstrap confidence bands for skill scores, relative accuracies or
    /// expected scores of a score panel.
    Bands(BandsArgs),
    /// Score a forecast file and write the resulting score panel.
    Score(ScoreArgs),
    /// Coverage experiment on simulated VAR(1) score processes.
    Simulate(SimulateArgs),
    /// Asymptotic band widths and coverages under equicorrelation.
    Asymptotics(AsymptoticsArgs),
}

#[derive(Args)]
struct BandsArgs {
    /// Long-format score panel (CSV).
    #[arg(long)]
    panel: PathBuf,
    /// Sidecar JSON header (default: inline header or <panel>.json).
    #[arg(long)]
    header: Option<PathBuf>,
    /// skill, relative or expected.
    #[arg(long, default_value = "skill")]
    target: Target,
    /// Comparisons as method:benchmark pairs, comma separated.
    #[arg(long, conflicts_with = "benchmark")]
    pairs: Option<String>,
    /// Compare every other method with this benchmark.
    #[arg(long)]
    benchmark: Option<String>,
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
    /// Bootstrap replicates.
    #[arg(long = "B", default_value_t = DEFAULT_REPLICATES)]
    replicates: usize,
    /// Block length multiplier q in l = q * floor(N^(1/4)).
    #[arg(long, default_value_t = DEFAULT_BLOCK_MULTIPLIER)]
    block_q: usize,
    /// Explicit block length (overrides --block-q); 1 gives the iid bootstrap.
    #[arg(long)]
    block_length: Option<usize>,
    /// Band types, comma separated.
    #[arg(long, default_value = "supt,bonferroni,pointwise")]
    types: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV; metadata goes to the same path with extension .json.
    /// Without it the table is printed.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ScoreArgs {
    /// Long-format forecast file (CSV).
    #[arg(long)]
    forecasts: PathBuf,
    #[arg(long)]
    header: Option<PathBuf>,
    /// se, mv_se, qs(tau), crps or energy.
    #[arg(long)]
    rule: ScoringRule,
    /// Dimensions to sum the scores over, comma separated.
    #[arg(long, value_delimiter = ',')]
    aggregate: Vec<String>,
    /// Output panel (CSV with inline header). Without it the panel is printed.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// appendix-e, appendix-e-small or appendix-e-high-dim; grid flags
    /// override individual settings.
    #[arg(long)]
    preset: Option<String>,
    /// Add the P = 100/400 arms.
    #[arg(long)]
    high_dim: bool,
    /// AR coefficients a.
    #[arg(long = "a", value_delimiter = ',')]
    ar: Option<Vec<f64>>,
    /// Error correlations v.
    #[arg(long = "v", value_delimiter = ',')]
    error_corr: Option<Vec<f64>>,
    /// Numbers of score series P.
    #[arg(long = "P", value_delimiter = ',')]
    dims: Option<Vec<usize>>,
    /// Sample lengths N.
    #[arg(long = "N", value_delimiter = ',')]
    n_times: Option<Vec<usize>>,
    /// Bootstrap arms: iid and/or block.
    #[arg(long, value_delimiter = ',')]
    boot: Option<Vec<String>>,
    /// Block length multipliers for the block arm.
    #[arg(long, value_delimiter = ',')]
    block_q: Option<Vec<usize>>,
    #[arg(long)]
    types: Option<String>,
    #[arg(long, value_delimiter = ',')]
    target: Option<Vec<Target>>,
    /// Simulated panels per cell.
    #[arg(long = "R")]
    replications: Option<usize>,
    /// Bootstrap replicates per panel.
    #[arg(long = "B")]
    replicates: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Common expected score of all series.
    #[arg(long)]
    mean: Option<f64>,
    #[arg(long)]
    burn_in: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AsymptoticsArgs {
    /// Dimensions J: a range `lo:hi` or a comma-separated list.
    #[arg(long = "J", default_value = "1:25")]
    dims: String,
    #[arg(long, value_delimiter = ',', default_value = "0,0.3,0.6")]
    rho: Vec<f64>,
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
    /// Monte Carlo draws of the common factor.
    #[arg(long, default_value_t = skillband::asymptotics::DEFAULT_MC_DRAWS)]
    mc_draws: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build_global()
    {
        eprintln!("error[invalid-input]: {e}");
        return ExitCode::from(2);
    }
    let result = match cli.command {
        Command::Bands(args) => bands(args),
        Command::Score(args) => score(args),
        Command::Simulate(args) => simulate(args),
        Command::Asymptotics(args) => asymptotics(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.category());
            ExitCode::FAILURE
        }
    }
}

/// Writes the CSV to `out` (or stdout) and the metadata next to it.
fn emit<F>(out: Option<&Path>, csv: F, metadata: &serde_json::Value) -> Result<()>
where
    F: FnOnce(&mut dyn Write) -> Result<()>,
{
    match out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            csv(&mut w)?;
            w.flush()?;
            let mut m = BufWriter::new(File::create(path.with_extension("json"))?);
            write_json(metadata, &mut m)?;
            m.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            csv(&mut w)?;
            w.flush()?;
        }
    }
    Ok(())
}

fn bands(args: BandsArgs) -> Result<()> {
    let panel = load_panel(&args.panel, args.header.as_deref())?;
    let selector = match (&args.pairs, &args.benchmark) {
        (Some(p), _) => ComparisonSelector::parse(p)?,
        (None, Some(b)) => ComparisonSelector::against_benchmark(&panel, b),
        (None, None) if args.target == Target::Expected => ComparisonSelector::new(Vec::new()),
        (None, None) => {
            return Err(Error::InvalidInput(
                "skill and relative targets need --pairs or --benchmark".into(),
            ))
        }
    };
    let block_length = args
        .block_length
        .unwrap_or_else(|| default_block_length(panel.n_time(), args.block_q));
    let config = BandConfig {
        alpha: args.alpha,
        replicates: args.replicates,
        block_length,
        seed: args.seed,
        band_types: BandType::parse_list(&args.types)?,
        target: args.target,
    };
    let result = bootstrap_bands(&panel, &selector, &config)?;
    let dim_names: Vec<String> = panel.dims().iter().map(|d| d.name.clone()).collect();
    let metadata = json!({
        "panel": args.panel,
        "dimensions": dim_names,
        "block_q": args.block_length.is_none().then_some(args.block_q),
        "result": result,
    });
    emit(
        args.out.as_deref(),
        |w| write_bands_csv(&result, &dim_names, w),
        &metadata,
    )
}

fn score(args: ScoreArgs) -> Result<()> {
    let panel = score_forecasts(
        &args.forecasts,
        args.header.as_deref(),
        args.rule,
        &args.aggregate,
    )?;
    match args.out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            write_panel(&panel, &mut w)?;
            w.flush()?;
        }
        None => write_panel(&panel, io::stdout().lock())?,
    }
    Ok(())
}

fn simulate(args: SimulateArgs) -> Result<()> {
    let mut grid = match &args.preset {
        Some(name) => CoverageGrid::preset(name)?,
        None => CoverageGrid::default(),
    };
    grid.seed = args.seed;
    if let Some(v) = args.ar {
        grid.ar = v;
    }
    if let Some(v) = args.error_corr {
        grid.error_corr = v;
    }
    if let Some(v) = args.dims {
        grid.dims = v;
    }
    if let Some(v) = args.n_times {
        grid.n_times = v;
    }
    if args.boot.is_some() || args.block_q.is_some() {
        let arms = args
            .boot
            .unwrap_or_else(|| vec!["iid".into(), "block".into()]);
        let qs = args
            .block_q
            .unwrap_or_else(|| vec![DEFAULT_BLOCK_MULTIPLIER]);
        grid.bootstraps = Vec::new();
        for arm in arms {
            match arm.trim() {
                "iid" => grid.bootstraps.push(Bootstrap::Iid),
                "block" => grid
                    .bootstraps
                    .extend(qs.iter().map(|&q| Bootstrap::Block { q })),
                other => {
                    return Err(Error::InvalidInput(format!(
                        "unknown bootstrap arm `{other}`"
                    )))
                }
            }
        }
    }
    if let Some(t) = &args.types {
        grid.band_types = BandType::parse_list(t)?;
    }
    if let Some(v) = args.target {
        grid.targets = v;
    }
    if let Some(v) = args.replications {
        grid.replications = v;
    }
    if let Some(v) = args.replicates {
        grid.bootstrap_replicates = v;
    }
    if let Some(v) = args.alpha {
        grid.alpha = v;
    }
    if let Some(v) = args.mean {
        grid.mean = v;
    }
    if let Some(v) = args.burn_in {
        grid.burn_in = v;
    }

    let mut grids = vec![grid.clone()];
    if args.high_dim {
        let high = CoverageGrid::preset("appendix-e-high-dim")?;
        grids.push(CoverageGrid {
            dims: high.dims,
            bootstraps: high.bootstraps,
            band_types: high.band_types,
            ..grid
        });
    }
    let mut cells = Vec::new();
    for g in &grids {
        cells.extend(run_coverage_experiment(g)?);
    }
    let runs: Vec<_> = grids
        .iter()
        .map(|g| {
            json!({
                "a": g.ar, "v": g.error_corr, "P": g.dims, "N": g.n_times,
                "bootstraps": g.bootstraps, "band_types": g.band_types, "targets": g.targets,
                "R": g.replications, "B": g.bootstrap_replicates, "alpha": g.alpha,
                "mean": g.mean, "burn_in": g.burn_in, "seed": g.seed,
            })
        })
        .collect();
    let metadata = json!({ "preset": args.preset, "grids": runs, "cells": cells });
    emit(
        args.out.as_deref(),
        |w| write_coverage_csv(&cells, w),
        &metadata,
    )
}

fn parse_dims(spec: &str) -> Result<Vec<usize>> {
    let bad = || Error::InvalidInput(format!("bad dimension list `{spec}`"));
    let num = |s: &str| usize::from_str(s.trim()).map_err(|_| bad());
    match spec.split_once(':') {
        Some((lo, hi)) => {
            let (lo, hi) = (num(lo)?, num(hi)?);
            if lo > hi {
                return Err(bad());
            }
            Ok((lo..=hi).collect())
        }
        None => spec.split(',').map(num).collect(),
    }
}

fn asymptotics(args: AsymptoticsArgs) -> Result<()> {
    let dims = parse_dims(&args.dims)?;
    let rows = asymptotic_table(&dims, &args.rho, args.alpha, args.mc_draws, args.seed)?;
    let metadata = json!({
        "J": dims, "rho": args.rho, "alpha": args.alpha,
        "mc_draws": args.mc_draws, "seed": args.seed, "rows": rows,
    });
    emit(
        args.out.as_deref(),
        |w| write_asymptotics_csv(&rows, w),
        &metadata,
    )
}
