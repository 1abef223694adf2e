//! `covppp` -- covariance estimation from thresholded posterior samples and
//! minimum variance portfolio inference.
//!
//! Subcommands: `simulate` (replicated benchmark against block-sparse
//! truths), `estimate` (fit one covariance estimate on a returns file),
//! `gmvp` (portfolio weights and credible intervals), `tune`
//! (cross-validated threshold selection), `backtest` (rolling train/test
//! portfolio evaluation) and `tables` (re-emit summary tables from a
//! previous run).
//!
//! Every run writes its primary outputs as CSV plus a `metadata.json`
//! echoing the fully resolved configuration; reruns with the same seed are
//! byte-identical for any worker count.

mod commands;
mod outdir;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "covppp", version, about, max_term_width = 100)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Output run directory (refused if nonempty unless --force).
    #[arg(long, value_name = "DIR")]
    out: PathBuf,

    /// Master seed; identical seeds give byte-identical outputs.
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Worker threads (0 = all available). Outputs do not depend on this.
    #[arg(long, default_value_t = 0)]
    workers: usize,

    /// Replace an existing nonempty run directory.
    #[arg(long)]
    force: bool,
}

#[derive(Args, Clone)]
struct CvArgs {
    /// Cross-validation splits.
    #[arg(long = "cv-splits", default_value_t = 5)]
    cv_splits: usize,

    /// Training fraction per split.
    #[arg(long = "cv-train-frac", default_value_t = 2.0 / 3.0)]
    cv_train_frac: f64,

    /// Points in the automatic threshold-multiplier grid.
    #[arg(long = "cv-grid-points", default_value_t = 21)]
    cv_grid_points: usize,

    /// Posterior draws per fitted posterior inside cross-validation.
    #[arg(long = "cv-n-draws", default_value_t = 200)]
    cv_n_draws: usize,

    /// Comma-separated floor grid (defaults to a data-scaled grid).
    #[arg(long, value_name = "LIST", value_parser = parse_f64_list)]
    epsilons: Option<std::vec::Vec<f64>>,
}

impl CvArgs {
    fn settings(&self) -> covppp::tuning::CvSettings {
        covppp::tuning::CvSettings {
            n_splits: self.cv_splits,
            train_fraction: self.cv_train_frac,
            gamma_grid_points: self.cv_grid_points,
            grid_epsilon: self.epsilons.clone(),
            n_draws: self.cv_n_draws,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run the replicated simulation benchmark and emit the summary tables.
    Simulate(commands::simulate::SimulateArgs),
    /// Estimate a covariance matrix from a returns file.
    Estimate(commands::estimate::EstimateArgs),
    /// Portfolio weights and credible intervals from an ensemble or matrix.
    Gmvp(commands::gmvp::GmvpArgs),
    /// Cross-validate the threshold multiplier (and floor) on a returns file.
    Tune(commands::tune::TuneArgs),
    /// Rolling train/test portfolio backtest on a returns file.
    Backtest(commands::backtest::BacktestArgs),
    /// Re-emit summary tables from a previous simulate run directory.
    Tables(commands::tables::TablesArgs),
}

fn parse_methods(s: &str) -> Result<Vec<covppp::Method>, String> {
    let mut methods = Vec::new();
    for token in s.split(',') {
        let token = token.trim();
        if token.is_empty() {
            continue;
        }
        methods.push(token.parse::<covppp::Method>()?);
    }
    Ok(methods)
}

fn parse_usize_list(s: &str) -> Result<Vec<usize>, String> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<usize>()
                .map_err(|_| format!("'{t}' is not a positive integer"))
        })
        .collect()
}

fn parse_f64_list(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| format!("'{t}' is not a number"))
        })
        .collect()
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(args) => commands::simulate::run(args),
        Command::Estimate(args) => commands::estimate::run(args),
        Command::Gmvp(args) => commands::gmvp::run(args),
        Command::Tune(args) => commands::tune::run(args),
        Command::Backtest(args) => commands::backtest::run(args),
        Command::Tables(args) => commands::tables::run(args),
    };
    if let Err(err) = result {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}

/// Run a closure inside a rayon pool with the requested worker count.
fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()?;
    pool.install(f)
}
