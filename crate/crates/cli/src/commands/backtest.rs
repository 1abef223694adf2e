use std::path::PathBuf;

use anyhow::Result;
use clap::Args;
use serde::Serialize;

use covppp::ingest::{run_backtest, BacktestPlan, BacktestSettings, ReturnsFormat};
use covppp::report::{write_backtest_csv, write_backtest_windows_csv};
use covppp::Method;

use crate::outdir::{self, BaseMeta};
use crate::{parse_methods, CommonArgs, CvArgs};

#[derive(Args)]
pub struct BacktestArgs {
    #[command(flatten)]
    common: CommonArgs,

    /// Input CSV: header of asset ids, first column of period ids.
    #[arg(long, value_name = "FILE")]
    data: PathBuf,

    /// Input layout.
    #[arg(long, default_value = "returns-csv")]
    format: ReturnsFormat,

    /// Return construction for price inputs.
    #[arg(long = "returns", default_value = "simple", value_parser = crate::commands::parse_return_kind)]
    return_kind: covppp::ingest::ReturnKind,

    /// Training window length (rows).
    #[arg(long, default_value_t = 48)]
    train: usize,

    /// Test window length (rows).
    #[arg(long, default_value_t = 12)]
    test: usize,

    /// Number of sampled train/test windows.
    #[arg(long, default_value_t = 20)]
    iterations: usize,

    /// Comma-separated method list.
    #[arg(long, value_name = "LIST", value_parser = parse_methods,
          default_value = "ppp,iw,thres,samplecov")]
    methods: std::vec::Vec<Method>,

    /// Posterior draws per window for the Bayesian methods.
    #[arg(long = "n-draws", default_value_t = 2000)]
    n_draws: usize,

    /// Subtract column means before fitting.
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    demean: bool,

    #[command(flatten)]
    cv: CvArgs,
}

#[derive(Serialize)]
struct BacktestMeta {
    #[serde(flatten)]
    base: BaseMeta,
    data: String,
    n_rows: usize,
    n_assets: usize,
    window_train: usize,
    window_test: usize,
    iterations: usize,
    methods: Vec<String>,
    n_draws: usize,
    demean: bool,
    cv_splits: usize,
    cv_grid_points: usize,
    cv_n_draws: usize,
}

pub fn run(args: BacktestArgs) -> Result<()> {
    outdir::check(&args.common.out, args.common.force)?;
    let data = crate::commands::load_data(&args.data, args.format, args.return_kind)?;
    let plan = BacktestPlan {
        window_train: args.train,
        window_test: args.test,
        iterations: args.iterations,
        seed: args.common.seed,
    };
    plan.validate(data.n_rows())?;
    let settings = BacktestSettings {
        n_draws: args.n_draws,
        cv: args.cv.settings(),
        demean: args.demean,
    };

    let report = crate::with_workers(args.common.workers, || {
        Ok(run_backtest(&data, &plan, &args.methods, &settings)?)
    })?;

    for mb in &report.methods {
        for w in &mb.windows {
            if let Some(err) = &w.error {
                eprintln!(
                    "warning: {} window {} (split index {}): {err}; window excluded from the mean",
                    mb.method, w.iteration, w.split_index
                );
            }
        }
    }

    outdir::create(&args.common.out)?;
    write_backtest_csv(&report, args.common.out.join("backtest.csv"))?;
    write_backtest_windows_csv(&report, args.common.out.join("backtest_windows.csv"))?;
    outdir::write_metadata(
        &args.common.out,
        &BacktestMeta {
            base: BaseMeta::new("backtest", args.common.seed, args.common.workers),
            data: args.data.display().to_string(),
            n_rows: data.n_rows(),
            n_assets: data.n_cols(),
            window_train: args.train,
            window_test: args.test,
            iterations: args.iterations,
            methods: args.methods.iter().map(|m| m.to_string()).collect(),
            n_draws: args.n_draws,
            demean: args.demean,
            cv_splits: settings.cv.n_splits,
            cv_grid_points: settings.cv.gamma_grid_points,
            cv_n_draws: settings.cv.n_draws,
        },
    )?;
    println!("wrote backtest report to {}", args.common.out.display());
    Ok(())
}
