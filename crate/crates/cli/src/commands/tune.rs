use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::Args;
use serde::Serialize;

use covppp::ingest::ReturnsFormat;
use covppp::report::write_cv_csv;
use covppp::tuning::{cv_select, CvEstimator, CvObjective, CvPlan, PriorSpec};
use covppp::{Method, RngStream};

use crate::outdir::{self, BaseMeta};
use crate::{parse_f64_list, CommonArgs, CvArgs};

#[derive(Args)]
pub struct TuneArgs {
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

    /// Estimator being tuned: ppp or thres.
    #[arg(long, default_value = "ppp")]
    method: Method,

    /// Validation loss.
    #[arg(long, default_value = "gmvp-variance")]
    objective: CvObjective,

    /// Subtract column means before fitting.
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    demean: bool,

    /// Explicit comma-separated threshold-multiplier grid (default: the
    /// automatic grid with --cv-grid-points points).
    #[arg(long, value_name = "LIST", value_parser = parse_f64_list)]
    gammas: Option<std::vec::Vec<f64>>,

    #[command(flatten)]
    cv: CvArgs,
}

#[derive(Serialize)]
struct TuneMeta {
    #[serde(flatten)]
    base: BaseMeta,
    data: String,
    method: String,
    objective: String,
    demean: bool,
    splits: usize,
    train_fraction: f64,
    grid_gamma: Vec<f64>,
    grid_epsilon: Vec<f64>,
    cv_n_draws: usize,
    best_gamma: f64,
    best_epsilon: f64,
    best_mean_loss: f64,
}

pub fn run(args: TuneArgs) -> Result<()> {
    let estimator = match args.method {
        Method::Ppp => CvEstimator::PppPosterior {
            prior: PriorSpec::EmpiricalDefault,
            n_draws: args.cv.cv_n_draws,
            demean: args.demean,
        },
        Method::Thres => CvEstimator::ThresholdedSampleCov {
            demean: args.demean,
        },
        other => bail!("only the ppp and thres methods have tuning parameters, got {other}"),
    };
    outdir::check(&args.common.out, args.common.force)?;
    let data = crate::commands::load_data(&args.data, args.format, args.return_kind)?;

    let settings = args.cv.settings();
    let seed = RngStream::new(args.common.seed).substream(1).derive_seed();
    let plan = match &args.gammas {
        Some(gammas) => {
            let base = settings.plan(&data, args.demean, args.objective, seed)?;
            CvPlan::new(
                settings.n_splits,
                settings.train_fraction,
                gammas.clone(),
                base.grid_epsilon,
                args.objective,
                seed,
            )?
        }
        None => settings.plan(&data, args.demean, args.objective, seed)?,
    };

    let result = crate::with_workers(args.common.workers, || {
        Ok(cv_select(&data, &estimator, &plan)?)
    })?;
    let best_score = result
        .score_table
        .iter()
        .map(|s| s.mean_loss)
        .fold(f64::INFINITY, f64::min);
    if !best_score.is_finite() {
        eprintln!("warning: every grid point scored an infinite loss; the selection is the first grid point");
    }

    outdir::create(&args.common.out)?;
    write_cv_csv(&result, args.common.out.join("cv_result.csv"))?;
    outdir::write_metadata(
        &args.common.out,
        &TuneMeta {
            base: BaseMeta::new("tune", args.common.seed, args.common.workers),
            data: args.data.display().to_string(),
            method: args.method.to_string(),
            objective: args.objective.to_string(),
            demean: args.demean,
            splits: plan.n_splits,
            train_fraction: plan.train_fraction,
            grid_gamma: plan.grid_gamma.clone(),
            grid_epsilon: plan.grid_epsilon.clone(),
            cv_n_draws: args.cv.cv_n_draws,
            best_gamma: result.best.gamma(),
            best_epsilon: result.best.epsilon(),
            best_mean_loss: best_score,
        },
    )?;
    println!(
        "selected gamma = {} epsilon = {} ({} splits); scores in {}",
        result.best.gamma(),
        result.best.epsilon(),
        result.splits_used,
        args.common.out.join("cv_result.csv").display()
    );
    Ok(())
}
