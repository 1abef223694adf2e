use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::Args;
use serde::Serialize;

use covppp::ensemble_io::write_ensemble;
use covppp::ingest::ReturnsFormat;
use covppp::ppp::{ensemble_mean, generate_ppp_ensemble, ThresholdConfig, DEFAULT_EPSILON};
use covppp::report::{write_cv_csv, write_matrix_csv};
use covppp::sampling::default_prior;
use covppp::tuning::{cv_select, CvEstimator, CvObjective, PriorSpec};
use covppp::{sample_covariance, thresholded_sample_cov, Method, RngStream};

use crate::outdir::{self, BaseMeta};
use crate::{CommonArgs, CvArgs};

#[derive(Args)]
pub struct EstimateArgs {
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

    /// Estimation method.
    #[arg(long, default_value = "ppp")]
    method: Method,

    /// Subtract column means before fitting (real returns are not
    /// zero-mean; disable for simulated zero-mean data).
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    demean: bool,

    /// Threshold multiplier; omitted = cross-validated (ppp/thres).
    #[arg(long)]
    gamma: Option<f64>,

    /// Positive-definite floor used with an explicit --gamma.
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    epsilon: f64,

    /// Cross-validation objective when tuning.
    #[arg(long, default_value = "cov-spectral")]
    objective: CvObjective,

    /// Posterior draws for the final ensemble (Bayesian methods).
    #[arg(long = "n-draws", default_value_t = 2000)]
    n_draws: usize,

    #[command(flatten)]
    cv: CvArgs,
}

#[derive(Serialize)]
struct EstimateMeta {
    #[serde(flatten)]
    base: BaseMeta,
    data: String,
    format: String,
    method: String,
    demean: bool,
    gamma: Option<f64>,
    epsilon: Option<f64>,
    tuned: bool,
    objective: String,
    n_draws: usize,
    n_rows: usize,
    n_assets: usize,
}

pub fn run(args: EstimateArgs) -> Result<()> {
    if args.gamma.is_some() && !matches!(args.method, Method::Ppp | Method::Thres) {
        bail!("--gamma only applies to the ppp and thres methods");
    }
    outdir::check(&args.common.out, args.common.force)?;
    let data = crate::commands::load_data(&args.data, args.format, args.return_kind)?;
    let (n, p) = (data.n_rows(), data.n_cols());
    let seed = args.common.seed;
    let demean = args.demean;

    let out = crate::with_workers(args.common.workers, || {
        let root = RngStream::new(seed);
        // Resolve the threshold configuration, tuning when not pinned.
        let needs_threshold = matches!(args.method, Method::Ppp | Method::Thres);
        let (cfg, cv_result) = if !needs_threshold {
            (ThresholdConfig::new(0.0, 0.0, n, p)?, None)
        } else if let Some(gamma) = args.gamma {
            (ThresholdConfig::new(gamma, args.epsilon, n, p)?, None)
        } else {
            let estimator = match args.method {
                Method::Ppp => CvEstimator::PppPosterior {
                    prior: PriorSpec::EmpiricalDefault,
                    n_draws: args.cv.cv_n_draws,
                    demean,
                },
                _ => CvEstimator::ThresholdedSampleCov { demean },
            };
            let plan = args.cv.settings().plan(
                &data,
                demean,
                args.objective,
                root.substream(1).derive_seed(),
            )?;
            let result = cv_select(&data, &estimator, &plan)?;
            (result.best.clone(), Some(result))
        };

        match args.method {
            Method::SampleCov => {
                let s = sample_covariance(&data, demean)?;
                Ok((s, None, cv_result, cfg))
            }
            Method::Thres => {
                let est = thresholded_sample_cov(&data, &cfg, demean)?;
                Ok((est.matrix().clone(), None, cv_result, cfg))
            }
            Method::Ppp | Method::Iw => {
                let cfg = if args.method == Method::Iw {
                    ThresholdConfig::new(0.0, 0.0, n, p)?
                } else {
                    cfg
                };
                let prior = default_prior(&data, demean)?;
                let ensemble = generate_ppp_ensemble(
                    &prior,
                    &data,
                    &cfg,
                    args.n_draws,
                    root.substream(2),
                    demean,
                )?;
                Ok((ensemble_mean(&ensemble), Some(ensemble), cv_result, cfg))
            }
        }
    })?;
    let (estimate, ensemble, cv_result, cfg) = out;

    outdir::create(&args.common.out)?;
    write_matrix_csv(
        &estimate,
        Some(data.asset_ids()),
        args.common.out.join("estimate.csv"),
    )?;
    if let Some(ensemble) = &ensemble {
        write_ensemble(
            ensemble,
            args.common.out.join("ensemble.csv"),
            args.common.out.join("ensemble_meta.json"),
        )?;
    }
    if let Some(cv_result) = &cv_result {
        write_cv_csv(cv_result, args.common.out.join("cv_result.csv"))?;
    }
    let tuned = cv_result.is_some();
    outdir::write_metadata(
        &args.common.out,
        &EstimateMeta {
            base: BaseMeta::new("estimate", seed, args.common.workers),
            data: args.data.display().to_string(),
            format: format!("{:?}", args.format),
            method: args.method.to_string(),
            demean,
            gamma: Some(cfg.gamma()),
            epsilon: Some(cfg.epsilon()),
            tuned,
            objective: args.objective.to_string(),
            n_draws: args.n_draws,
            n_rows: n,
            n_assets: p,
        },
    )?;
    println!("wrote estimate to {}", args.common.out.display());
    Ok(())
}
