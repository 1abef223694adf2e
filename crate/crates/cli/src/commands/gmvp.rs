use std::path::{Path, PathBuf};

use anyhow::{bail, Result};
use clap::Args;
use serde::Serialize;

use covppp::ensemble_io::read_ensemble;
use covppp::gmvp::{credible_intervals, gmvp_ensemble, gmvp_weights, mean_weights};
use covppp::report::{read_matrix_csv, write_intervals_csv, write_weights_csv};

use crate::outdir::{self, BaseMeta};
use crate::CommonArgs;

#[derive(Args)]
pub struct GmvpArgs {
    #[command(flatten)]
    common: CommonArgs,

    /// Posterior ensemble CSV (as written by `estimate`).
    #[arg(long, value_name = "FILE", conflicts_with = "matrix")]
    ensemble: Option<PathBuf>,

    /// Ensemble metadata JSON (default: `<ensemble>` with `_meta.json`).
    #[arg(long, value_name = "FILE", requires = "ensemble")]
    meta: Option<PathBuf>,

    /// Covariance matrix CSV (as written by `estimate`).
    #[arg(long, value_name = "FILE")]
    matrix: Option<PathBuf>,

    /// Credible level for the per-asset intervals.
    #[arg(long, default_value_t = 0.95)]
    level: f64,
}

#[derive(Serialize)]
struct GmvpMeta {
    #[serde(flatten)]
    base: BaseMeta,
    source: String,
    level: f64,
    n_assets: usize,
    n_draws: Option<usize>,
}

fn default_meta_path(ensemble: &Path) -> PathBuf {
    let stem = ensemble
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "ensemble".into());
    ensemble.with_file_name(format!("{stem}_meta.json"))
}

pub fn run(args: GmvpArgs) -> Result<()> {
    outdir::check(&args.common.out, args.common.force)?;
    match (&args.ensemble, &args.matrix) {
        (Some(ensemble_path), None) => {
            let meta_path = args
                .meta
                .clone()
                .unwrap_or_else(|| default_meta_path(ensemble_path));
            let ensemble = read_ensemble(ensemble_path, &meta_path)?;
            let ws = gmvp_ensemble(&ensemble)?;
            let summary = credible_intervals(&ws, args.level)?;
            let mean = mean_weights(&ws)?;

            outdir::create(&args.common.out)?;
            write_intervals_csv(&summary, None, args.common.out.join("intervals.csv"))?;
            write_weights_csv(&mean, None, args.common.out.join("weights.csv"))?;
            outdir::write_metadata(
                &args.common.out,
                &GmvpMeta {
                    base: BaseMeta::new("gmvp", args.common.seed, args.common.workers),
                    source: ensemble_path.display().to_string(),
                    level: args.level,
                    n_assets: ensemble.dim(),
                    n_draws: Some(ensemble.len()),
                },
            )?;
        }
        (None, Some(matrix_path)) => {
            let (matrix, labels) = read_matrix_csv(matrix_path)?;
            let weights = gmvp_weights(&matrix)?;

            outdir::create(&args.common.out)?;
            write_weights_csv(&weights, Some(&labels), args.common.out.join("weights.csv"))?;
            outdir::write_metadata(
                &args.common.out,
                &GmvpMeta {
                    base: BaseMeta::new("gmvp", args.common.seed, args.common.workers),
                    source: matrix_path.display().to_string(),
                    level: args.level,
                    n_assets: matrix.dim(),
                    n_draws: None,
                },
            )?;
        }
        _ => bail!("exactly one of --ensemble or --matrix is required"),
    }
    println!("wrote portfolio outputs to {}", args.common.out.display());
    Ok(())
}
