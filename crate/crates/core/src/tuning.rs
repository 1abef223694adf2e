//! Cross-validated selection of the threshold multiplier (and optionally the
//! positive-definite floor) under the two prediction-error functionals used
//! by the experiments.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimators::sample_covariance;
use crate::gmvp::{gmvp_weights, sample_variance};
use crate::matrix::CovMatrix;
use crate::ppp::{pd_adjust_with_floor, PosteriorEnsemble, ThresholdConfig, DEFAULT_EPSILON};
use crate::returns::ReturnsMatrix;
use crate::rng::RngStream;
use crate::sampling::{default_prior, posterior_params, InverseWishart, InverseWishartParams};

const STREAM_SPLIT: u64 = 1;
const STREAM_DRAWS: u64 = 2;

/// Validation loss driving the grid search.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CvObjective {
    /// Spectral distance between the estimate and the validation
    /// second-moment matrix.
    CovSpectral,
    /// Sample variance of validation returns under the estimate's minimum
    /// variance portfolio.
    GmvpVariance,
}

impl fmt::Display for CvObjective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CvObjective::CovSpectral => "cov-spectral",
            CvObjective::GmvpVariance => "gmvp-variance",
        })
    }
}

impl FromStr for CvObjective {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "cov-spectral" | "cov" => Ok(CvObjective::CovSpectral),
            "gmvp-variance" | "gmvp" => Ok(CvObjective::GmvpVariance),
            other => Err(format!(
                "unknown objective '{other}' (expected cov-spectral or gmvp-variance)"
            )),
        }
    }
}

/// Split scheme and search grid for one cross-validation run.
#[derive(Debug, Clone)]
pub struct CvPlan {
    pub n_splits: usize,
    pub train_fraction: f64,
    pub grid_gamma: Vec<f64>,
    pub grid_epsilon: Vec<f64>,
    pub objective: CvObjective,
    pub seed: u64,
}

impl CvPlan {
    pub fn new(
        n_splits: usize,
        train_fraction: f64,
        grid_gamma: Vec<f64>,
        grid_epsilon: Vec<f64>,
        objective: CvObjective,
        seed: u64,
    ) -> Result<Self> {
        if n_splits == 0 {
            return Err(Error::invalid("cross-validation needs at least one split"));
        }
        if !(train_fraction > 0.0 && train_fraction < 1.0) {
            return Err(Error::invalid("train fraction must lie strictly in (0, 1)"));
        }
        if grid_gamma.is_empty() || grid_epsilon.is_empty() {
            return Err(Error::invalid("search grids must be nonempty"));
        }
        if grid_gamma.iter().any(|g| !g.is_finite() || *g < 0.0)
            || grid_epsilon.iter().any(|e| !e.is_finite() || *e < 0.0)
        {
            return Err(Error::invalid("grid values must be finite and nonnegative"));
        }
        if grid_gamma.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::invalid("gamma grid must be ascending"));
        }
        Ok(CvPlan {
            n_splits,
            train_fraction,
            grid_gamma,
            grid_epsilon,
            objective,
            seed,
        })
    }
}

/// Defaults used when a caller wants cross-validation without spelling out
/// the scheme: 5 random splits at 2/3 train fraction, a 21-point gamma grid
/// from 0 up to full off-diagonal sparsification, a data-scaled floor grid,
/// and 200 draws per fitted posterior.
#[derive(Debug, Clone)]
pub struct CvSettings {
    pub n_splits: usize,
    pub train_fraction: f64,
    pub gamma_grid_points: usize,
    /// Explicit floor grid; `None` derives one from the data scale.
    pub grid_epsilon: Option<Vec<f64>>,
    pub n_draws: usize,
}

impl Default for CvSettings {
    fn default() -> Self {
        CvSettings {
            n_splits: 5,
            train_fraction: 2.0 / 3.0,
            gamma_grid_points: 21,
            grid_epsilon: None,
            n_draws: 200,
        }
    }
}

impl CvSettings {
    /// Instantiate a concrete plan for a data set, building the gamma grid
    /// (and the floor grid, unless pinned) from the full-data sample
    /// covariance.
    pub fn plan(
        &self,
        data: &ReturnsMatrix,
        demean: bool,
        objective: CvObjective,
        seed: u64,
    ) -> Result<CvPlan> {
        let grid = default_gamma_grid(data, demean, self.gamma_grid_points)?;
        let eps = match &self.grid_epsilon {
            Some(eps) => eps.clone(),
            None => default_epsilon_grid(data, demean)?,
        };
        CvPlan::new(
            self.n_splits,
            self.train_fraction,
            grid,
            eps,
            objective,
            seed,
        )
    }
}

/// Default floor grid: the small fixed floor plus fractions of the smallest
/// sample variance. A floor far below the variance scale makes any draw
/// whose diagonal gets thresholded collapse into a near-zero-variance asset
/// that soaks up all portfolio weight, so the search must be able to choose
/// a floor at the scale of the data.
pub fn default_epsilon_grid(data: &ReturnsMatrix, demean: bool) -> Result<Vec<f64>> {
    let s = sample_covariance(data, demean)?;
    let p = data.n_cols();
    let min_diag = (0..p).map(|i| s.get(i, i)).fold(f64::INFINITY, f64::min);
    if min_diag.is_nan() || min_diag <= 0.0 {
        return Ok(vec![DEFAULT_EPSILON]);
    }
    let mut grid = vec![DEFAULT_EPSILON];
    for f in [0.05, 0.25, 0.5] {
        let eps = f * min_diag;
        if eps > DEFAULT_EPSILON {
            grid.push(eps);
        }
    }
    Ok(grid)
}

/// What is being tuned: a posterior pipeline or the thresholded sample
/// covariance.
#[derive(Debug, Clone)]
pub enum CvEstimator {
    PppPosterior {
        prior: PriorSpec,
        n_draws: usize,
        demean: bool,
    },
    ThresholdedSampleCov {
        demean: bool,
    },
}

/// How the inverse-Wishart prior is chosen inside each training fit.
#[derive(Debug, Clone)]
pub enum PriorSpec {
    /// `nu = 2p + 2`, scale `s_bar * I` from the training sample covariance.
    EmpiricalDefault,
    Fixed(InverseWishartParams),
}

impl PriorSpec {
    pub fn build(&self, train: &ReturnsMatrix, demean: bool) -> Result<InverseWishartParams> {
        match self {
            PriorSpec::EmpiricalDefault => default_prior(train, demean),
            PriorSpec::Fixed(params) => Ok(params.clone()),
        }
    }
}

/// Mean validation loss for one grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridScore {
    pub gamma: f64,
    pub epsilon: f64,
    pub mean_loss: f64,
    pub se_loss: f64,
}

/// Outcome of a grid search.
#[derive(Debug, Clone)]
pub struct CvResult {
    pub best: ThresholdConfig,
    pub score_table: Vec<GridScore>,
    pub splits_used: usize,
}

/// Spectral-norm distance between an estimate and the uncentered validation
/// second-moment matrix `X_val^T X_val / N_val`.
pub fn cv_loss_cov(estimate: &CovMatrix, val: &ReturnsMatrix) -> Result<f64> {
    if estimate.dim() != val.n_cols() {
        return Err(Error::DimensionMismatch {
            expected: estimate.dim(),
            actual: val.n_cols(),
        });
    }
    let second_moment = sample_covariance(val, false)?;
    Ok(estimate.sub(&second_moment)?.spectral_norm())
}

/// Sample variance of validation returns under the minimum variance weights
/// of `estimate`. The estimate must be positive definite; callers wanting a
/// repair should PD-adjust first.
pub fn cv_loss_gmvp(estimate: &CovMatrix, val: &ReturnsMatrix) -> Result<f64> {
    if val.n_rows() < 2 {
        return Err(Error::invalid(
            "portfolio-variance loss needs at least two validation rows",
        ));
    }
    let w = gmvp_weights(estimate)?;
    let returns: Vec<f64> = (0..val.n_rows())
        .map(|t| {
            val.row(t)
                .iter()
                .zip(w.as_slice())
                .map(|(x, wi)| x * wi)
                .sum()
        })
        .collect();
    Ok(sample_variance(&returns))
}

fn point_loss(estimate: &CovMatrix, val: &ReturnsMatrix, objective: CvObjective) -> Result<f64> {
    match objective {
        CvObjective::CovSpectral => cv_loss_cov(estimate, val),
        CvObjective::GmvpVariance => match cv_loss_gmvp(estimate, val) {
            // Conservative penalty: an estimate that stays singular after
            // the default-floor repair scores as infinite.
            Err(Error::NotPositiveDefinite { .. }) => {
                let repaired = pd_adjust_with_floor(estimate, DEFAULT_EPSILON);
                match cv_loss_gmvp(&repaired, val) {
                    Err(Error::NotPositiveDefinite { .. }) => Ok(f64::INFINITY),
                    other => other,
                }
            }
            other => other,
        },
    }
}

/// Average the chosen loss over every draw of an ensemble. For the portfolio
/// objective, draws that remain singular after the default-floor repair
/// contribute an infinite loss.
pub fn cv_posterior_loss(
    ensemble: &PosteriorEnsemble,
    val: &ReturnsMatrix,
    objective: CvObjective,
) -> Result<f64> {
    let losses: Vec<f64> = ensemble
        .draws()
        .iter()
        .map(|draw| point_loss(draw, val, objective))
        .collect::<Result<_>>()?;
    Ok(losses.iter().sum::<f64>() / losses.len() as f64)
}

/// Default gamma grid: `points` equispaced values from 0 to the smallest
/// multiplier that zeroes every off-diagonal entry of the full-data sample
/// covariance, capped so the cutoff never exceeds the smallest sample
/// variance. Past that cap the cutoff starts deleting whole variances and
/// the floor adjustment turns the affected assets into degenerate
/// zero-variance positions, which is outside the regime the threshold is
/// meant to search. Degenerates to `[0]` when there is nothing to threshold.
pub fn default_gamma_grid(data: &ReturnsMatrix, demean: bool, points: usize) -> Result<Vec<f64>> {
    if points == 0 {
        return Err(Error::invalid("gamma grid needs at least one point"));
    }
    let p = data.n_cols();
    let n = data.n_rows();
    let denom = ((p as f64).ln() / n as f64).sqrt();
    let s = sample_covariance(data, demean)?;
    let max_off = s.max_abs_offdiag();
    let min_diag = (0..p).map(|i| s.get(i, i)).fold(f64::INFINITY, f64::min);
    if denom == 0.0 || max_off == 0.0 || min_diag <= 0.0 || points == 1 {
        return Ok(vec![0.0]);
    }
    // Nudge past the keep-at-equality boundary so the top of the grid
    // sparsifies every off-diagonal (when the cap allows it).
    let gamma_max = (max_off * (1.0 + 1e-9)).min(min_diag) / denom;
    Ok((0..points)
        .map(|k| gamma_max * k as f64 / (points - 1) as f64)
        .collect())
}

/// Random-split cross-validation over the `(gamma, epsilon)` grid.
///
/// For each split the estimator is fitted on the training rows and scored on
/// the validation rows at every grid point; the selected configuration
/// minimizes the mean loss, ties broken toward the smallest gamma (first
/// occurrence for duplicated grid values). The returned `best` is rebuilt
/// with the full-data sample size so it can drive a final refit directly.
pub fn cv_select(data: &ReturnsMatrix, estimator: &CvEstimator, plan: &CvPlan) -> Result<CvResult> {
    let n = data.n_rows();
    let p = data.n_cols();
    let n_train = ((plan.train_fraction * n as f64).floor() as usize).max(1);
    let n_val = n.saturating_sub(n_train);
    let min_val = match plan.objective {
        CvObjective::CovSpectral => 1,
        CvObjective::GmvpVariance => 2,
    };
    if n_val < min_val {
        return Err(Error::invalid(format!(
            "data has {n} rows; a {:.3} train fraction leaves {n_val} validation rows but {min_val} are needed",
            plan.train_fraction
        )));
    }

    let grid: Vec<(f64, f64)> = plan
        .grid_gamma
        .iter()
        .flat_map(|&g| plan.grid_epsilon.iter().map(move |&e| (g, e)))
        .collect();
    let root = RngStream::new(plan.seed);
    let mut per_split: Vec<Vec<f64>> = Vec::with_capacity(plan.n_splits);

    for split in 0..plan.n_splits {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut root.substream(STREAM_SPLIT).substream(split as u64).rng());
        let train = data.select_rows(&order[..n_train])?;
        let val = data.select_rows(&order[n_train..])?;

        let losses = match estimator {
            CvEstimator::PppPosterior {
                prior,
                n_draws,
                demean,
            } => {
                let prior = prior.build(&train, *demean)?;
                let posterior = posterior_params(&prior, &train, *demean)?;
                let iw = InverseWishart::new(posterior)?;
                let draw_stream = root.substream(STREAM_DRAWS).substream(split as u64);
                // Score every grid pair against every draw, sharing the
                // thresholding and eigenvalue work across the floor grid.
                let per_draw: Vec<Vec<f64>> = (0..*n_draws)
                    .into_par_iter()
                    .map(|k| {
                        let draw = iw.sample(draw_stream.substream(k as u64));
                        let mut out = Vec::with_capacity(grid.len());
                        for &gamma in &plan.grid_gamma {
                            let cfg = ThresholdConfig::new(gamma, 0.0, n_train, p)?;
                            let thresholded = crate::ppp::hard_threshold(&draw, &cfg)?;
                            let min_eig = thresholded.sym_eigen_extremes().min_eig;
                            for &eps in &plan.grid_epsilon {
                                let adjusted = if min_eig < eps {
                                    thresholded.add_scaled_identity(eps - min_eig)
                                } else {
                                    thresholded.clone()
                                };
                                out.push(point_loss(&adjusted, &val, plan.objective)?);
                            }
                        }
                        Ok(out)
                    })
                    .collect::<Result<_>>()?;
                (0..grid.len())
                    .map(|gi| per_draw.iter().map(|d| d[gi]).sum::<f64>() / *n_draws as f64)
                    .collect()
            }
            CvEstimator::ThresholdedSampleCov { demean } => {
                let s_train = sample_covariance(&train, *demean)?;
                let mut out = Vec::with_capacity(grid.len());
                for &gamma in &plan.grid_gamma {
                    let cfg = ThresholdConfig::new(gamma, 0.0, n_train, p)?;
                    let thresholded = crate::ppp::hard_threshold(&s_train, &cfg)?;
                    // The comparator is never floor-adjusted, so its loss
                    // does not depend on the epsilon grid.
                    let loss = point_loss(&thresholded, &val, plan.objective)?;
                    out.extend(std::iter::repeat_n(loss, plan.grid_epsilon.len()));
                }
                out
            }
        };
        per_split.push(losses);
    }

    let splits = plan.n_splits as f64;
    let mut score_table = Vec::with_capacity(grid.len());
    for (gi, &(gamma, epsilon)) in grid.iter().enumerate() {
        let vals: Vec<f64> = per_split.iter().map(|s| s[gi]).collect();
        let mean = vals.iter().sum::<f64>() / splits;
        let se = if plan.n_splits > 1 && mean.is_finite() {
            (sample_variance(&vals) / splits).sqrt()
        } else {
            0.0
        };
        score_table.push(GridScore {
            gamma,
            epsilon,
            mean_loss: mean,
            se_loss: se,
        });
    }

    let mut best_idx = 0;
    for (gi, score) in score_table.iter().enumerate() {
        if score.mean_loss < score_table[best_idx].mean_loss {
            best_idx = gi;
        }
    }
    let (gamma, epsilon) = grid[best_idx];
    let best = ThresholdConfig::new(gamma, epsilon, n, p)?;
    Ok(CvResult {
        best,
        score_table,
        splits_used: plan.n_splits,
    })
}
