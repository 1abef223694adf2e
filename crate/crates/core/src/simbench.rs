//! Simulation benchmark: block-sparse true covariances, the sparsity-class
//! membership checker, and the replicated experiment comparing estimation
//! methods across sample sizes.

use rayon::prelude::*;

use crate::error::{Error, Result, ResultExt};
use crate::estimators::{sample_covariance, thresholded_sample_cov, Method};
use crate::gmvp::{
    coverage, credible_intervals, gmvp_ensemble, gmvp_weights, mean_weights, relative_cov_error,
    relative_gmvp_error, IntervalSummary, PortfolioWeights,
};
use crate::matrix::CovMatrix;
use crate::ppp::{
    ensemble_mean, generate_ppp_ensemble, pd_adjust_with_floor, ThresholdConfig, DEFAULT_EPSILON,
};
use crate::returns::ReturnsMatrix;
use crate::rng::RngStream;
use crate::sampling::{default_prior, sample_mvn};
use crate::tuning::{cv_select, CvEstimator, CvObjective, CvSettings, PriorSpec};

const STREAM_DATA: u64 = 1;
const STREAM_IW_DRAWS: u64 = 2;
const STREAM_PPP_CV_COV: u64 = 3;
const STREAM_PPP_FINAL_COV: u64 = 4;
const STREAM_PPP_CV_GMVP: u64 = 5;
const STREAM_PPP_FINAL_GMVP: u64 = 6;
const STREAM_THRES_CV_COV: u64 = 7;
const STREAM_THRES_CV_GMVP: u64 = 8;

/// Block-structured true covariance: 10 x 10 constant blocks alternating
/// between 0.1 (even blocks) and 4 (odd blocks), plus `0.1 * I`.
pub fn build_sigma1(p: usize) -> Result<CovMatrix> {
    if p == 0 || !p.is_multiple_of(10) {
        return Err(Error::invalid(format!(
            "this truth needs a positive multiple of 10 assets, got {p}"
        )));
    }
    CovMatrix::from_fn(p, |i, j| {
        let mut v = if i / 10 == j / 10 {
            if (i / 10) % 2 == 0 {
                0.1
            } else {
                4.0
            }
        } else {
            0.0
        };
        if i == j {
            v += 0.1;
        }
        v
    })
}

/// Block-structured true covariance with 10 x 10 constant blocks cycling
/// through 0.25, 0.5, 1, 2, 4 (blocks k and k + 5 share a value), plus
/// `0.1 * I`.
pub fn build_sigma2(p: usize) -> Result<CovMatrix> {
    if p == 0 || !p.is_multiple_of(100) {
        return Err(Error::invalid(format!(
            "this truth needs a positive multiple of 100 assets, got {p}"
        )));
    }
    const BLOCK_VALUES: [f64; 5] = [0.25, 0.5, 1.0, 2.0, 4.0];
    CovMatrix::from_fn(p, |i, j| {
        let mut v = if i / 10 == j / 10 {
            BLOCK_VALUES[(i / 10) % 5]
        } else {
            0.0
        };
        if i == j {
            v += 0.1;
        }
        v
    })
}

/// Parameters of the sparse covariance class: weak-lq radius `c_np` for each
/// column's off-diagonals, diagonal bound `m0`, eigenvalue floor `m1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SparsityClassParams {
    pub q: f64,
    pub c_np: f64,
    pub m0: f64,
    pub m1: f64,
}

impl SparsityClassParams {
    pub fn new(q: f64, c_np: f64, m0: f64, m1: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&q) {
            return Err(Error::invalid("q must lie in [0, 1)"));
        }
        if [c_np, m0, m1].iter().any(|v| v.is_nan() || *v <= 0.0) {
            return Err(Error::invalid("c_np, m0 and m1 must be positive"));
        }
        Ok(SparsityClassParams { q, c_np, m0, m1 })
    }
}

/// First condition violated by a membership check.
#[derive(Debug, Clone, PartialEq)]
pub enum GqViolation {
    /// Column `column`: the `order`-th largest off-diagonal magnitude breaks
    /// the weak-lq bound (for q = 0, the column's nonzero count exceeds c).
    WeakLq {
        column: usize,
        order: usize,
    },
    Diagonal {
        index: usize,
        value: f64,
    },
    MinEigenvalue {
        min_eig: f64,
    },
}

/// Membership verdict with the first violated condition, if any.
#[derive(Debug, Clone, PartialEq)]
pub struct GqReport {
    pub member: bool,
    pub violation: Option<GqViolation>,
}

/// Check membership in the sparse covariance class: each column's
/// off-diagonal magnitudes inside the weak-lq ball, diagonals at most `m0`,
/// smallest eigenvalue strictly above `m1`. For q = 0 the ball condition is
/// read as a bound on the number of nonzeros per column.
pub fn check_gq_membership(m: &CovMatrix, params: &SparsityClassParams) -> GqReport {
    let p = m.dim();
    for j in 0..p {
        let mut offdiag: Vec<f64> = (0..p)
            .filter(|&i| i != j)
            .map(|i| m.get(i, j).abs())
            .collect();
        offdiag.sort_by(|a, b| b.partial_cmp(a).expect("entries are finite"));
        if params.q == 0.0 {
            let nonzeros = offdiag.iter().filter(|v| **v > 0.0).count();
            if nonzeros as f64 > params.c_np {
                return GqReport {
                    member: false,
                    violation: Some(GqViolation::WeakLq {
                        column: j,
                        order: nonzeros,
                    }),
                };
            }
        } else {
            for (k, v) in offdiag.iter().enumerate() {
                if v.powf(params.q) > params.c_np / (k + 1) as f64 {
                    return GqReport {
                        member: false,
                        violation: Some(GqViolation::WeakLq {
                            column: j,
                            order: k + 1,
                        }),
                    };
                }
            }
        }
    }
    for j in 0..p {
        let v = m.get(j, j);
        if v > params.m0 {
            return GqReport {
                member: false,
                violation: Some(GqViolation::Diagonal { index: j, value: v }),
            };
        }
    }
    let min_eig = m.sym_eigen_extremes().min_eig;
    if min_eig <= params.m1 {
        return GqReport {
            member: false,
            violation: Some(GqViolation::MinEigenvalue { min_eig }),
        };
    }
    GqReport {
        member: true,
        violation: None,
    }
}

/// Which true covariance an experiment simulates from.
#[derive(Debug, Clone)]
pub enum TruthSpec {
    Sigma1,
    Sigma2,
    Custom(CovMatrix),
}

impl TruthSpec {
    pub fn matrix(&self, p: usize) -> Result<CovMatrix> {
        match self {
            TruthSpec::Sigma1 => build_sigma1(p),
            TruthSpec::Sigma2 => build_sigma2(p),
            TruthSpec::Custom(m) => {
                if m.dim() != p {
                    return Err(Error::DimensionMismatch {
                        expected: p,
                        actual: m.dim(),
                    });
                }
                Ok(m.clone())
            }
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            TruthSpec::Sigma1 => "sigma1",
            TruthSpec::Sigma2 => "sigma2",
            TruthSpec::Custom(_) => "custom",
        }
    }
}

/// Full description of a replicated simulation experiment.
#[derive(Debug, Clone)]
pub struct ExperimentPlan {
    pub truth: TruthSpec,
    pub p: usize,
    pub n_list: Vec<usize>,
    pub replications: usize,
    pub n_draws: usize,
    pub methods: Vec<Method>,
    pub level: f64,
    pub seed: u64,
}

impl ExperimentPlan {
    pub fn validate(&self) -> Result<()> {
        if self.n_list.is_empty() || self.n_list.contains(&0) {
            return Err(Error::invalid("sample sizes must be nonempty and positive"));
        }
        if self.replications == 0 {
            return Err(Error::invalid("at least one replication is required"));
        }
        if self.n_draws < 2 {
            return Err(Error::invalid(
                "posterior ensembles need at least two draws",
            ));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(Error::invalid("credible level must be inside (0, 1)"));
        }
        Ok(())
    }
}

/// Metrics for one (method, sample size, replication) cell.
#[derive(Debug, Clone)]
pub struct CellResult {
    pub method: Method,
    pub n: usize,
    pub replication: usize,
    pub cov_error: Option<f64>,
    pub gmvp_error: Option<f64>,
    pub coverage: Option<f64>,
    pub gamma_cov: Option<f64>,
    pub gamma_gmvp: Option<f64>,
    pub note: Option<String>,
}

/// Credible-interval band for one Bayesian method at one sample size,
/// emitted as figure data from the first replication.
#[derive(Debug, Clone)]
pub struct FigureSeries {
    pub method: Method,
    pub n: usize,
    pub summary: IntervalSummary,
}

/// Everything an experiment produced.
#[derive(Debug, Clone)]
pub struct ExperimentResults {
    pub plan: ExperimentPlan,
    pub truth_weights: PortfolioWeights,
    pub cells: Vec<CellResult>,
    pub figures: Vec<FigureSeries>,
}

impl ExperimentResults {
    /// Mean of a per-cell metric over replications, skipping absent values.
    pub fn mean_metric(
        &self,
        method: Method,
        n: usize,
        metric: impl Fn(&CellResult) -> Option<f64>,
    ) -> Option<f64> {
        let values: Vec<f64> = self
            .cells
            .iter()
            .filter(|c| c.method == method && c.n == n)
            .filter_map(metric)
            .collect();
        if values.is_empty() {
            None
        } else {
            Some(values.iter().sum::<f64>() / values.len() as f64)
        }
    }
}

/// Simulated data for one replication, shared by the experiment runner and
/// by oracle checks that need to recompute a cell independently.
pub fn replication_data(
    plan: &ExperimentPlan,
    truth: &CovMatrix,
    n_index: usize,
    replication: usize,
) -> Result<ReturnsMatrix> {
    let n = *plan
        .n_list
        .get(n_index)
        .ok_or_else(|| Error::invalid(format!("sample-size index {n_index} out of range")))?;
    let stream = RngStream::new(plan.seed)
        .substream(STREAM_DATA)
        .substream(n_index as u64)
        .substream(replication as u64);
    sample_mvn(&vec![0.0; plan.p], truth, n, stream)
}

/// Run the replicated experiment: for every (method, sample size,
/// replication) cell compute the relative covariance error, the relative
/// portfolio error and (for Bayesian methods) the coverage of the credible
/// intervals. Deterministic for a fixed seed and any worker count.
pub fn run_experiment(plan: &ExperimentPlan, cv: &CvSettings) -> Result<ExperimentResults> {
    plan.validate()?;
    let truth = plan.truth.matrix(plan.p)?;
    let truth_weights =
        gmvp_weights(&truth).context_with(|| "true covariance must be positive definite".into())?;

    let jobs: Vec<(usize, usize)> = (0..plan.n_list.len())
        .flat_map(|ni| (0..plan.replications).map(move |r| (ni, r)))
        .collect();

    let outputs: Vec<(Vec<CellResult>, Vec<FigureSeries>)> = jobs
        .par_iter()
        .map(|&(n_index, replication)| {
            run_job(plan, cv, &truth, &truth_weights, n_index, replication)
                .context_with(|| format!("n = {}, replication {replication}", plan.n_list[n_index]))
        })
        .collect::<Result<_>>()?;

    let mut cells = Vec::new();
    let mut figures = Vec::new();
    for (job_cells, job_figures) in outputs {
        cells.extend(job_cells);
        figures.extend(job_figures);
    }
    Ok(ExperimentResults {
        plan: plan.clone(),
        truth_weights,
        cells,
        figures,
    })
}

fn run_job(
    plan: &ExperimentPlan,
    cv: &CvSettings,
    truth: &CovMatrix,
    truth_weights: &PortfolioWeights,
    n_index: usize,
    replication: usize,
) -> Result<(Vec<CellResult>, Vec<FigureSeries>)> {
    let n = plan.n_list[n_index];
    let data = replication_data(plan, truth, n_index, replication)?;
    let root = RngStream::new(plan.seed);
    let sub = |tag: u64| {
        root.substream(tag)
            .substream(n_index as u64)
            .substream(replication as u64)
    };
    // Simulated observations follow the zero-mean model exactly.
    let demean = false;

    let mut cells = Vec::with_capacity(plan.methods.len());
    let mut figures = Vec::new();

    for &method in &plan.methods {
        let mut cell = CellResult {
            method,
            n,
            replication,
            cov_error: None,
            gmvp_error: None,
            coverage: None,
            gamma_cov: None,
            gamma_gmvp: None,
            note: None,
        };
        match method {
            Method::SampleCov => {
                let s = sample_covariance(&data, demean)?;
                cell.cov_error = Some(relative_cov_error(truth, &s)?);
                match gmvp_weights(&s) {
                    Ok(w) => cell.gmvp_error = Some(relative_gmvp_error(truth_weights, &w)?),
                    Err(Error::NotPositiveDefinite { .. }) => {
                        cell.note = Some("sample covariance singular; portfolio infeasible".into());
                    }
                    Err(e) => return Err(e),
                }
            }
            Method::Iw => {
                let prior = default_prior(&data, demean)?;
                let cfg = ThresholdConfig::new(0.0, 0.0, n, plan.p)?;
                let ensemble = generate_ppp_ensemble(
                    &prior,
                    &data,
                    &cfg,
                    plan.n_draws,
                    sub(STREAM_IW_DRAWS),
                    demean,
                )?;
                cell.cov_error = Some(relative_cov_error(truth, &ensemble_mean(&ensemble))?);
                let ws = gmvp_ensemble(&ensemble)?;
                cell.gmvp_error = Some(relative_gmvp_error(truth_weights, &mean_weights(&ws)?)?);
                let summary = credible_intervals(&ws, plan.level)?;
                cell.coverage = Some(coverage(&summary, truth_weights)?);
                if replication == 0 {
                    figures.push(FigureSeries { method, n, summary });
                }
            }
            Method::Ppp => {
                let estimator = CvEstimator::PppPosterior {
                    prior: PriorSpec::EmpiricalDefault,
                    n_draws: cv.n_draws,
                    demean,
                };
                // Covariance-loss tuning drives the point-estimate metric.
                let plan_cov = cv.plan(
                    &data,
                    demean,
                    CvObjective::CovSpectral,
                    sub(STREAM_PPP_CV_COV).derive_seed(),
                )?;
                let cfg_cov = cv_select(&data, &estimator, &plan_cov)?.best;
                cell.gamma_cov = Some(cfg_cov.gamma());
                let prior = default_prior(&data, demean)?;
                let ensemble = generate_ppp_ensemble(
                    &prior,
                    &data,
                    &cfg_cov,
                    plan.n_draws,
                    sub(STREAM_PPP_FINAL_COV),
                    demean,
                )?;
                cell.cov_error = Some(relative_cov_error(truth, &ensemble_mean(&ensemble))?);

                // Portfolio-loss tuning drives the portfolio metrics.
                let plan_gmvp = cv.plan(
                    &data,
                    demean,
                    CvObjective::GmvpVariance,
                    sub(STREAM_PPP_CV_GMVP).derive_seed(),
                )?;
                let cfg_gmvp = cv_select(&data, &estimator, &plan_gmvp)?.best;
                cell.gamma_gmvp = Some(cfg_gmvp.gamma());
                let ensemble = generate_ppp_ensemble(
                    &prior,
                    &data,
                    &cfg_gmvp,
                    plan.n_draws,
                    sub(STREAM_PPP_FINAL_GMVP),
                    demean,
                )?;
                let ws = gmvp_ensemble(&ensemble)?;
                cell.gmvp_error = Some(relative_gmvp_error(truth_weights, &mean_weights(&ws)?)?);
                let summary = credible_intervals(&ws, plan.level)?;
                cell.coverage = Some(coverage(&summary, truth_weights)?);
                if replication == 0 {
                    figures.push(FigureSeries { method, n, summary });
                }
            }
            Method::Thres => {
                let estimator = CvEstimator::ThresholdedSampleCov { demean };
                let plan_cov = cv.plan(
                    &data,
                    demean,
                    CvObjective::CovSpectral,
                    sub(STREAM_THRES_CV_COV).derive_seed(),
                )?;
                let cfg_cov = cv_select(&data, &estimator, &plan_cov)?.best;
                cell.gamma_cov = Some(cfg_cov.gamma());
                let est = thresholded_sample_cov(&data, &cfg_cov, demean)?;
                cell.cov_error = Some(relative_cov_error(truth, est.matrix())?);

                let plan_gmvp = cv.plan(
                    &data,
                    demean,
                    CvObjective::GmvpVariance,
                    sub(STREAM_THRES_CV_GMVP).derive_seed(),
                )?;
                let cfg_gmvp = cv_select(&data, &estimator, &plan_gmvp)?.best;
                cell.gamma_gmvp = Some(cfg_gmvp.gamma());
                let est = thresholded_sample_cov(&data, &cfg_gmvp, demean)?;
                let (w, fallback) = thres_weights_with_fallback(est.matrix())?;
                if fallback {
                    cell.note =
                        Some("thresholded covariance was repaired with the default floor".into());
                }
                cell.gmvp_error = Some(relative_gmvp_error(truth_weights, &w)?);
            }
        }
        cells.push(cell);
    }
    Ok((cells, figures))
}

/// Portfolio weights of a (possibly singular) thresholded covariance:
/// retries after a default-floor repair and reports whether it was needed.
pub fn thres_weights_with_fallback(m: &CovMatrix) -> Result<(PortfolioWeights, bool)> {
    match gmvp_weights(m) {
        Ok(w) => Ok((w, false)),
        Err(Error::NotPositiveDefinite { .. }) => {
            let repaired = pd_adjust_with_floor(m, DEFAULT_EPSILON);
            Ok((gmvp_weights(&repaired)?, true))
        }
        Err(e) => Err(e),
    }
}
