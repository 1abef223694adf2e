//! Global minimum variance portfolio weights, posterior summaries, credible
//! intervals and the error metrics used by the experiments.

use crate::error::{Error, Result};
use crate::matrix::CovMatrix;
use crate::ppp::PosteriorEnsemble;
use crate::returns::ReturnsMatrix;

/// Portfolio weights summing to one. Short positions (negative weights) are
/// allowed.
#[derive(Debug, Clone, PartialEq)]
pub struct PortfolioWeights {
    weights: Vec<f64>,
}

impl PortfolioWeights {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::invalid("weights must have at least one asset"));
        }
        if let Some(pos) = weights.iter().position(|w| !w.is_finite()) {
            return Err(Error::NonFinite { row: pos, col: 0 });
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > 1e-10 {
            return Err(Error::invalid(format!(
                "weights must sum to 1 within 1e-10, got {sum}"
            )));
        }
        Ok(PortfolioWeights { weights })
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.weights
    }

    pub fn get(&self, i: usize) -> f64 {
        self.weights[i]
    }
}

/// Per-asset posterior mean and credible-interval bounds at a stated level.
/// `lower <= upper` always holds; the mean may fall outside the interval for
/// strongly skewed posteriors.
#[derive(Debug, Clone)]
pub struct IntervalSummary {
    level: f64,
    means: Vec<f64>,
    lowers: Vec<f64>,
    uppers: Vec<f64>,
}

impl IntervalSummary {
    pub fn level(&self) -> f64 {
        self.level
    }

    pub fn dim(&self) -> usize {
        self.means.len()
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn lowers(&self) -> &[f64] {
        &self.lowers
    }

    pub fn uppers(&self) -> &[f64] {
        &self.uppers
    }
}

/// Minimum variance weights `Sigma^-1 1 / (1^T Sigma^-1 1)`, computed through
/// an SPD solve rather than an explicit inverse. A non-positive-definite
/// input is an error; post-process (PD-adjust) the matrix first.
pub fn gmvp_weights(sigma: &CovMatrix) -> Result<PortfolioWeights> {
    let ones = vec![1.0; sigma.dim()];
    let y = sigma.solve_spd(&ones)?;
    let total: f64 = y.iter().sum();
    // 1^T Sigma^-1 1 > 0 for any SPD Sigma.
    PortfolioWeights::new(y.into_iter().map(|v| v / total).collect())
}

/// Map `gmvp_weights` over every draw of an ensemble, preserving order.
pub fn gmvp_ensemble(ensemble: &PosteriorEnsemble) -> Result<Vec<PortfolioWeights>> {
    ensemble
        .draws()
        .iter()
        .enumerate()
        .map(|(k, draw)| {
            gmvp_weights(draw).map_err(|e| Error::Draw {
                index: k,
                source: Box::new(e),
            })
        })
        .collect()
}

/// Posterior mean of a set of weight vectors (itself a valid portfolio).
pub fn mean_weights(ws: &[PortfolioWeights]) -> Result<PortfolioWeights> {
    if ws.is_empty() {
        return Err(Error::invalid("cannot average an empty weight list"));
    }
    let p = ws[0].dim();
    let mut acc = vec![0.0; p];
    for w in ws {
        if w.dim() != p {
            return Err(Error::DimensionMismatch {
                expected: p,
                actual: w.dim(),
            });
        }
        for (a, &v) in acc.iter_mut().zip(w.as_slice()) {
            *a += v;
        }
    }
    let n = ws.len() as f64;
    PortfolioWeights::new(acc.into_iter().map(|v| v / n).collect())
}

/// Linear-interpolation empirical quantile (the widely used "type 7" rule)
/// on an ascending sorted slice.
pub(crate) fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    debug_assert!((0.0..=1.0).contains(&q));
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
    }
}

/// Per-asset means and equal-tailed empirical credible intervals at `level`.
pub fn credible_intervals(ws: &[PortfolioWeights], level: f64) -> Result<IntervalSummary> {
    if ws.len() < 2 {
        return Err(Error::invalid(
            "credible intervals need at least two posterior draws",
        ));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::invalid("credible level must be inside (0, 1)"));
    }
    let p = ws[0].dim();
    if ws.iter().any(|w| w.dim() != p) {
        return Err(Error::invalid("weight vectors must share one dimension"));
    }
    let q_lo = (1.0 - level) / 2.0;
    let q_hi = (1.0 + level) / 2.0;
    let mut means = Vec::with_capacity(p);
    let mut lowers = Vec::with_capacity(p);
    let mut uppers = Vec::with_capacity(p);
    let mut column = vec![0.0; ws.len()];
    for i in 0..p {
        for (slot, w) in column.iter_mut().zip(ws) {
            *slot = w.get(i);
        }
        means.push(column.iter().sum::<f64>() / ws.len() as f64);
        column.sort_by(|a, b| a.partial_cmp(b).expect("weights are finite"));
        lowers.push(quantile_sorted(&column, q_lo));
        uppers.push(quantile_sorted(&column, q_hi));
    }
    Ok(IntervalSummary {
        level,
        means,
        lowers,
        uppers,
    })
}

/// Percentage of assets whose true weight lies inside its interval,
/// endpoints inclusive.
pub fn coverage(summary: &IntervalSummary, truth: &PortfolioWeights) -> Result<f64> {
    if summary.dim() != truth.dim() {
        return Err(Error::DimensionMismatch {
            expected: summary.dim(),
            actual: truth.dim(),
        });
    }
    let covered = (0..truth.dim())
        .filter(|&i| summary.lowers[i] <= truth.get(i) && truth.get(i) <= summary.uppers[i])
        .count();
    Ok(100.0 * covered as f64 / truth.dim() as f64)
}

/// Relative spectral-norm error `||truth - est|| / ||truth||`.
pub fn relative_cov_error(truth: &CovMatrix, est: &CovMatrix) -> Result<f64> {
    let denom = truth.spectral_norm();
    if denom == 0.0 {
        return Err(Error::invalid("relative error is undefined for zero truth"));
    }
    Ok(truth.sub(est)?.spectral_norm() / denom)
}

/// Relative Euclidean error `||truth - est||_2 / ||truth||_2`.
pub fn relative_gmvp_error(truth: &PortfolioWeights, est: &PortfolioWeights) -> Result<f64> {
    if truth.dim() != est.dim() {
        return Err(Error::DimensionMismatch {
            expected: truth.dim(),
            actual: est.dim(),
        });
    }
    let num: f64 = truth
        .as_slice()
        .iter()
        .zip(est.as_slice())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    let denom: f64 = truth.as_slice().iter().map(|a| a * a).sum::<f64>().sqrt();
    if denom == 0.0 {
        return Err(Error::invalid("relative error is undefined for zero truth"));
    }
    Ok(num / denom)
}

/// `100 * sqrt` of the sample variance (divisor `n - 1`) of the per-period
/// portfolio returns `w^T x_t` over a test window.
pub fn realized_portfolio_sd(w: &PortfolioWeights, test: &ReturnsMatrix) -> Result<f64> {
    if test.n_cols() != w.dim() {
        return Err(Error::DimensionMismatch {
            expected: w.dim(),
            actual: test.n_cols(),
        });
    }
    if test.n_rows() < 2 {
        return Err(Error::invalid(
            "realized portfolio SD needs at least two test rows",
        ));
    }
    let returns: Vec<f64> = (0..test.n_rows())
        .map(|t| {
            test.row(t)
                .iter()
                .zip(w.as_slice())
                .map(|(x, wi)| x * wi)
                .sum()
        })
        .collect();
    Ok(100.0 * sample_variance(&returns).sqrt())
}

/// Sample variance with divisor `n - 1`.
pub fn sample_variance(xs: &[f64]) -> f64 {
    debug_assert!(xs.len() >= 2);
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(v: &[f64]) -> PortfolioWeights {
        PortfolioWeights::new(v.to_vec()).unwrap()
    }

    #[test]
    fn gmvp_weights_examples() {
        let eq = gmvp_weights(&CovMatrix::identity(4)).unwrap();
        for i in 0..4 {
            assert!((eq.get(i) - 0.25).abs() < 1e-14);
        }

        let m = CovMatrix::diagonal(&[1.0, 2.0]).unwrap();
        let got = gmvp_weights(&m).unwrap();
        assert!((got.get(0) - 2.0 / 3.0).abs() < 1e-14);
        assert!((got.get(1) - 1.0 / 3.0).abs() < 1e-14);

        let m = CovMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let got = gmvp_weights(&m).unwrap();
        assert!((got.get(0) - 0.5).abs() < 1e-14);
        assert!((got.get(1) - 0.5).abs() < 1e-14);
    }

    #[test]
    fn gmvp_rejects_indefinite() {
        let m = CovMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        assert!(matches!(
            gmvp_weights(&m),
            Err(Error::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn quantile_grid_oracle() {
        // 101 equispaced draws 0.00 .. 1.00: the 2.5% and 97.5% quantiles
        // under linear interpolation are 0.025 and 0.975.
        let grid: Vec<f64> = (0..=100).map(|k| k as f64 / 100.0).collect();
        assert!((quantile_sorted(&grid, 0.025) - 0.025).abs() < 1e-12);
        assert!((quantile_sorted(&grid, 0.975) - 0.975).abs() < 1e-12);
        assert_eq!(quantile_sorted(&grid, 0.0), 0.0);
        assert_eq!(quantile_sorted(&grid, 1.0), 1.0);
    }

    #[test]
    fn identical_draws_collapse_intervals() {
        let ws = vec![w(&[0.25, 0.75]); 10];
        let s = credible_intervals(&ws, 0.95).unwrap();
        assert_eq!(s.means(), &[0.25, 0.75]);
        assert_eq!(s.lowers(), &[0.25, 0.75]);
        assert_eq!(s.uppers(), &[0.25, 0.75]);
    }

    #[test]
    fn symmetric_draws_center_the_mean() {
        let ws = vec![w(&[0.4, 0.6]), w(&[0.6, 0.4])];
        let s = credible_intervals(&ws, 0.5).unwrap();
        assert!((s.means()[0] - 0.5).abs() < 1e-15);
        assert!((s.means()[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn intervals_need_two_draws_and_valid_level() {
        let ws = vec![w(&[1.0])];
        assert!(credible_intervals(&ws, 0.95).is_err());
        let ws = vec![w(&[1.0]), w(&[1.0])];
        assert!(credible_intervals(&ws, 1.0).is_err());
        assert!(credible_intervals(&ws, 0.0).is_err());
    }

    #[test]
    fn coverage_examples() {
        let s = IntervalSummary {
            level: 0.95,
            means: vec![0.5; 4],
            lowers: vec![0.0; 4],
            uppers: vec![1.0; 4],
        };
        let truth = w(&[0.1, 0.2, 0.3, 0.4]);
        assert_eq!(coverage(&s, &truth).unwrap(), 100.0);

        // Endpoint counts as covered.
        let s = IntervalSummary {
            level: 0.95,
            means: vec![0.5],
            lowers: vec![1.0],
            uppers: vec![1.0],
        };
        assert_eq!(coverage(&s, &w(&[1.0])).unwrap(), 100.0);

        // Two of four covered.
        let s = IntervalSummary {
            level: 0.95,
            means: vec![0.0; 4],
            lowers: vec![0.0, 0.0, 0.5, 0.5],
            uppers: vec![0.3, 0.3, 0.6, 0.6],
        };
        let truth = w(&[0.1, 0.2, 0.3, 0.4]);
        assert_eq!(coverage(&s, &truth).unwrap(), 50.0);
    }

    #[test]
    fn relative_cov_error_examples() {
        let i = CovMatrix::identity(3);
        assert_eq!(relative_cov_error(&i, &i).unwrap(), 0.0);
        let two = CovMatrix::scaled_identity(3, 2.0);
        assert!((relative_cov_error(&i, &two).unwrap() - 1.0).abs() < 1e-12);
        let truth = CovMatrix::diagonal(&[1.0, 2.0]).unwrap();
        let est = CovMatrix::identity(2);
        assert!((relative_cov_error(&truth, &est).unwrap() - 0.5).abs() < 1e-12);
        assert!(relative_cov_error(&CovMatrix::zeros(2), &i).is_err());
    }

    #[test]
    fn relative_gmvp_error_examples() {
        let t = w(&[1.0, 0.0]);
        assert_eq!(relative_gmvp_error(&t, &t).unwrap(), 0.0);
        let e = w(&[0.0, 1.0]);
        assert!((relative_gmvp_error(&t, &e).unwrap() - 2.0_f64.sqrt()).abs() < 1e-12);
        let t = w(&[0.5, 0.5]);
        let e = w(&[1.0, 0.0]);
        assert!((relative_gmvp_error(&t, &e).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn realized_sd_examples() {
        let constant = ReturnsMatrix::with_default_labels(vec![0.5, 0.1, 0.5, 0.1], 2, 2).unwrap();
        let weights = w(&[0.5, 0.5]);
        assert_eq!(realized_portfolio_sd(&weights, &constant).unwrap(), 0.0);

        let test = ReturnsMatrix::with_default_labels(vec![1.0, 9.0, -1.0, 7.0], 2, 2).unwrap();
        let weights = w(&[1.0, 0.0]);
        let got = realized_portfolio_sd(&weights, &test).unwrap();
        assert!((got - 100.0 * 2.0_f64.sqrt()).abs() < 1e-10);

        // Scale equivariance.
        let doubled =
            ReturnsMatrix::with_default_labels(vec![2.0, 18.0, -2.0, 14.0], 2, 2).unwrap();
        let twice = realized_portfolio_sd(&weights, &doubled).unwrap();
        assert!((twice - 2.0 * got).abs() < 1e-9);
    }

    #[test]
    fn realized_sd_needs_two_rows() {
        let test = ReturnsMatrix::with_default_labels(vec![1.0], 1, 1).unwrap();
        assert!(realized_portfolio_sd(&w(&[1.0]), &test).is_err());
    }

    #[test]
    fn weights_must_sum_to_one() {
        assert!(PortfolioWeights::new(vec![0.5, 0.6]).is_err());
        assert!(PortfolioWeights::new(vec![1.5, -0.5]).is_ok());
    }
}
