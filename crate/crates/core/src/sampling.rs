//! Multivariate normal data generation and Wishart / inverse-Wishart
//! sampling.
//!
//! The inverse-Wishart here is parameterized by the density
//! `|S|^(-nu/2) exp(-tr(S^-1 B) / 2)`, which corresponds to the standard
//! convention with `nu_std = nu - p - 1` degrees of freedom. Properness
//! requires `nu > 2p`. Draws use the Bartlett decomposition: a lower
//! triangular factor with chi-square diagonal and standard-normal
//! subdiagonal, so each draw costs O(p^3) and is exact.

use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimators::scatter_matrix;
use crate::matrix::{CholeskyFactor, CovMatrix};
use crate::returns::ReturnsMatrix;
use crate::rng::RngStream;

/// Inverse-Wishart parameters `(scale B, degrees of freedom nu)` in the
/// density-exponent convention (`nu > 2p`).
#[derive(Debug, Clone, PartialEq)]
pub struct InverseWishartParams {
    scale: CovMatrix,
    nu: f64,
}

impl InverseWishartParams {
    pub fn new(scale: CovMatrix, nu: f64) -> Result<Self> {
        let p = scale.dim();
        if !nu.is_finite() || nu <= 2.0 * p as f64 {
            return Err(Error::invalid(format!(
                "inverse-Wishart degrees of freedom must exceed 2p = {}, got {nu}",
                2 * p
            )));
        }
        Ok(InverseWishartParams { scale, nu })
    }

    pub fn dim(&self) -> usize {
        self.scale.dim()
    }

    pub fn scale(&self) -> &CovMatrix {
        &self.scale
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    /// Degrees of freedom in the standard convention.
    pub fn std_dof(&self) -> f64 {
        self.nu - self.dim() as f64 - 1.0
    }

    /// Analytic mean `B / (nu_std - p - 1)`, defined when `nu_std > p + 1`.
    pub fn mean(&self) -> Result<CovMatrix> {
        let denom = self.std_dof() - self.dim() as f64 - 1.0;
        if denom <= 0.0 {
            return Err(Error::invalid(
                "inverse-Wishart mean requires nu_std > p + 1",
            ));
        }
        self.scale.scale(1.0 / denom)
    }
}

/// Default prior of the experiments: `nu = 2p + 2` and scale `s_bar * I`
/// where `s_bar` is the average diagonal of the sample covariance.
pub fn default_prior(data: &ReturnsMatrix, demean: bool) -> Result<InverseWishartParams> {
    let p = data.n_cols();
    let s = crate::estimators::sample_covariance(data, demean)?;
    let s_bar = s.diag_mean();
    if s_bar.is_nan() || s_bar <= 0.0 {
        return Err(Error::invalid(
            "default prior needs a positive average sample variance",
        ));
    }
    InverseWishartParams::new(CovMatrix::scaled_identity(p, s_bar), (2 * p + 2) as f64)
}

/// Conjugate update: `IW(B, nu)` with data `X` becomes
/// `IW(B + n * S_n, nu + n)` where `S_n` is the (un)centered second-moment
/// matrix with divisor `n`.
pub fn posterior_params(
    prior: &InverseWishartParams,
    data: &ReturnsMatrix,
    demean: bool,
) -> Result<InverseWishartParams> {
    if data.n_cols() != prior.dim() {
        return Err(Error::DimensionMismatch {
            expected: prior.dim(),
            actual: data.n_cols(),
        });
    }
    // n * S_n is exactly the scatter matrix; no divide-and-multiply round trip.
    let scatter = scatter_matrix(data, demean);
    let scale = prior.scale.add(&scatter)?;
    InverseWishartParams::new(scale, prior.nu + data.n_rows() as f64)
}

/// Reusable inverse-Wishart sampler holding the factorized scale.
#[derive(Debug, Clone)]
pub struct InverseWishart {
    params: InverseWishartParams,
    scale_chol: CholeskyFactor,
}

impl InverseWishart {
    pub fn new(params: InverseWishartParams) -> Result<Self> {
        let scale_chol = params.scale.cholesky()?;
        Ok(InverseWishart { params, scale_chol })
    }

    pub fn params(&self) -> &InverseWishartParams {
        &self.params
    }

    /// One draw. With `L L^T = B` and Bartlett factor `A`, the draw is
    /// `T^T T` where `A T = L^T`; this is `(L^-T A A^T L^-1)^-1`, an
    /// inverse-Wishart variate with scale `B`. SPD holds by construction.
    pub fn sample(&self, stream: RngStream) -> CovMatrix {
        self.sample_with_rng(&mut stream.rng())
    }

    fn sample_with_rng(&self, rng: &mut impl Rng) -> CovMatrix {
        let p = self.params.dim();
        let bartlett = bartlett_factor(p, self.params.std_dof(), rng);

        // Solve A T = L^T column by column; column j of L^T is row j of L.
        let mut t_cols: Vec<Vec<f64>> = Vec::with_capacity(p);
        for j in 0..p {
            let mut col = self.scale_chol.row(j);
            forward_sub_raw(&bartlett, p, &mut col);
            t_cols.push(col);
        }

        // Sigma = T^T T, assembled directly in packed lower form.
        CovMatrix::from_fn(p, |i, j| dot(&t_cols[i], &t_cols[j]))
            .expect("inverse-Wishart draw must be finite")
    }
}

/// One draw from the paper-convention inverse-Wishart.
pub fn sample_inverse_wishart(
    params: &InverseWishartParams,
    stream: RngStream,
) -> Result<CovMatrix> {
    Ok(InverseWishart::new(params.clone())?.sample(stream))
}

/// One Wishart draw `W ~ W_p(scale, dof)` (standard convention,
/// `dof > p - 1`) via the Bartlett decomposition.
pub fn sample_wishart(scale: &CovMatrix, dof: f64, stream: RngStream) -> Result<CovMatrix> {
    let p = scale.dim();
    if !dof.is_finite() || dof <= p as f64 - 1.0 {
        return Err(Error::invalid(format!(
            "Wishart degrees of freedom must exceed p - 1 = {}, got {dof}",
            p - 1
        )));
    }
    let g = scale.cholesky()?;
    let mut rng = stream.rng();
    let a = bartlett_factor(p, dof, &mut rng);

    // W = (G A)(G A)^T with G, A lower triangular.
    let mut ga = vec![0.0; p * p];
    for i in 0..p {
        for j in 0..=i {
            let mut s = 0.0;
            for k in j..=i {
                s += g.get(i, k) * a[k * p + j];
            }
            ga[i * p + j] = s;
        }
    }
    CovMatrix::from_fn(p, |i, j| {
        let mut s = 0.0;
        for k in 0..=j.min(i) {
            s += ga[i * p + k] * ga[j * p + k];
        }
        s
    })
}

/// Lower-triangular Bartlett factor: `A[i][i] = sqrt(chi2(dof - i))`,
/// `A[i][j] ~ N(0,1)` below the diagonal, row-major full storage.
fn bartlett_factor(p: usize, dof: f64, rng: &mut impl Rng) -> Vec<f64> {
    let mut a = vec![0.0; p * p];
    for i in 0..p {
        let chi =
            ChiSquared::new(dof - i as f64).expect("Bartlett chi-square dof must be positive");
        a[i * p + i] = chi.sample(rng).sqrt();
        for j in 0..i {
            a[i * p + j] = rng.sample::<f64, _>(StandardNormal);
        }
    }
    a
}

/// Forward substitution with a raw row-major lower-triangular matrix.
fn forward_sub_raw(l: &[f64], p: usize, b: &mut [f64]) {
    for i in 0..p {
        let mut v = b[i];
        for k in 0..i {
            v -= l[i * p + k] * b[k];
        }
        b[i] = v / l[i * p + i];
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Draw `n` i.i.d. rows from `N_p(mean, cov)` via the Cholesky transform.
pub fn sample_mvn(
    mean: &[f64],
    cov: &CovMatrix,
    n: usize,
    stream: RngStream,
) -> Result<ReturnsMatrix> {
    let p = cov.dim();
    if mean.len() != p {
        return Err(Error::DimensionMismatch {
            expected: p,
            actual: mean.len(),
        });
    }
    if n == 0 {
        return Err(Error::invalid("sample size must be at least 1"));
    }
    let chol = cov.cholesky()?;
    let mut rng = stream.rng();
    let mut values = Vec::with_capacity(n * p);
    let mut z = vec![0.0; p];
    for _ in 0..n {
        for zj in z.iter_mut() {
            *zj = rng.sample::<f64, _>(StandardNormal);
        }
        let x = chol.mul_vec(&z);
        values.extend(x.iter().zip(mean).map(|(a, b)| a + b));
    }
    ReturnsMatrix::with_default_labels(values, n, p)
}

/// Draw `count` inverse-Wishart samples in parallel, draw `k` keyed by
/// `stream.substream(k)`. The result is identical for any worker count.
pub fn sample_inverse_wishart_many(
    iw: &InverseWishart,
    count: usize,
    stream: RngStream,
) -> Vec<CovMatrix> {
    (0..count)
        .into_par_iter()
        .map(|k| iw.sample(stream.substream(k as u64)))
        .collect()
}
