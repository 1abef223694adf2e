//! Symmetric covariance matrices and the linear-algebra primitives used by
//! the samplers, post-processing and portfolio solves.
//!
//! Symmetry is structural: only the lower triangle is stored, so thresholding
//! and arithmetic cannot break it. All constructors reject non-finite input.

use crate::eigen;
use crate::error::{Error, Result};

/// Packed index into a lower triangle stored row-major: (i, j) with j <= i.
#[inline]
fn pk(i: usize, j: usize) -> usize {
    debug_assert!(j <= i);
    i * (i + 1) / 2 + j
}

/// Dense symmetric matrix with the lower triangle authoritative.
#[derive(Debug, Clone, PartialEq)]
pub struct CovMatrix {
    dim: usize,
    data: Vec<f64>,
}

/// Smallest and largest eigenvalues of a symmetric matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenSummary {
    pub min_eig: f64,
    pub max_eig: f64,
}

impl CovMatrix {
    /// Build from a packed lower triangle (row-major, `dim * (dim + 1) / 2`
    /// entries).
    pub fn from_lower(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("matrix dimension must be at least 1"));
        }
        if data.len() != dim * (dim + 1) / 2 {
            return Err(Error::DimensionMismatch {
                expected: dim * (dim + 1) / 2,
                actual: data.len(),
            });
        }
        let m = CovMatrix { dim, data };
        m.check_finite()?;
        Ok(m)
    }

    /// Build from full rows; a non-symmetric input is symmetrized as
    /// `(M + M^T) / 2`.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        if dim == 0 {
            return Err(Error::invalid("matrix dimension must be at least 1"));
        }
        for row in rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: row.len(),
                });
            }
        }
        let mut data = Vec::with_capacity(dim * (dim + 1) / 2);
        for i in 0..dim {
            for j in 0..=i {
                data.push(0.5 * (rows[i][j] + rows[j][i]));
            }
        }
        Self::from_lower(dim, data)
    }

    /// Build entry-by-entry from `f(i, j)`; only `j <= i` is evaluated.
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("matrix dimension must be at least 1"));
        }
        let mut data = Vec::with_capacity(dim * (dim + 1) / 2);
        for i in 0..dim {
            for j in 0..=i {
                data.push(f(i, j));
            }
        }
        Self::from_lower(dim, data)
    }

    pub fn identity(dim: usize) -> Self {
        Self::scaled_identity(dim, 1.0)
    }

    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "matrix dimension must be at least 1");
        CovMatrix {
            dim,
            data: vec![0.0; dim * (dim + 1) / 2],
        }
    }

    pub fn scaled_identity(dim: usize, value: f64) -> Self {
        assert!(dim >= 1, "matrix dimension must be at least 1");
        assert!(value.is_finite(), "diagonal value must be finite");
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[pk(i, i)] = value;
        }
        m
    }

    pub fn diagonal(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("matrix dimension must be at least 1"));
        }
        let mut m = Self::zeros(values.len());
        for (i, &v) in values.iter().enumerate() {
            m.data[pk(i, i)] = v;
        }
        m.check_finite()?;
        Ok(m)
    }

    fn check_finite(&self) -> Result<()> {
        for i in 0..self.dim {
            for j in 0..=i {
                if !self.data[pk(i, j)].is_finite() {
                    return Err(Error::NonFinite { row: i, col: j });
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (r, c) = if j <= i { (i, j) } else { (j, i) };
        self.data[pk(r, c)]
    }

    /// Set entry (i, j) and, by storage, (j, i).
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        let (r, c) = if j <= i { (i, j) } else { (j, i) };
        self.data[pk(r, c)] = value;
    }

    /// Packed lower triangle, row-major.
    pub fn lower_triangle(&self) -> &[f64] {
        &self.data
    }

    pub(crate) fn lower_triangle_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Iterate the authoritative triangle as `(i, j, value)` with `j <= i`.
    pub fn iter_lower(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.dim).flat_map(move |i| (0..=i).map(move |j| (i, j, self.data[pk(i, j)])))
    }

    /// Expand to a full row-major matrix.
    pub fn to_full(&self) -> Vec<f64> {
        let n = self.dim;
        let mut full = vec![0.0; n * n];
        for (i, j, v) in self.iter_lower() {
            full[i * n + j] = v;
            full[j * n + i] = v;
        }
        full
    }

    pub fn diag_mean(&self) -> f64 {
        (0..self.dim).map(|i| self.data[pk(i, i)]).sum::<f64>() / self.dim as f64
    }

    /// Largest |entry| off the diagonal; 0 for a 1 x 1 matrix.
    pub fn max_abs_offdiag(&self) -> f64 {
        let mut best = 0.0_f64;
        for (i, j, v) in self.iter_lower() {
            if i != j {
                best = best.max(v.abs());
            }
        }
        best
    }

    pub fn add(&self, other: &CovMatrix) -> Result<CovMatrix> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &CovMatrix) -> Result<CovMatrix> {
        self.zip_with(other, |a, b| a - b)
    }

    fn zip_with(&self, other: &CovMatrix, f: impl Fn(f64, f64) -> f64) -> Result<CovMatrix> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: other.dim,
            });
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| f(a, b))
            .collect();
        CovMatrix::from_lower(self.dim, data)
    }

    pub fn scale(&self, c: f64) -> Result<CovMatrix> {
        if !c.is_finite() {
            return Err(Error::invalid("scale factor must be finite"));
        }
        CovMatrix::from_lower(self.dim, self.data.iter().map(|&v| c * v).collect())
    }

    /// `self + c * I`, in place on a copy.
    pub fn add_scaled_identity(&self, c: f64) -> CovMatrix {
        let mut out = self.clone();
        for i in 0..out.dim {
            out.data[pk(i, i)] += c;
        }
        out
    }

    /// Matrix-vector product.
    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: x.len(),
            });
        }
        let mut y = vec![0.0; self.dim];
        for (i, j, v) in self.iter_lower() {
            y[i] += v * x[j];
            if i != j {
                y[j] += v * x[i];
            }
        }
        Ok(y)
    }

    /// Smallest and largest eigenvalues.
    pub fn sym_eigen_extremes(&self) -> EigenSummary {
        let mut full = self.to_full();
        let (d, e) = eigen::tridiagonalize(&mut full, self.dim);
        let (min_eig, max_eig) = eigen::tridiag_extremes(&d, &e);
        EigenSummary { min_eig, max_eig }
    }

    /// Spectral norm; for a symmetric matrix this is the largest |eigenvalue|.
    pub fn spectral_norm(&self) -> f64 {
        let s = self.sym_eigen_extremes();
        s.min_eig.abs().max(s.max_eig.abs())
    }

    /// Maximum absolute column sum (matrix 1-norm).
    pub fn matrix_one_norm(&self) -> f64 {
        let mut col_sums = vec![0.0_f64; self.dim];
        for (i, j, v) in self.iter_lower() {
            col_sums[j] += v.abs();
            if i != j {
                col_sums[i] += v.abs();
            }
        }
        col_sums.into_iter().fold(0.0, f64::max)
    }

    /// Cholesky factorization with a strict positive-pivot requirement.
    pub fn cholesky(&self) -> Result<CholeskyFactor> {
        self.cholesky_with_tol(0.0)
    }

    /// Cholesky factorization failing when any pivot is `<= tol`.
    pub fn cholesky_with_tol(&self, tol: f64) -> Result<CholeskyFactor> {
        let p = self.dim;
        let mut l = self.data.clone();
        for j in 0..p {
            let mut s = l[pk(j, j)];
            for k in 0..j {
                s -= l[pk(j, k)] * l[pk(j, k)];
            }
            if s <= tol || !s.is_finite() {
                return Err(Error::NotPositiveDefinite { index: j, pivot: s });
            }
            let ljj = s.sqrt();
            l[pk(j, j)] = ljj;
            for i in j + 1..p {
                let mut v = l[pk(i, j)];
                for k in 0..j {
                    v -= l[pk(i, k)] * l[pk(j, k)];
                }
                l[pk(i, j)] = v / ljj;
            }
        }
        Ok(CholeskyFactor { dim: p, data: l })
    }

    /// Solve `self * x = rhs` for SPD `self` via Cholesky.
    pub fn solve_spd(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        self.cholesky()?.solve(rhs)
    }
}

/// Lower-triangular Cholesky factor `L` with `L L^T` equal to the source.
#[derive(Debug, Clone)]
pub struct CholeskyFactor {
    dim: usize,
    data: Vec<f64>,
}

impl CholeskyFactor {
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if j <= i {
            self.data[pk(i, j)]
        } else {
            0.0
        }
    }

    /// Solve `L L^T x = rhs`.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        if rhs.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: rhs.len(),
            });
        }
        let mut x = rhs.to_vec();
        self.forward_sub(&mut x);
        self.back_sub(&mut x);
        Ok(x)
    }

    /// In-place solve of `L y = b`.
    pub(crate) fn forward_sub(&self, b: &mut [f64]) {
        for i in 0..self.dim {
            let mut v = b[i];
            for k in 0..i {
                v -= self.data[pk(i, k)] * b[k];
            }
            b[i] = v / self.data[pk(i, i)];
        }
    }

    /// In-place solve of `L^T x = b`.
    pub(crate) fn back_sub(&self, b: &mut [f64]) {
        for i in (0..self.dim).rev() {
            let mut v = b[i];
            for k in i + 1..self.dim {
                v -= self.data[pk(k, i)] * b[k];
            }
            b[i] = v / self.data[pk(i, i)];
        }
    }

    /// `L z` for a vector `z` (used to map standard normals to correlated draws).
    pub(crate) fn mul_vec(&self, z: &[f64]) -> Vec<f64> {
        debug_assert_eq!(z.len(), self.dim);
        let mut y = vec![0.0; self.dim];
        for i in 0..self.dim {
            let mut s = 0.0;
            for k in 0..=i {
                s += self.data[pk(i, k)] * z[k];
            }
            y[i] = s;
        }
        y
    }

    /// Reconstruct `L L^T`.
    pub fn reconstruct(&self) -> CovMatrix {
        let p = self.dim;
        let mut data = vec![0.0; p * (p + 1) / 2];
        for i in 0..p {
            for j in 0..=i {
                let mut s = 0.0;
                for k in 0..=j {
                    s += self.data[pk(i, k)] * self.data[pk(j, k)];
                }
                data[pk(i, j)] = s;
            }
        }
        CovMatrix { dim: p, data }
    }

    /// Row `i` of `L` as a padded full-length slice copy.
    pub(crate) fn row(&self, i: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for j in 0..=i {
            out[j] = self.data[pk(i, j)];
        }
        out
    }
}
