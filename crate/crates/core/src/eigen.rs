//! Extreme-eigenvalue solver for dense symmetric matrices.
//!
//! The pipeline is Householder tridiagonalization followed by Sturm-sequence
//! bisection for the smallest and largest eigenvalues. Only the extremes are
//! produced; nothing in the crate needs a full spectrum or eigenvectors.

/// Reduce a symmetric matrix to tridiagonal form by Householder reflections.
///
/// `a` is a full row-major n x n matrix; only the lower triangle is read and
/// updated, the upper triangle is left stale. Returns the diagonal `d`
/// (length n) and the sub-diagonal `e` (length n - 1).
pub(crate) fn tridiagonalize(a: &mut [f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    debug_assert_eq!(a.len(), n * n);
    let idx = |i: usize, j: usize| i * n + j;
    let mut e = vec![0.0; n.saturating_sub(1)];
    let mut v = vec![0.0; n];
    let mut w = vec![0.0; n];

    for k in 0..n.saturating_sub(2) {
        let m = n - k - 1;
        let x0 = a[idx(k + 1, k)];
        let mut sigma = 0.0;
        for i in k + 2..n {
            sigma += a[idx(i, k)] * a[idx(i, k)];
        }
        if sigma == 0.0 {
            e[k] = x0;
            continue;
        }
        let mu = (x0 * x0 + sigma).sqrt();
        let v0 = if x0 <= 0.0 {
            x0 - mu
        } else {
            -sigma / (x0 + mu)
        };
        let beta = 2.0 * v0 * v0 / (sigma + v0 * v0);
        v[0] = 1.0;
        for i in 1..m {
            v[i] = a[idx(k + 1 + i, k)] / v0;
        }

        // w = beta * A22 * v, reading the symmetric block through its lower triangle.
        for i in 0..m {
            let r = k + 1 + i;
            let mut s = 0.0;
            for j in 0..m {
                let c = k + 1 + j;
                let val = if c <= r { a[idx(r, c)] } else { a[idx(c, r)] };
                s += val * v[j];
            }
            w[i] = beta * s;
        }
        let vtw: f64 = v[..m].iter().zip(&w[..m]).map(|(x, y)| x * y).sum();
        let alpha = 0.5 * beta * vtw;
        for i in 0..m {
            w[i] -= alpha * v[i];
        }
        // Rank-2 update A22 <- A22 - v w^T - w v^T on the lower triangle.
        for i in 0..m {
            let r = k + 1 + i;
            for j in 0..=i {
                let c = k + 1 + j;
                a[idx(r, c)] -= v[i] * w[j] + w[i] * v[j];
            }
        }
        e[k] = if x0 <= 0.0 { mu } else { -mu };
    }
    if n >= 2 {
        e[n - 2] = a[idx(n - 1, n - 2)];
    }
    let d = (0..n).map(|i| a[idx(i, i)]).collect();
    (d, e)
}

/// Smallest and largest eigenvalues of a symmetric tridiagonal matrix via
/// Sturm-count bisection. The result is clamped to the Gershgorin interval,
/// so a matrix whose true extreme sits exactly on that bound (e.g. a PSD
/// matrix with a zero eigenvalue and zero Gershgorin slack) reports it
/// without sign noise.
pub(crate) fn tridiag_extremes(d: &[f64], e: &[f64]) -> (f64, f64) {
    let n = d.len();
    debug_assert_eq!(e.len(), n.saturating_sub(1));
    if n == 1 {
        return (d[0], d[0]);
    }
    let scale = d
        .iter()
        .chain(e.iter())
        .fold(0.0_f64, |m, &x| m.max(x.abs()));
    if scale == 0.0 {
        return (0.0, 0.0);
    }
    let ds: Vec<f64> = d.iter().map(|&x| x / scale).collect();
    let e2: Vec<f64> = e.iter().map(|&x| (x / scale) * (x / scale)).collect();

    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let mut r = 0.0;
        if i > 0 {
            r += e2[i - 1].sqrt();
        }
        if i < n - 1 {
            r += e2[i].sqrt();
        }
        lo = lo.min(ds[i] - r);
        hi = hi.max(ds[i] + r);
    }

    // Number of eigenvalues strictly below x (LDL^T pivot sign count).
    const TINY: f64 = 1e-300;
    let count_below = |x: f64| -> usize {
        let mut count = 0;
        let mut q = ds[0] - x;
        if q < 0.0 {
            count += 1;
        }
        for i in 1..n {
            let denom = if q.abs() < TINY {
                if q < 0.0 {
                    -TINY
                } else {
                    TINY
                }
            } else {
                q
            };
            q = ds[i] - x - e2[i - 1] / denom;
            if q < 0.0 {
                count += 1;
            }
        }
        count
    };

    // Smallest x in [lo, hi] with count_below(x) >= target.
    let bisect = |target: usize| -> f64 {
        let (mut a, mut b) = (lo, hi);
        for _ in 0..128 {
            if b - a <= f64::EPSILON * a.abs().max(b.abs()).max(1.0) {
                break;
            }
            let mid = 0.5 * (a + b);
            if count_below(mid) >= target {
                b = mid;
            } else {
                a = mid;
            }
        }
        0.5 * (a + b)
    };

    let min_eig = bisect(1).max(lo);
    let max_eig = bisect(n).min(hi);
    (min_eig * scale, max_eig * scale)
}
