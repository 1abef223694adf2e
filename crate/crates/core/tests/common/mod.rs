//! Shared test oracles: an independent cyclic-Jacobi eigenvalue solver and
//! seeded random-matrix generators. The Jacobi path shares no code with the
//! library's tridiagonalization/bisection pipeline, so agreement between the
//! two is meaningful.

// Each integration-test binary uses its own subset of these helpers.
#![allow(dead_code)]

use covppp::matrix::CovMatrix;
use covppp::rng::RngStream;
use rand::Rng;

/// Full eigenvalue spectrum by cyclic Jacobi rotations, ascending.
pub fn jacobi_eigenvalues(m: &CovMatrix) -> Vec<f64> {
    let n = m.dim();
    let mut a = m.to_full();
    let frob: f64 = a.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);
    for _sweep in 0..200 {
        let mut off = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                off += a[i * n + j] * a[i * n + j];
            }
        }
        if off.sqrt() <= 1e-14 * frob {
            break;
        }
        for p in 0..n.saturating_sub(1) {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[p * n + k];
                    let akq = a[q * n + k];
                    a[p * n + k] = c * akp - s * akq;
                    a[q * n + k] = s * akp + c * akq;
                }
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
            }
        }
    }
    let mut eigs: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
    eigs.sort_by(|x, y| x.partial_cmp(y).unwrap());
    eigs
}

/// Random symmetric matrix with entries uniform in `[-scale, scale]`.
pub fn random_symmetric(dim: usize, scale: f64, stream: RngStream) -> CovMatrix {
    let mut rng = stream.rng();
    CovMatrix::from_fn(dim, |_, _| rng.random_range(-scale..=scale)).unwrap()
}

/// Random SPD matrix `G G^T + ridge * I` with Gaussian-free uniform factor.
pub fn random_spd(dim: usize, ridge: f64, stream: RngStream) -> CovMatrix {
    let mut rng = stream.rng();
    let g: Vec<f64> = (0..dim * dim)
        .map(|_| rng.random_range(-1.0..=1.0))
        .collect();
    CovMatrix::from_fn(dim, |i, j| {
        let mut s = 0.0;
        for k in 0..dim {
            s += g[i * dim + k] * g[j * dim + k];
        }
        if i == j {
            s + ridge
        } else {
            s
        }
    })
    .unwrap()
}

/// Apply a chain of random Householder reflections to a diagonal spectrum,
/// producing a matrix with exactly known eigenvalues.
pub fn similarity_from_spectrum(
    spectrum: &[f64],
    reflections: usize,
    stream: RngStream,
) -> CovMatrix {
    let n = spectrum.len();
    let mut rng = stream.rng();
    let mut a: Vec<f64> = vec![0.0; n * n];
    for i in 0..n {
        a[i * n + i] = spectrum[i];
    }
    for _ in 0..reflections {
        let u: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let uu: f64 = u.iter().map(|v| v * v).sum();
        if uu < 1e-12 {
            continue;
        }
        // A <- H A H with H = I - 2 u u^T / (u^T u).
        let mut au = vec![0.0; n];
        for i in 0..n {
            au[i] = (0..n).map(|j| a[i * n + j] * u[j]).sum();
        }
        let uau: f64 = (0..n).map(|i| u[i] * au[i]).sum();
        for i in 0..n {
            for j in 0..n {
                a[i * n + j] +=
                    -2.0 / uu * (u[i] * au[j] + au[i] * u[j]) + 4.0 * uau / (uu * uu) * u[i] * u[j];
            }
        }
    }
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| a[i * n + j]).collect())
        .collect();
    CovMatrix::from_rows(&rows).unwrap()
}
