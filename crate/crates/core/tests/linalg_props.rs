//! Property tests for the symmetric linear algebra: the extreme-eigenvalue
//! solver against an independent Jacobi oracle and against constructions
//! with exactly known spectra, plus factorization round trips.

mod common;

use common::{jacobi_eigenvalues, random_spd, random_symmetric, similarity_from_spectrum};
use covppp::rng::RngStream;

#[test]
fn eigen_extremes_match_jacobi_oracle() {
    let root = RngStream::new(0xE16E);
    for trial in 0..60 {
        let dim = 1 + (trial % 12);
        let m = random_symmetric(dim, 3.0, root.substream(trial as u64));
        let spectrum = jacobi_eigenvalues(&m);
        let got = m.sym_eigen_extremes();
        let scale = spectrum.iter().fold(1.0_f64, |acc, v| acc.max(v.abs()));
        assert!(
            (got.min_eig - spectrum[0]).abs() <= 1e-10 * scale,
            "dim {dim}: min {} vs oracle {}",
            got.min_eig,
            spectrum[0]
        );
        assert!(
            (got.max_eig - spectrum[dim - 1]).abs() <= 1e-10 * scale,
            "dim {dim}: max {} vs oracle {}",
            got.max_eig,
            spectrum[dim - 1]
        );
    }
}

#[test]
fn eigen_extremes_recover_known_spectra() {
    let root = RngStream::new(0x5EED);
    for trial in 0..40 {
        let dim = 2 + (trial % 10);
        let spectrum: Vec<f64> = (0..dim)
            .map(|k| -2.0 + 5.0 * k as f64 / (dim - 1) as f64)
            .collect();
        let m = similarity_from_spectrum(&spectrum, 4, root.substream(trial as u64));
        let got = m.sym_eigen_extremes();
        assert!((got.min_eig - spectrum[0]).abs() < 1e-9, "{got:?}");
        assert!((got.max_eig - spectrum[dim - 1]).abs() < 1e-9, "{got:?}");
    }
}

#[test]
fn spectral_norm_bounded_by_one_norm() {
    let root = RngStream::new(0x11);
    for trial in 0..100 {
        let dim = 1 + (trial % 15);
        let m = random_symmetric(dim, 2.5, root.substream(trial as u64));
        assert!(m.spectral_norm() <= m.matrix_one_norm() + 1e-10);
    }
}

#[test]
fn random_spd_has_positive_min_eig() {
    let root = RngStream::new(0x22);
    for trial in 0..50 {
        let dim = 1 + (trial % 20);
        let m = random_spd(dim, 0.05, root.substream(trial as u64));
        assert!(m.sym_eigen_extremes().min_eig > 0.0);
    }
}

#[test]
fn cholesky_reconstruction_up_to_dim_200() {
    for &(dim, seed) in &[(5_usize, 1_u64), (40, 2), (120, 3), (200, 4)] {
        let m = random_spd(dim, 0.1, RngStream::new(seed));
        let l = m.cholesky().expect("random SPD factorizes");
        let back = l.reconstruct();
        let mut num = 0.0;
        let mut denom = 0.0;
        for (i, j, v) in m.iter_lower() {
            let w = if i == j { 1.0 } else { 2.0 };
            num += w * (v - back.get(i, j)).powi(2);
            denom += w * v * v;
        }
        let rel = (num / denom).sqrt();
        assert!(rel <= 1e-10, "dim {dim}: relative Frobenius error {rel}");
    }
}

#[test]
fn solve_spd_round_trip() {
    let root = RngStream::new(0x33);
    for trial in 0..40 {
        let dim = 1 + (trial % 25);
        let stream = root.substream(trial as u64);
        let m = random_spd(dim, 0.2, stream);
        let mut rng = stream.substream(1).rng();
        let rhs: Vec<f64> = (0..dim)
            .map(|_| rand::Rng::random_range(&mut rng, -1.0..=1.0))
            .collect();
        let x = m.solve_spd(&rhs).unwrap();
        let back = m.mul_vec(&x).unwrap();
        let num: f64 = rhs
            .iter()
            .zip(&back)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let denom: f64 = rhs.iter().map(|a| a * a).sum::<f64>().sqrt().max(1e-300);
        assert!(num / denom <= 1e-8, "dim {dim}: residual {}", num / denom);
    }
}

#[test]
fn sample_covariance_is_psd() {
    let root = RngStream::new(0x44);
    for trial in 0..20 {
        let n = 3 + (trial % 7);
        let p = 2 + (trial % 9);
        let mut rng = root.substream(trial as u64).rng();
        let values: Vec<f64> = (0..n * p)
            .map(|_| rand::Rng::random_range(&mut rng, -2.0..=2.0))
            .collect();
        let data = covppp::ReturnsMatrix::with_default_labels(values, n, p).unwrap();
        for demean in [false, true] {
            let s = covppp::sample_covariance(&data, demean).unwrap();
            assert!(s.sym_eigen_extremes().min_eig >= -1e-10);
        }
    }
}
