//! Shared fixtures for the benchmark targets.

use covppp::matrix::CovMatrix;
use covppp::returns::ReturnsMatrix;
use covppp::rng::RngStream;
use covppp::sampling::sample_mvn;
use covppp::simbench::build_sigma1;

/// The benchmark truth at dimension `p` (a positive multiple of 10).
pub fn truth(p: usize) -> CovMatrix {
    build_sigma1(p).expect("benchmark dimension is a multiple of 10")
}

/// Simulated observations from the benchmark truth.
pub fn observations(p: usize, n: usize, seed: u64) -> ReturnsMatrix {
    sample_mvn(&vec![0.0; p], &truth(p), n, RngStream::new(seed))
        .expect("benchmark truth is positive definite")
}
