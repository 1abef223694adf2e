//! Portfolio-weight invariances: definitional optimality, scale and
//! permutation equivariance, and the full-ensemble sweep.

mod common;

use common::random_spd;
use covppp::gmvp::{coverage, credible_intervals, gmvp_ensemble, gmvp_weights, PortfolioWeights};
use covppp::matrix::CovMatrix;
use covppp::ppp::{generate_ppp_ensemble, ThresholdConfig};
use covppp::rng::RngStream;
use covppp::sampling::{sample_mvn, InverseWishartParams};
use rand::Rng;

#[test]
fn gmvp_is_optimal_against_random_competitors() {
    let root = RngStream::new(0x60D);
    for trial in 0..20 {
        let dim = 2 + (trial % 10);
        let sigma = random_spd(dim, 0.3, root.substream(trial as u64));
        let w_star = gmvp_weights(&sigma).unwrap();
        let objective = |w: &[f64]| -> f64 {
            let sw = sigma.mul_vec(w).unwrap();
            w.iter().zip(&sw).map(|(a, b)| a * b).sum()
        };
        let best = objective(w_star.as_slice());
        let mut rng = root.substream(1000 + trial as u64).rng();
        for _ in 0..100 {
            let mut w: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..=1.0)).collect();
            let sum: f64 = w.iter().sum();
            if sum.abs() < 1e-6 {
                continue;
            }
            for v in &mut w {
                *v /= sum;
            }
            assert!(
                objective(&w) >= best - 1e-12,
                "competitor beat the minimum variance weights"
            );
        }
    }
}

#[test]
fn gmvp_is_scale_invariant() {
    let root = RngStream::new(0x5CA1E);
    for trial in 0..30 {
        let dim = 2 + (trial % 8);
        let sigma = random_spd(dim, 0.2, root.substream(trial as u64));
        let base = gmvp_weights(&sigma).unwrap();
        for &c in &[0.25, 3.0, 1e4] {
            let scaled = gmvp_weights(&sigma.scale(c).unwrap()).unwrap();
            for i in 0..dim {
                assert!(
                    (base.get(i) - scaled.get(i)).abs() <= 1e-12,
                    "scale {c}, asset {i}"
                );
            }
        }
    }
}

#[test]
fn gmvp_permutation_equivariance() {
    let root = RngStream::new(0xFACE);
    for trial in 0..20 {
        let dim = 3 + (trial % 7);
        let sigma = random_spd(dim, 0.2, root.substream(trial as u64));
        // Rotate indices by one: perm(i) = (i + 1) mod dim.
        let perm: Vec<usize> = (0..dim).map(|i| (i + 1) % dim).collect();
        let permuted = CovMatrix::from_fn(dim, |i, j| sigma.get(perm[i], perm[j])).unwrap();
        let w = gmvp_weights(&sigma).unwrap();
        let wp = gmvp_weights(&permuted).unwrap();
        for i in 0..dim {
            assert!(
                (wp.get(i) - w.get(perm[i])).abs() <= 1e-12,
                "trial {trial}, asset {i}"
            );
        }
    }
}

#[test]
fn coverage_invariant_under_joint_permutation() {
    let ws = vec![
        PortfolioWeights::new(vec![0.1, 0.4, 0.5]).unwrap(),
        PortfolioWeights::new(vec![0.3, 0.3, 0.4]).unwrap(),
        PortfolioWeights::new(vec![0.2, 0.5, 0.3]).unwrap(),
    ];
    let truth = PortfolioWeights::new(vec![0.15, 0.45, 0.4]).unwrap();
    let summary = credible_intervals(&ws, 0.9).unwrap();
    let base = coverage(&summary, &truth).unwrap();

    // Permute assets jointly.
    let perm = [2, 0, 1];
    let ws_p: Vec<PortfolioWeights> = ws
        .iter()
        .map(|w| PortfolioWeights::new(perm.iter().map(|&i| w.get(i)).collect()).unwrap())
        .collect();
    let truth_p = PortfolioWeights::new(perm.iter().map(|&i| truth.get(i)).collect()).unwrap();
    let summary_p = credible_intervals(&ws_p, 0.9).unwrap();
    assert_eq!(coverage(&summary_p, &truth_p).unwrap(), base);
}

#[test]
fn ensemble_sweep_at_p100_keeps_weights_normalized() {
    let p = 100;
    let truth = covppp::simbench::build_sigma1(p).unwrap();
    let data = sample_mvn(&vec![0.0; p], &truth, 120, RngStream::new(404)).unwrap();
    let prior = covppp::sampling::default_prior(&data, false).unwrap();
    let cfg = ThresholdConfig::new(1.0, 1e-4, 120, p).unwrap();
    let ensemble =
        generate_ppp_ensemble(&prior, &data, &cfg, 2000, RngStream::new(405), false).unwrap();
    let ws = gmvp_ensemble(&ensemble).unwrap();
    assert_eq!(ws.len(), 2000);
    for w in &ws {
        let sum: f64 = w.as_slice().iter().sum();
        assert!((sum - 1.0).abs() <= 1e-10);
    }
}

#[test]
fn ensemble_map_examples() {
    let cfg = ThresholdConfig::new(0.0, 0.0, 4, 2).unwrap();
    let prior = InverseWishartParams::new(CovMatrix::identity(2), 6.0).unwrap();
    let ensemble = covppp::ppp::PosteriorEnsemble::new(
        vec![
            CovMatrix::identity(2),
            CovMatrix::diagonal(&[1.0, 2.0]).unwrap(),
        ],
        cfg,
        prior,
        RngStream::new(0),
        false,
    )
    .unwrap();
    let ws = gmvp_ensemble(&ensemble).unwrap();
    assert_eq!(ws.len(), 2);
    assert!((ws[0].get(0) - 0.5).abs() < 1e-14);
    assert!((ws[1].get(0) - 2.0 / 3.0).abs() < 1e-14);
    assert!((ws[1].get(1) - 1.0 / 3.0).abs() < 1e-14);
}

#[test]
fn non_pd_draw_is_reported_with_index() {
    let cfg = ThresholdConfig::new(0.0, 0.0, 4, 2).unwrap();
    let prior = InverseWishartParams::new(CovMatrix::identity(2), 6.0).unwrap();
    let indefinite = CovMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
    let ensemble = covppp::ppp::PosteriorEnsemble::new(
        vec![CovMatrix::identity(2), indefinite],
        cfg,
        prior,
        RngStream::new(0),
        false,
    )
    .unwrap();
    match gmvp_ensemble(&ensemble) {
        Err(covppp::Error::Draw { index, .. }) => assert_eq!(index, 1),
        other => panic!("expected a draw-indexed error, got {other:?}"),
    }
}
