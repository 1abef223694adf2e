use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use covppp::gmvp::gmvp_weights;
use covppp_bench::truth;

fn bench_eigen_extremes(c: &mut Criterion) {
    let mut group = c.benchmark_group("sym_eigen_extremes");
    for p in [50usize, 100, 200] {
        let m = truth(p);
        group.bench_with_input(BenchmarkId::from_parameter(p), &m, |b, m| {
            b.iter(|| black_box(m.sym_eigen_extremes()))
        });
    }
    group.finish();
}

fn bench_cholesky(c: &mut Criterion) {
    let mut group = c.benchmark_group("cholesky");
    for p in [50usize, 100, 200] {
        let m = truth(p);
        group.bench_with_input(BenchmarkId::from_parameter(p), &m, |b, m| {
            b.iter(|| black_box(m.cholesky().unwrap()))
        });
    }
    group.finish();
}

fn bench_gmvp_weights(c: &mut Criterion) {
    let mut group = c.benchmark_group("gmvp_weights");
    for p in [50usize, 100, 200] {
        let m = truth(p);
        group.bench_with_input(BenchmarkId::from_parameter(p), &m, |b, m| {
            b.iter(|| black_box(gmvp_weights(m).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(
    benches,
    bench_eigen_extremes,
    bench_cholesky,
    bench_gmvp_weights
);
criterion_main!(benches);
