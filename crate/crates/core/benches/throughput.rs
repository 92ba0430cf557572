//! Throughput of the data-parallel kernels, each measured on the default
//! rayon pool and on a one-thread pool.
//!
//! `cargo bench -p cuspsum` compares the two pools; with
//! `--no-default-features` the same benches run the compiled sequential
//! fallback.

use std::time::Duration;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use cuspsum::dirichlet::DirichletPolynomial;
use cuspsum::mellin::{verify_decomposition, verify_smoothing_transform, ContourSpec};
use cuspsum::moments::{run_with_forms, MomentConfig, Profile};
use cuspsum::qseries::{delta_qexp, eigenform};
use cuspsum::summation::chunked_sum;
use cuspsum::Complex64;

/// `(label, pool)` pairs; the pool is `None` for the compiled fallback.
fn pools() -> Vec<(String, Option<rayon::ThreadPool>)> {
    if !cuspsum::par::is_parallel() {
        return vec![("sequential-build".into(), None)];
    }
    let threads = rayon::current_num_threads();
    let mk = |n| rayon::ThreadPoolBuilder::new().num_threads(n).build().expect("pool");
    vec![
        (format!("rayon-default-{threads}"), Some(mk(threads))),
        ("rayon-single".into(), Some(mk(1))),
    ]
}

fn run_in<R>(pool: &Option<rayon::ThreadPool>, f: impl FnOnce() -> R + Send) -> R
where
    R: Send,
{
    match pool {
        Some(p) => p.install(f),
        None => f(),
    }
}

fn coefficients(c: &mut Criterion) {
    let mut g = c.benchmark_group("coefficients");
    g.sample_size(10).measurement_time(Duration::from_secs(5));
    for (label, pool) in pools() {
        g.bench_function(BenchmarkId::new("delta-float-1e5", &label), |b| {
            b.iter(|| run_in(&pool, || delta_qexp(100_000, false).unwrap()))
        });
        g.bench_function(BenchmarkId::new("eigenform16-exact-2e4", &label), |b| {
            b.iter(|| run_in(&pool, || eigenform(16, 20_000, true).unwrap()))
        });
    }
    g.finish();
}

fn reductions(c: &mut Criterion) {
    let mut g = c.benchmark_group("reductions");
    g.sample_size(20);
    let d = delta_qexp(100_000, false).unwrap();
    let a = d.float_coeffs().into_owned();
    let poly = DirichletPolynomial::new(a.clone(), 11.0);
    for (label, pool) in pools() {
        g.bench_function(BenchmarkId::new("chunked-sum-1e5", &label), |b| {
            b.iter(|| {
                run_in(&pool, || {
                    chunked_sum(1..a.len(), 1 << 12, |i| a[i] * (i as f64).powf(-12.5)).0
                })
            })
        });
        g.bench_function(BenchmarkId::new("eval-line-1e5x64", &label), |b| {
            b.iter(|| run_in(&pool, || poly.eval_line(6.0, -8.0, 0.25, 64)))
        });
    }
    g.finish();
}

fn identities(c: &mut Criterion) {
    let mut g = c.benchmark_group("identities");
    g.sample_size(10).measurement_time(Duration::from_secs(10));
    let n = 20_000;
    let d = delta_qexp(n, false).unwrap();
    for (label, pool) in pools() {
        g.bench_function(BenchmarkId::new("decomposition-2e4", &label), |b| {
            let spec = ContourSpec::on_line(2.0);
            b.iter(|| {
                run_in(&pool, || {
                    verify_decomposition(Complex64::new(6.0, 5.0), &d, &d, n, &spec).unwrap()
                })
            })
        });
        g.bench_function(BenchmarkId::new("smoothing-x100", &label), |b| {
            let spec = ContourSpec::on_line(4.0);
            b.iter(|| {
                run_in(&pool, || {
                    verify_smoothing_transform(100.0, &d, &d, 10_000, &spec).unwrap()
                })
            })
        });
    }
    g.finish();
}

fn moments(c: &mut Criterion) {
    let mut g = c.benchmark_group("moments");
    g.sample_size(10).measurement_time(Duration::from_secs(10));
    let mut config = MomentConfig::from_profile(12, Profile::Default);
    config.grid = cuspsum::moments::geometric_grid(10.0, 1000.0, 7).unwrap();
    config.n_max = 30_000;
    let d = delta_qexp(config.n_max, false).unwrap();
    for (label, pool) in pools() {
        g.bench_function(BenchmarkId::new("grid-7x-1e3", &label), |b| {
            b.iter(|| run_in(&pool, || run_with_forms(&config, &d, &d).unwrap()))
        });
    }
    g.finish();
}

criterion_group!(benches, coefficients, reductions, identities, moments);
criterion_main!(benches);
