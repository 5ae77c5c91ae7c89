//! Parallel vs single-thread throughput for the two batch workloads.
//!
//! The single-thread side runs the same code inside a one-thread rayon pool,
//! which matches the sequential fallback built without `parallel`.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use convexplap::fields::ScalarField;
use convexplap::growth::{classify_batch, GrowthQuery, ModelGeometry};
use convexplap::radial::RadialFunction;
use convexplap::region::BoxRegion;
use convexplap::weakform::subharmonic_verdict;

fn pools() -> Vec<(&'static str, rayon::ThreadPool)> {
    let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().expect("pool");
    let default = rayon::ThreadPoolBuilder::new().build().expect("pool");
    vec![("single", single), ("default", default)]
}

fn weak_verdict(c: &mut Criterion) {
    let f = ScalarField::exp_norm(2);
    let region = BoxRegion::cube(-2.0, 2.0, 2).expect("region");
    let mut group = c.benchmark_group("subharmonic_verdict");
    group.sample_size(10);
    for (name, pool) in pools() {
        group.bench_function(BenchmarkId::new(name, pool.current_num_threads()), |b| {
            b.iter(|| pool.install(|| subharmonic_verdict(black_box(&f), 2.0, &region, 40, 1).expect("verdict")))
        });
    }
    group.finish();
}

fn growth_batch(c: &mut Criterion) {
    let queries: Vec<GrowthQuery> = [0.0, 1.0, 2.0]
        .iter()
        .flat_map(|&k| {
            [-1.0, 0.0, 0.5].map(|beta| {
                GrowthQuery::new(
                    RadialFunction::power_exp(k, beta),
                    1.5,
                    2.0,
                    ModelGeometry::euclidean(2),
                )
                .expect("query")
            })
        })
        .collect();
    let mut group = c.benchmark_group("classify_batch");
    group.sample_size(10);
    for (name, pool) in pools() {
        group.bench_function(BenchmarkId::new(name, pool.current_num_threads()), |b| {
            b.iter(|| pool.install(|| classify_batch(black_box(&queries))))
        });
    }
    group.finish();
}

criterion_group!(benches, weak_verdict, growth_batch);
criterion_main!(benches);
