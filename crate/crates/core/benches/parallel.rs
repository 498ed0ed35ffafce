//! Benchmarks comparing the rayon data-parallel paths against the
//! always-compiled sequential fallbacks on the sampling workloads.
//!
//! Run `cargo bench -p fullstab` for the in-build comparison; to measure
//! the true dependency-free sequential build, save a baseline from
//! `cargo bench -p fullstab --no-default-features` first.

use criterion::{criterion_group, criterion_main, Criterion};

use fullstab::corpus;
use fullstab::oracle::{
    sample_strict_derivative_cloud, sample_strict_derivative_cloud_sequential,
    stability_experiment, stability_experiment_sequential, CloudSpec, ExperimentParams,
};
use fullstab::UnivariatePlq;

fn bench_cloud(c: &mut Criterion) {
    let g = UnivariatePlq::indicator_le_zero();
    let spec = CloudSpec {
        plq: &g,
        base: [0.0, 0.0],
        t_grid: vec![1e-1, 1e-2, 1e-3, 1e-4],
        perturbation_radius: 1.0,
        count: 10_000,
        seed: 42,
    };
    let mut group = c.benchmark_group("strict_cone_cloud_10k");
    group.bench_function("parallel", |b| {
        b.iter(|| sample_strict_derivative_cloud(&spec).unwrap())
    });
    group.bench_function("sequential", |b| {
        b.iter(|| sample_strict_derivative_cloud_sequential(&spec).unwrap())
    });
    group.finish();
}

fn bench_experiment(c: &mut Criterion) {
    let p = corpus::p1();
    let mut params = ExperimentParams::new(0.1, 0.5, 200, 42);
    params.identification_samples = 0;
    let mut group = c.benchmark_group("stability_experiment_200");
    group.sample_size(10);
    group.bench_function("parallel", |b| {
        b.iter(|| stability_experiment(&p.problem, &p.kkt, &params).unwrap())
    });
    group.bench_function("sequential", |b| {
        b.iter(|| stability_experiment_sequential(&p.problem, &p.kkt, &params).unwrap())
    });
    group.finish();
}

criterion_group!(benches, bench_cloud, bench_experiment);
criterion_main!(benches);
