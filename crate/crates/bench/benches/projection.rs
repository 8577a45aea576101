use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use deconfound_bench::{dense_study, sparse_study, study_schema};
use deconfound_core::estimators::effect_report;
use deconfound_core::flow::delta_sweep;
use deconfound_core::projection::{dp_projection, logit_maxent, pr_projection, Delta, SolverConfig};
use deconfound_core::sampling::{log_hypergeometric, SampleCounts};

fn bench_projections(c: &mut Criterion) {
    let cfg = SolverConfig::default();
    let small = dense_study(1, &study_schema(2));
    let observational = sparse_study(2);

    c.bench_function("pr_projection 2x2x2", |b| {
        b.iter(|| pr_projection(black_box(&small), &cfg).unwrap())
    });
    c.bench_function("pr_projection 2x2x12 sparse", |b| {
        b.iter(|| pr_projection(black_box(&observational), &cfg).unwrap())
    });
    c.bench_function("dp_projection delta=0.5 2x2x12", |b| {
        let delta = Delta::new(0.5).unwrap();
        b.iter(|| dp_projection(black_box(&observational), delta, &cfg).unwrap())
    });
    c.bench_function("logit_maxent 2x2x12", |b| {
        b.iter(|| logit_maxent(black_box(&observational), &cfg).unwrap())
    });
}

fn bench_sweep(c: &mut Criterion) {
    let cfg = SolverConfig::default();
    let observational = sparse_study(3);
    let grid: Vec<f64> = (0..=20).map(|i| i as f64 / 20.0).collect();
    c.bench_function("delta_sweep 21 points 2x2x12", |b| {
        b.iter(|| delta_sweep(black_box(&observational), &grid, &cfg).unwrap())
    });
}

fn bench_estimators(c: &mut Criterion) {
    let observational = sparse_study(4);
    c.bench_function("effect_report 2x2x12", |b| {
        b.iter(|| effect_report(black_box(&observational)).unwrap())
    });
}

fn bench_sampling(c: &mut Criterion) {
    let schema = study_schema(2);
    let population = SampleCounts::new(
        schema.clone(),
        vec![30_000_000, 10_000_000, 20_000_000, 15_000_000, 5_000_000, 8_000_000, 7_000_000, 5_000_000],
    )
    .unwrap();
    let sample = SampleCounts::new(schema, vec![3000, 1000, 2000, 1500, 500, 800, 700, 500]).unwrap();
    c.bench_function("log_hypergeometric 8 cells", |b| {
        b.iter(|| log_hypergeometric(black_box(&sample), black_box(&population)).unwrap())
    });
}

criterion_group!(
    benches,
    bench_projections,
    bench_sweep,
    bench_estimators,
    bench_sampling
);
criterion_main!(benches);
