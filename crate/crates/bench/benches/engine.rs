use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use ddsm_bench::{density_config, DENSITY_GRID};
use ddsm_core::analysis::{covering_radius, monte_carlo_escape, revealing_points};
use ddsm_core::objective::f_eval;
use ddsm_core::steps::{sample_ball_uniform, substream};
use ddsm_core::{registry_lookup, run, AlgoConfig};

fn objective(c: &mut Criterion) {
    let xs: Vec<f64> = (0..1024)
        .map(|i| -2.0 + i as f64 * (8.0 / 1024.0))
        .collect();
    c.bench_function("f_eval/1024 points", |b| {
        b.iter(|| xs.iter().map(|&x| f_eval(black_box(x))).sum::<f64>())
    });
}

fn engine(c: &mut Criterion) {
    let obj = registry_lookup("counterexample").unwrap();
    let vanilla = AlgoConfig::counterexample(52);
    c.bench_function("run/counterexample 52", |b| {
        b.iter(|| run(black_box(&vanilla), &obj).unwrap())
    });
    let revealing = AlgoConfig::revealing(42, 500);
    c.bench_function("run/revealing 500", |b| {
        b.iter(|| run(black_box(&revealing), &obj).unwrap())
    });
    c.bench_function("montecarlo/64 trials", |b| {
        b.iter(|| monte_carlo_escape(&revealing, &obj, 64, black_box(1)).unwrap())
    });
}

fn sampling(c: &mut Criterion) {
    c.bench_function("sample_ball_uniform/n=3 m=256", |b| {
        b.iter_batched(
            || substream(9, 0),
            |mut rng| sample_ball_uniform(&mut rng, 3, 2.0, 256).unwrap(),
            BatchSize::SmallInput,
        )
    });
}

fn covering(c: &mut Criterion) {
    let obj = registry_lookup("counterexample").unwrap();
    let trace = run(&density_config(3, 128), &obj).unwrap();
    let points = revealing_points(&trace, true);
    let center = trace.final_point().to_vec();
    c.bench_function("covering_radius/density trace", |b| {
        b.iter(|| covering_radius(black_box(&points), &center, 2.0, DENSITY_GRID))
    });
}

criterion_group!(benches, objective, engine, sampling, covering);
criterion_main!(benches);
