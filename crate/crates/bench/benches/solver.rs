use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use rasc_bench::{instance, p1_model, p2_model};
use rasc_core::{build_p1, lp_relax, solve, SolverConfig};

fn model_build(c: &mut Criterion) {
    let (s, t) = instance(3, 3.0, 7);
    c.bench_function("build_p1_3_flows", |b| {
        b.iter(|| build_p1(black_box(&s), black_box(&t), &[3.0; 3], 15).unwrap())
    });
}

fn relaxation(c: &mut Criterion) {
    let m = p1_model(3, 3.0, 7);
    let cfg = SolverConfig::default();
    c.bench_function("lp_relax_p1_3_flows", |b| b.iter(|| lp_relax(black_box(&m), &cfg).unwrap()));
}

fn exact(c: &mut Criterion) {
    let cfg = SolverConfig::default();
    let mut group = c.benchmark_group("solve");
    group.sample_size(10);
    for flows in 1..=3 {
        let m = p1_model(flows, 3.0, 7);
        group.bench_function(format!("p1_{flows}_flows"), |b| b.iter(|| solve(black_box(&m), &cfg).unwrap()));
    }
    let m = p2_model(3, 3.0, 7);
    group.bench_function("p2_3_flows", |b| b.iter(|| solve(black_box(&m), &cfg).unwrap()));
    group.finish();
}

criterion_group!(benches, model_build, relaxation, exact);
criterion_main!(benches);
