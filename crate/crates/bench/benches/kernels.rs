use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use filmflow::probes::{ProbeId, ProbeParams};
use filmflow::stepper::StepperOptions;
use filmflow_bench::*;

fn elastic_solve(c: &mut Criterion) {
    let mut g = c.benchmark_group("elastic_solve");
    for (n, ny) in [(64, 16), (128, 16), (256, 64)] {
        let h = wavy(1, n);
        g.bench_with_input(BenchmarkId::from_parameter(format!("{n}x{ny}")), &h, |b, h| {
            b.iter(|| filmflow::solve_equilibrium(black_box(h), &lame(), ny).unwrap())
        });
    }
    g.finish();
}

fn energy_gradient(c: &mut Criterion) {
    let mut g = c.benchmark_group("surface_gradient");
    for (m, n, p) in [(1, 256, 2.0), (2, 32, 3.0), (2, 64, 3.0)] {
        let h = wavy(m, n);
        let model = surface_model(&h, p);
        g.bench_function(format!("m{m}_n{n}"), |b| b.iter(|| model.evaluate(black_box(&h)).unwrap()));
    }
    g.finish();
}

fn step(c: &mut Criterion) {
    let mut g = c.benchmark_group("incremental_step");
    g.sample_size(10);
    let h = wavy(1, 128);
    let model = elastic_model(&h, 16);
    let opts = StepperOptions::default();
    g.bench_function("elastic_n128", |b| {
        b.iter(|| filmflow::incremental_step(black_box(&h), &model, &opts).unwrap())
    });
    g.finish();
}

fn probes(c: &mut Criterion) {
    let mut g = c.benchmark_group("probe");
    g.sample_size(10);
    for id in [ProbeId::A, ProbeId::H1] {
        let params = ProbeParams::defaults(id);
        g.bench_function(id.to_string(), |b| {
            b.iter(|| filmflow::probe_interpolation(id, &params, 50, 1).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, elastic_solve, energy_gradient, step, probes);
criterion_main!(benches);
