use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use thermo_bench::{normalized, reference_models};
use thermo_core::{build_transfer_matrix, equilibrium_measure, exact_window_mass, rpf_solve, RateProblem};

fn perron(c: &mut Criterion) {
    let mut group = c.benchmark_group("rpf_solve");
    for model in reference_models() {
        let name = model.name;
        let (phi, _) = normalized(model);
        for k in [2, 6] {
            let t = build_transfer_matrix(&phi, k);
            group.bench_with_input(BenchmarkId::new(name, k), &t, |b, t| b.iter(|| rpf_solve(black_box(t)).unwrap()));
        }
    }
    group.finish();
}

fn rate(c: &mut Criterion) {
    let mut group = c.benchmark_group("rate_function");
    for model in reference_models() {
        let name = model.name;
        let (phi, psi) = normalized(model);
        let problem = RateProblem::new(&phi, &psi).unwrap();
        let s = problem.spread();
        let p = s.min_mean + 0.8 * s.width();
        group.bench_function(name, |b| b.iter(|| problem.rate(black_box(p)).unwrap()));
    }
    group.finish();
}

fn window_mass(c: &mut Criterion) {
    let mut group = c.benchmark_group("exact_window_mass");
    for model in reference_models() {
        let name = model.name;
        let (phi, psi) = normalized(model);
        let mu = equilibrium_measure(&phi, 1).unwrap();
        for n in [24, 96] {
            group.bench_with_input(BenchmarkId::new(name, n), &n, |b, &n| {
                b.iter(|| exact_window_mass(&mu, &psi, black_box(n), 0.4, 0.05).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, perron, rate, window_mass);
criterion_main!(benches);
