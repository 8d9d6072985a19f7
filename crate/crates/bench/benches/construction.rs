use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use ufa_bench::{gauss_task, sine_task, swirl_task};
use ufa_core::{build_network, train_gd, verify_reconstruction, ActivationSpec, DeltaPolicy, GDConfig};

fn construction(c: &mut Criterion) {
    let mut group = c.benchmark_group("build_network");
    for (name, (samples, g, sigmas)) in [
        ("sine-bump/101", sine_task(101)),
        ("sine-bump/10000", sine_task(10_000)),
        ("gauss2d/15", gauss_task(15)),
        ("swirl2to2/10", swirl_task(10)),
    ] {
        group.bench_with_input(BenchmarkId::from_parameter(name), &samples, |b, s| {
            b.iter(|| build_network(black_box(s), &g, &sigmas, &DeltaPolicy::Default).unwrap())
        });
    }
    group.finish();

    let (samples, g, sigmas) = gauss_task(15);
    let net = build_network(&samples, &g, &sigmas, &DeltaPolicy::Default).unwrap();
    c.bench_function("verify_reconstruction/gauss2d/15", |b| {
        b.iter(|| verify_reconstruction(black_box(&net), &samples, 1e-9).unwrap())
    });
}

fn inversion(c: &mut Criterion) {
    let analytic = ActivationSpec::sigmoid();
    let bisect = ActivationSpec::sigmoid().with_inverse_strategy(ufa_core::InverseStrategy::Bisection);
    c.bench_function("invert/sigmoid/analytic", |b| b.iter(|| analytic.invert(black_box(0.73)).unwrap()));
    c.bench_function("invert/sigmoid/bisection", |b| b.iter(|| bisect.invert(black_box(0.73)).unwrap()));
}

fn baseline(c: &mut Criterion) {
    let (samples, _, _) = sine_task(101);
    let cfg = GDConfig {
        max_iterations: 100,
        ..GDConfig::default()
    };
    c.bench_function("train_gd/sine-bump/101/100-iters", |b| {
        b.iter(|| train_gd(black_box(&samples), &cfg).unwrap())
    });
}

criterion_group!(benches, construction, inversion, baseline);
criterion_main!(benches);
