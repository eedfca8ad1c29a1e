use std::hint::black_box;

use aoi_bench::reference_points;
use aoi_core::oracle::{build_uniformized_chain, cross_moment_by_summation, steady_state, success_prob_quadrature};
use aoi_core::sim::{self, SimConfig};
use aoi_core::{report, Scheme};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};

fn analytic(c: &mut Criterion) {
    let mut g = c.benchmark_group("analytic");
    for scheme in Scheme::ALL {
        for (label, p) in reference_points(scheme) {
            g.bench_with_input(BenchmarkId::new(scheme.as_str(), label), &p, |b, p| {
                b.iter(|| report(black_box(p)).unwrap())
            });
        }
    }
    g.finish();
}

fn oracles(c: &mut Criterion) {
    let mut g = c.benchmark_group("oracle");
    for k in [5usize, 20, 50] {
        let kf = k as f64;
        g.bench_with_input(BenchmarkId::new("chain_steady_state", k), &kf, |b, &kf| {
            b.iter(|| {
                let m = build_uniformized_chain(kf, 1.0, 1.0 / kf).unwrap();
                steady_state(&m).unwrap()
            })
        });
    }
    for (label, p) in reference_points(Scheme::LcfsNoPreempt).into_iter().take(3) {
        g.bench_with_input(BenchmarkId::new("cross_moment_summation", &label), &p, |b, p| {
            b.iter(|| cross_moment_by_summation(black_box(p)).unwrap())
        });
    }
    g.bench_function("quadrature_success_prob", |b| b.iter(|| success_prob_quadrature(3.0, 1.0 / 3.0, 1.0).unwrap()));
    g.finish();
}

fn simulation(c: &mut Criterion) {
    const HORIZON: u64 = 100_000;
    let mut g = c.benchmark_group("simulate");
    g.sample_size(20);
    g.throughput(Throughput::Elements(HORIZON));
    for scheme in Scheme::ALL {
        for (label, p) in reference_points(scheme).into_iter().take(2) {
            let cfg = SimConfig::new(p, 1, HORIZON).with_warmup(1_000);
            g.bench_with_input(BenchmarkId::new(scheme.as_str(), label), &cfg, |b, cfg| {
                b.iter(|| sim::run(black_box(cfg)).unwrap())
            });
        }
    }
    g.finish();
}

criterion_group!(benches, analytic, oracles, simulation);
criterion_main!(benches);
