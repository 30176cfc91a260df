use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use ifm_core::estimation::{ensemble_estimate, EnsembleConfig, NoiseConfig};
use ifm_core::haar_unitary;
use ifm_core::mesh::{decompose, reconstruct};
use ifm_core::optics::{compose, Reflectivity};
use ifm_core::optimizer::{optimize_reflectivities, OptimizerConfig};
use ifm_core::protocols::Scheme;
use ifm_core::rng::rng_from_seed;
use ifm_core::robustness::{robustness_histogram, RobustnessConfig};

fn mesh(c: &mut Criterion) {
    let mut g = c.benchmark_group("mesh");
    for m in [4usize, 8, 12] {
        let u = haar_unitary(m, &mut rng_from_seed(m as u64));
        g.bench_with_input(BenchmarkId::new("decompose", m), &u, |b, u| {
            b.iter(|| decompose(black_box(u.view())).unwrap())
        });
        let prog = decompose(u.view()).unwrap();
        g.bench_with_input(BenchmarkId::new("reconstruct", m), &prog, |b, p| {
            b.iter(|| reconstruct(black_box(p)).unwrap())
        });
    }
    g.finish();
}

fn circuits(c: &mut Criterion) {
    let scheme = Scheme::cascade_present(vec![Reflectivity::HALF; 8]).unwrap();
    let circuit = scheme.circuit().unwrap();
    c.bench_function("compose cascade-8", |b| b.iter(|| compose(black_box(&circuit)).unwrap()));

    let cfg = EnsembleConfig {
        circuits: 8,
        shots: 100_000,
        noise: NoiseConfig::mesh(0.01),
    };
    let ev = Scheme::ev(Reflectivity::HALF, true);
    c.bench_function("ensemble ev m=8", |b| b.iter(|| ensemble_estimate(&ev, &cfg, 7).unwrap()));
}

fn robustness(c: &mut Criterion) {
    let cfg = RobustnessConfig {
        m: 6,
        eta_target_fraction: 0.95,
        sigma_r: 0.03,
        trials: 10_000,
        seed: 3,
    };
    c.bench_function("robustness m=6 10k trials", |b| b.iter(|| robustness_histogram(black_box(&cfg)).unwrap()));
}

fn optimizer(c: &mut Criterion) {
    let cfg = OptimizerConfig::default();
    c.bench_function("optimize n=5", |b| b.iter(|| optimize_reflectivities(black_box(5), &cfg).unwrap()));
}

criterion_group!(benches, mesh, circuits, robustness, optimizer);
criterion_main!(benches);
