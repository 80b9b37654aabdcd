use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use pagc_core::exec::Execution;
use pagc_core::ibrw::{estimate_survival, RootLocation, StopPolicy};
use pagc_core::netgen::theta_curve;
use pagc_core::rules::AttachmentRule;
use pagc_core::seed::SeedStream;
use pagc_core::spine::tube::{tube_probability, GaussianWalk, TubeEstimator, TubeSpec};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn theta_replicas(c: &mut Criterion) {
    let rule = AttachmentRule::linear(0.0, 0.5);
    let seeds = SeedStream::new(1, "bench-theta");
    let mut g = c.benchmark_group("theta_curve_n10k_r16");
    g.sample_size(10);
    for (name, mode) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &mode, |b, &mode| {
            b.iter(|| theta_curve(&rule, 10_000, black_box(&[0.6, 0.8, 1.0]), 16, &seeds, mode).unwrap())
        });
    }
    g.finish();
}

fn survival_replicas(c: &mut Criterion) {
    let rule = AttachmentRule::linear(0.0, 0.5);
    let seeds = SeedStream::new(2, "bench-ibrw");
    let policy = StopPolicy { max_gen: 100, pop_cap: 2_000, survival_floor: 50 };
    let mut g = c.benchmark_group("ibrw_survival_r500");
    g.sample_size(10);
    for (name, mode) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &mode, |b, &mode| {
            b.iter(|| estimate_survival(&rule, black_box(0.8), RootLocation::Exponential, 500, policy, &seeds, mode).unwrap())
        });
    }
    g.finish();
}

fn tube_replicas(c: &mut Criterion) {
    let walk = GaussianWalk { sigma: 1.0, start: 0.0 };
    let tube = TubeSpec::constant(1.5, 2500);
    let seeds = SeedStream::new(3, "bench-tube");
    let est = TubeEstimator::Splitting { population: 500, runs: 8 };
    let mut g = c.benchmark_group("tube_splitting_k2500");
    g.sample_size(10);
    for (name, mode) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &mode, |b, &mode| {
            b.iter(|| tube_probability(&walk, black_box(&tube), est, &seeds, mode).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, theta_replicas, survival_replicas, tube_replicas);
criterion_main!(benches);
