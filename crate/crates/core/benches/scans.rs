//! Sequential against data-parallel execution of the embarrassingly parallel scans.

use std::time::Duration;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use stefan_lab::analysis::{verdict_grid, Dial, ThresholdOptions};
use stefan_lab::eigensolver::{threshold_diffusion_fast, EigenProblem};
use stefan_lab::exec::Execution;
use stefan_lab::fbsolver::SolverConfig;
use stefan_lab::model::{CoefficientField, PeriodicScalarFunction};
use stefan_lab::presets::bench_vanish;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn diffusion_scan(c: &mut Criterion) {
    let m = CoefficientField::gaussian_dip(PeriodicScalarFunction::sinusoid(1.0, 1.0, 0.5, 0.0), 1.5, 0.0, 0.5)
        .expect("dip field");
    let base = EigenProblem::new(1.0, m, 1.0, 1).with_grid(128);
    let mut group = c.benchmark_group("d_scan");
    group.sample_size(10).measurement_time(Duration::from_secs(20));
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| threshold_diffusion_fast(&base, 10.0, exec).expect("d* exists"))
        });
    }
    group.finish();
}

fn mu_grid(c: &mut Criterion) {
    let params = bench_vanish();
    let config = SolverConfig {
        ns: 128,
        nr: 401,
        steps_per_period: 128,
        r_out: 20.0,
        periods: 8.0,
        snapshot_every: 1,
    };
    let opts = ThresholdOptions {
        max_periods: 8.0,
        ..Default::default()
    };
    let mus: Vec<f64> = (0..8).map(|i| 0.05 + 8.0 * i as f64).collect();
    let mut group = c.benchmark_group("mu_verdict_grid");
    group.sample_size(10).measurement_time(Duration::from_secs(30));
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| verdict_grid(&params, &config, &Dial::Mu, &mus, &opts, exec).expect("grid runs"))
        });
    }
    group.finish();
}

criterion_group!(scans, diffusion_scan, mu_grid);
criterion_main!(scans);
