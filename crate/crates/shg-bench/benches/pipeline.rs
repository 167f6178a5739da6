//! End-to-end performance benchmarks for the hot paths of the pipeline:
//! the stochastic split-step integrator, the linearized correlation
//! predictor, the threshold search, and the spectral moment accumulator.

use criterion::{criterion_group, criterion_main, Criterion, Throughput};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use shg_bench::{bench_grid, below_threshold_params, reference_params, steady};
use shg_core::estimators::BlockedAccumulator;
use shg_core::grid::Spectral;
use shg_core::sim::SplitStepper;
use shg_core::{find_threshold, predict, FieldPair};

/// One Langevin step (ETD1 exponential filter + multiplicative noise) at
/// two grid sizes. Throughput is reported per grid point.
fn bench_stepper(c: &mut Criterion) {
    let params = below_threshold_params(0.99);
    let s = steady(&params);
    let mut group = c.benchmark_group("stepper_step");
    for &n in &[256usize, 1024] {
        let grid = bench_grid(n);
        let mut stepper = SplitStepper::new(params, grid, 1e-3).expect("stepper");
        let mut fields = FieldPair::homogeneous(&grid, &s);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        group.throughput(Throughput::Elements(n as u64));
        group.bench_function(format!("n{n}"), |b| {
            b.iter(|| stepper.step(&mut fields, &mut rng, 0.0).expect("step"));
        });
    }
    group.finish();
}

/// Linearized two-mode correlation prediction for a single wavenumber
/// (builds and solves the 8x8 drift/diffusion moment system).
fn bench_predict(c: &mut Criterion) {
    let params = below_threshold_params(0.99);
    let s = steady(&params);
    c.bench_function("predict_single_k", |b| {
        b.iter(|| predict(&params, &s, 1.829).expect("prediction"));
    });
}

/// Full threshold search (coarse scan plus bisection refinement) at the
/// reference operating point.
fn bench_threshold(c: &mut Criterion) {
    let params = reference_params();
    let mut group = c.benchmark_group("threshold");
    group.sample_size(10);
    group.bench_function("find_threshold", |b| {
        b.iter(|| find_threshold(&params, &Default::default()).expect("threshold"));
    });
    group.finish();
}

/// Accumulating one far-field snapshot into the blocked moment estimator,
/// including the forward transforms of both fields.
fn bench_accumulate(c: &mut Criterion) {
    let params = below_threshold_params(0.99);
    let s = steady(&params);
    let n = 256usize;
    let grid = bench_grid(n);
    let fields = FieldPair::homogeneous(&grid, &s);
    let mut spectral = Spectral::new(grid);
    let mut far1 = vec![shg_core::C64::default(); n];
    let mut far2 = vec![shg_core::C64::default(); n];
    let mut acc = BlockedAccumulator::new(&grid, params.n_th, 16, 1 << 20).expect("accumulator");
    let mut group = c.benchmark_group("accumulate");
    group.throughput(Throughput::Elements(n as u64));
    group.bench_function("push_snapshot_n256", |b| {
        b.iter(|| {
            spectral.far_field_into(&fields.a1, &mut far1);
            spectral.far_field_into(&fields.a2, &mut far2);
            acc.push(&far1, &far2).expect("push");
        });
    });
    group.finish();
}

criterion_group!(
    benches,
    bench_stepper,
    bench_predict,
    bench_threshold,
    bench_accumulate
);
criterion_main!(benches);
