//! Parallel-vs-sequential benchmarks for the data-parallel kernels.
//!
//! Each kernel runs inside a 1-thread local pool and inside a pool sized to
//! the machine, so the two timings are directly comparable. Outputs are
//! bit-identical between the two (fixed-chunk reductions); these benches
//! measure the speedup only.

use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use nsl_core::characteristics::{self, AdvectionField, FlowConfig};
use nsl_core::classical::{self, Grid, GridBc, GridField};
use nsl_core::network::{self, ActivationKind, NetworkSpec};
use nsl_core::numerics::{DenseMatrix, RngStream};
use nsl_core::parallel::with_pool;

fn pool_sizes() -> Vec<usize> {
    let cores = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(2);
    if cores > 1 {
        vec![1, cores]
    } else {
        vec![1]
    }
}

fn bench_gram(c: &mut Criterion) {
    let mut rng = RngStream::new(42, 0);
    let (k, n) = (4000, 600);
    let jac = DenseMatrix::from_vec(k, n, rng.uniform(k * n, -1.0, 1.0).unwrap()).unwrap();
    let mut group = c.benchmark_group("gram_4000x600");
    group.sample_size(10);
    for threads in pool_sizes() {
        group.bench_with_input(BenchmarkId::from_parameter(threads), &threads, |b, &t| {
            b.iter(|| with_pool(t, || jac.gram_scaled(1.0 / k as f64)));
        });
    }
    group.finish();
}

fn bench_feet(c: &mut Criterion) {
    let field = AdvectionField::generic(
        2,
        Arc::new(|_t, x: &[f64], _mu: &[f64], out: &mut [f64]| characteristics::rotation_velocity(x, out)),
    );
    let mut rng = RngStream::new(7, 0);
    let k = 20_000;
    let points = DenseMatrix::from_vec(k, 2, rng.uniform(2 * k, -1.0, 1.0).unwrap()).unwrap();
    let params = DenseMatrix::zeros(k, 0);
    let cfg = FlowConfig::new(10);
    let mut group = c.benchmark_group("rk4_feet_20k_ntau10");
    group.sample_size(10);
    for threads in pool_sizes() {
        group.bench_with_input(BenchmarkId::from_parameter(threads), &threads, |b, &t| {
            b.iter(|| with_pool(t, || characteristics::foot_batch(&field, 0.0, 0.25, &points, &params, &cfg).unwrap()));
        });
    }
    group.finish();
}

fn bench_jacobian(c: &mut Criterion) {
    let spec = NetworkSpec::new(2, vec![16, 24, 16], ActivationKind::Tanh).unwrap();
    let theta = network::init_params(&spec, &mut RngStream::new(3, 0));
    let mut rng = RngStream::new(4, 0);
    let k = 4000;
    let batch = DenseMatrix::from_vec(k, 2, rng.uniform(2 * k, 0.0, 1.0).unwrap()).unwrap();
    let mut group = c.benchmark_group("jacobian_4000x16_24_16");
    group.sample_size(10);
    for threads in pool_sizes() {
        group.bench_with_input(BenchmarkId::from_parameter(threads), &threads, |b, &t| {
            b.iter(|| with_pool(t, || network::forward_with_jacobian(&spec, &theta, &batch).unwrap()));
        });
    }
    group.finish();
}

fn bench_classical_sweep(c: &mut Criterion) {
    let grid = Grid::new(vec![128, 128], vec![-3.0, -3.0], vec![3.0, 3.0], vec![GridBc::Clamped; 2]).unwrap();
    let field = GridField::sample(grid, &|x| 1.0 + (-(x[0] * x[0] + x[1] * x[1])).exp());
    let mut group = c.benchmark_group("classical_sweep_128x128");
    group.sample_size(10);
    for threads in pool_sizes() {
        group.bench_with_input(BenchmarkId::from_parameter(threads), &threads, |b, &t| {
            b.iter(|| with_pool(t, || classical::sl_sweep_step(&field, &[1.0, 1.0], 0.05, 0.2).unwrap()));
        });
    }
    group.finish();
}

criterion_group!(benches, bench_gram, bench_feet, bench_jacobian, bench_classical_sweep);
criterion_main!(benches);
