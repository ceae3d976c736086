use std::hint::black_box;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use num_complex::Complex64;

use riccati_core::linalg::scalar::to_complex;
use riccati_core::linalg::Mat;
use riccati_core::par::set_parallel;
use riccati_core::problem::generators::gen_heat_fd;
use riccati_core::problem::{Coeff, Problem, SolveStrategy, SolverOptions};
use riccati_core::riccati::solve_lrri;
use riccati_core::shifted::{ShiftedOperator, SparsePlusLowRank, StandardBase};

const MODES: [(&str, bool); 2] = [("sequential", false), ("parallel", true)];

fn block(n: usize, k: usize) -> Mat {
    Mat::from_fn(n, k, |i, j| ((i * 7 + j * 13) % 29) as f64 / 29.0 - 0.5)
}

fn spmv(c: &mut Criterion) {
    let p = gen_heat_fd(20_000, 1, 1, 1, 1.0).unwrap();
    let Coeff::Sparse(a) = &p.a else { unreachable!() };
    let x = block(p.n(), 32);
    let mut g = c.benchmark_group("spmv_32_columns");
    for (name, on) in MODES {
        set_parallel(on);
        g.bench_function(name, |b| b.iter(|| black_box(a.mul_dense(&x))));
    }
    g.finish();
}

fn shifted_solve(c: &mut Criterion) {
    let p = gen_heat_fd(20_000, 1, 1, 1, 1.0).unwrap();
    let n = p.n();
    let base = Arc::new(StandardBase::from_problem(&p).unwrap());
    let op = SparsePlusLowRank::new(base, block(n, 2) * 1e-3, block(n, 2) * 1e-3, SolveStrategy::Smw).unwrap();
    let sigma = Complex64::new(50.0, 20.0);
    let mut g = c.benchmark_group("cached_complex_solve");
    for k in [4, 32] {
        let f = to_complex(&block(n, k));
        op.solve(sigma, &f, None).unwrap();
        for (name, on) in MODES {
            set_parallel(on);
            g.bench_with_input(BenchmarkId::new(name, k), &f, |b, f| b.iter(|| black_box(op.solve(sigma, f, None).unwrap())));
        }
    }
    g.finish();
}

fn heat_lrri(c: &mut Criterion) {
    let p = Problem::Standard(gen_heat_fd(4000, 1, 1, 1, 1.0).unwrap());
    let opts = SolverOptions { record_timing: false, metrics_every_step: false, ..Default::default() };
    let mut g = c.benchmark_group("lrri_heat_4000");
    g.sample_size(10);
    for (name, on) in MODES {
        set_parallel(on);
        g.bench_function(name, |b| b.iter(|| black_box(solve_lrri(&p, &opts).unwrap())));
    }
    g.finish();
}

criterion_group!(benches, spmv, shifted_solve, heat_lrri);
criterion_main!(benches);
