use proptest::prelude::*;

use riccati_core::linalg::{mul, mul_nt, mul_tn, sym_eig_desc, sym_norm2, Mat};
use riccati_core::problem::generators::{gen_heat_fd, gen_random_care, gen_stokes_dae2, Growth, StokesOptions};
use riccati_core::problem::{CareProblem, Coeff, InnerMethod, Problem, SolveStrategy, SolverOptions};
use riccati_core::riccati::dense::{solve_ri_dense, solve_ri_dense_with};
use riccati_core::riccati::metrics::care_residual_dense;
use riccati_core::riccati::{solve_lrri, solve_lrri_with};
use riccati_core::shifted::Dae2Base;
use riccati_core::Error;

fn scalar_problem(a: f64, e: f64, b1: f64, b2: f64, c: f64) -> CareProblem {
    let m = |v: f64| Mat::from_element(1, 1, v);
    CareProblem::new(Coeff::Dense(m(a)), Some(Coeff::Dense(m(e))), m(b1), m(b2), m(c)).unwrap()
}

/// Stabilizing root of `2a y + (b1² - b2²) y² + c² = 0` in `y = e x`.
fn scalar_solution(a: f64, e: f64, b1: f64, b2: f64, c: f64) -> f64 {
    let d = b1 * b1 - b2 * b2;
    let s = (a * a - d * c * c).sqrt();
    (-a - s) / d / e
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn scalar_equations_match_closed_form(a in -3.0f64..3.0, e in 0.5f64..2.0, b2 in 0.5f64..2.0, ratio in 0.0f64..0.9, c in 0.1f64..2.0) {
        let b1 = ratio * b2;
        let p = scalar_problem(a, e, b1, b2, c);
        let exact = scalar_solution(a, e, b1, b2, c);
        let opts = SolverOptions::default();
        let lr = solve_lrri(&Problem::Standard(p.clone()), &opts).unwrap();
        let x = mul_nt(&lr.factor, &lr.factor)[(0, 0)];
        prop_assert!((x - exact).abs() <= 1e-10 * exact.abs(), "low-rank {x} vs {exact}");
        let d = solve_ri_dense(&p, &opts).unwrap();
        prop_assert!((d.x[(0, 0)] - exact).abs() <= 1e-10 * exact.abs(), "dense {} vs {exact}", d.x[(0, 0)]);
    }
}

#[test]
fn dense_iterates_increase_and_obey_residual_identity() {
    let p = gen_random_care(60, 2, 4, 3, 2, 3.0, 21).unwrap();
    let (a, e) = (p.a.to_dense(), p.dense_e());
    let d = mul_nt(&p.b1, &p.b1) - mul_nt(&p.b2, &p.b2);
    let (an, en, dn, cn) = (sym_norm2(&mul_tn(&a, &a)).sqrt(), sym_norm2(&mul_tn(&e, &e)).sqrt(), sym_norm2(&d), sym_norm2(&mul_tn(&p.c, &p.c)));
    let mut prev = Mat::zeros(60, 60);
    let mut checked = 0;
    solve_ri_dense_with(&p, &SolverOptions::default(), &mut |_, x, w| {
        let xnorm = sym_norm2(x);
        let lowest = *sym_eig_desc(w).0.last().unwrap();
        assert!(lowest >= -1e-10 * xnorm, "increment has eigenvalue {lowest:e}");
        let before = sym_norm2(&care_residual_dense(&a, &e, &p.b1, &p.b2, &p.c, &prev));
        let after = care_residual_dense(&a, &e, &p.b1, &p.b2, &p.c, x);
        let ewb = mul(&mul_tn(&e, w), &p.b1);
        let gap = sym_norm2(&(&after - mul_nt(&ewb, &ewb)));
        // Rounding in forming R(X) itself.
        let floor = 100.0 * f64::EPSILON * (2.0 * an * en * xnorm + dn * en * en * xnorm * xnorm + cn);
        assert!(gap <= 1e-8 * sym_norm2(&after) + 1e-11 * before + floor, "identity violated by {gap:e}");
        prev = x.clone();
        checked += 1;
    })
    .unwrap();
    assert!(checked >= 2);
}

#[test]
fn low_rank_matches_dense() {
    let p = gen_random_care(80, 2, 4, 3, 3, 3.0, 22).unwrap();
    let opts = SolverOptions::default();
    let lr = solve_lrri(&Problem::Standard(p.clone()), &opts).unwrap();
    let dense = solve_ri_dense(&p, &opts).unwrap();
    let x = mul_nt(&lr.factor, &lr.factor);
    let diff = sym_norm2(&(&x - &dense.x)) / sym_norm2(&dense.x);
    assert!(diff <= 1e-8, "relative difference {diff:e}");
    assert!(lr.metrics.normalized_res <= 1e-9);
    assert!(lr.bernoulli_unstable > 0);
}

#[test]
fn smw_and_sign_inner_paths_agree() {
    let p = Problem::Standard(gen_random_care(50, 1, 3, 2, 0, 1.0, 23).unwrap());
    let base = solve_lrri(&p, &SolverOptions::default()).unwrap();
    let x = mul_nt(&base.factor, &base.factor);
    for opts in [SolverOptions { strategy: SolveStrategy::Smw, ..Default::default() }, SolverOptions { inner: InnerMethod::Sign, ..Default::default() }] {
        let other = solve_lrri(&p, &opts).unwrap();
        let y = mul_nt(&other.factor, &other.factor);
        assert!(sym_norm2(&(&x - &y)) <= 1e-9 * sym_norm2(&x));
    }
}

#[test]
fn no_disturbance_needs_one_step() {
    let mut p = gen_random_care(40, 1, 3, 2, 0, 1.0, 24).unwrap();
    p.b1 = Mat::zeros(40, 1);
    let lr = solve_lrri(&Problem::Standard(p.clone()), &SolverOptions::default()).unwrap();
    assert_eq!(lr.steps, 1);
    assert_eq!(solve_ri_dense(&p, &SolverOptions::default()).unwrap().steps, 1);
}

#[test]
fn heat_equation_converges_with_low_rank() {
    let p = gen_heat_fd(800, 1, 1, 1, 1.0).unwrap();
    let lr = solve_lrri(&Problem::Standard(p), &SolverOptions::default()).unwrap();
    assert!(lr.steps <= 5);
    assert!(lr.metrics.normalized_res <= 1e-10);
    assert!(lr.factor.ncols() <= 250);
}

#[test]
fn index2_iterates_stay_in_projected_space() {
    let so = StokesOptions { growth: Growth::Unstable(1), ..Default::default() };
    let p = gen_stokes_dae2(6, 1, 2, 2, 3.0, so).unwrap();
    let base = Dae2Base::new(p.clone()).unwrap();
    let mut steps = 0;
    let res = solve_lrri_with(&Problem::Dae2(p), &SolverOptions::default(), &mut |v| {
        let z = v.factor();
        assert!((base.pi(&z) - &z).norm() <= 1e-8 * z.norm(), "step {}", v.step);
        steps += 1;
    })
    .unwrap();
    assert_eq!(res.steps, steps);
    assert_eq!(res.bernoulli_unstable, 1);
    assert!(res.metrics.normalized_res <= 1e-6);
}

#[test]
fn infeasible_attenuation_level_is_reported() {
    let p = gen_random_care(80, 2, 4, 3, 3, 1.0, 22).unwrap();
    let err = solve_lrri(&Problem::Standard(p.clone()), &SolverOptions::default()).unwrap_err();
    assert!(matches!(err.root(), Error::NotStabilizable(_)), "{err}");
    let err = solve_ri_dense(&p, &SolverOptions::default()).unwrap_err();
    assert!(matches!(err.root(), Error::NotStabilizable(_)), "{err}");
}

#[test]
fn uncontrollable_unstable_mode_is_reported() {
    let a = Mat::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
    let p = CareProblem::new(
        Coeff::Dense(a),
        None,
        Mat::from_row_slice(2, 1, &[0.1, 0.1]),
        Mat::from_row_slice(2, 1, &[0.0, 1.0]),
        Mat::from_row_slice(1, 2, &[1.0, 1.0]),
    )
    .unwrap();
    let opts = SolverOptions::default();
    let lr = solve_lrri(&Problem::Standard(p.clone()), &opts).unwrap_err();
    assert!(matches!(lr.root(), Error::NotStabilizable(_)), "{lr}");
    let dense = solve_ri_dense(&p, &opts).unwrap_err();
    assert!(matches!(dense.root(), Error::NotStabilizable(_)), "{dense}");
}

#[test]
fn traces_are_reproducible_without_timing() {
    let p = Problem::Standard(gen_random_care(40, 1, 2, 2, 1, 1.0, 25).unwrap());
    let opts = SolverOptions { record_timing: false, ..Default::default() };
    let csv = |t: &riccati_core::riccati::trace::IterationTrace| {
        let mut out = Vec::new();
        t.write_csv(&mut out).unwrap();
        out
    };
    let first = solve_lrri(&p, &opts).unwrap();
    let second = solve_lrri(&p, &opts).unwrap();
    assert_eq!(csv(&first.trace), csv(&second.trace));
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("trace.jsonl");
    first.trace.save_jsonl(&path).unwrap();
    let loaded = riccati_core::riccati::trace::IterationTrace::load_jsonl(&path).unwrap();
    assert_eq!(loaded.records, first.trace.records);
}
