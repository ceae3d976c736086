use std::sync::Arc;

use riccati_core::inner::{bernoulli_feedback, definite_residual, solve_care_dense_sign, solve_care_radi, DefiniteCare};
use riccati_core::linalg::{mul, mul_nt, pencil_eigenvalues, spectral_abscissa, sym_norm2, Mat};
use riccati_core::problem::generators::gen_random_care;
use riccati_core::problem::{CareProblem, ShiftStrategy, SolveStrategy, SolverOptions};
use riccati_core::shifted::{DenseForm, SparsePlusLowRank, StandardBase};

fn operator(p: &CareProblem, strategy: SolveStrategy) -> SparsePlusLowRank {
    let base = Arc::new(StandardBase::dense(DenseForm::General { a: p.a.to_dense(), e: p.dense_e() }));
    SparsePlusLowRank::new(base, Mat::zeros(p.n(), 0), Mat::zeros(p.n(), 0), strategy).unwrap()
}

fn closed_loop_abscissa(p: &CareProblem, feedback: &Mat) -> f64 {
    let a = p.a.to_dense() - mul(&p.b2, feedback);
    spectral_abscissa(&pencil_eigenvalues(&a, &p.dense_e()).unwrap())
}

fn compare_with_sign(p: &CareProblem, shifts: ShiftStrategy) {
    let opts = SolverOptions { shifts, ..Default::default() };
    let op = operator(p, SolveStrategy::Augmented);
    let fb = bernoulli_feedback(&op, &p.b2, &opts).unwrap();
    let initial = (fb.unstable > 0).then_some(fb.factor);
    let care = DefiniteCare { op: &op, b: &p.b2, g: p.c.transpose(), initial };
    let radi = solve_care_radi(&care, 1e-12, &opts).unwrap();
    let sign = solve_care_dense_sign(&care, 1e-14, &opts).unwrap();
    let xr = mul_nt(&radi.factor, &radi.factor);
    let xs = mul_nt(&sign.factor, &sign.factor);
    let diff = sym_norm2(&(&xr - &xs)) / sym_norm2(&xs);
    assert!(diff <= 1e-9, "RADI and sign differ by {diff:e}");
    let scale = sym_norm2(&mul_nt(&care.g, &care.g));
    assert!(definite_residual(&care, &radi.factor) <= 1e-10 * scale);
    assert!((&radi.feedback - &sign.feedback).norm() <= 1e-8 * sign.feedback.norm());
    assert!(closed_loop_abscissa(p, &radi.feedback) < 0.0);
}

#[test]
fn radi_matches_sign_on_stable_pencil() {
    let p = gen_random_care(100, 1, 3, 2, 0, 1.0, 5).unwrap();
    compare_with_sign(&p, ShiftStrategy::Hamiltonian);
}

#[test]
fn radi_matches_sign_after_bernoulli_start() {
    let p = gen_random_care(100, 1, 3, 2, 3, 1.0, 6).unwrap();
    assert!(spectral_abscissa(&pencil_eigenvalues(&p.a.to_dense(), &p.dense_e()).unwrap()) > 0.0);
    compare_with_sign(&p, ShiftStrategy::Hamiltonian);
}

#[test]
fn projection_shifts_reach_the_same_solution() {
    let p = gen_random_care(100, 1, 3, 2, 2, 1.0, 7).unwrap();
    compare_with_sign(&p, ShiftStrategy::Projection);
}

#[test]
fn bernoulli_feedback_stabilizes() {
    let p = gen_random_care(80, 1, 2, 2, 4, 1.0, 8).unwrap();
    let op = operator(&p, SolveStrategy::Smw);
    let fb = bernoulli_feedback(&op, &p.b2, &SolverOptions::default()).unwrap();
    assert_eq!(Some(fb.unstable), p.unstable);
    assert!(closed_loop_abscissa(&p, &fb.feedback) < 0.0);
}
