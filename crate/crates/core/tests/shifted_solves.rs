use std::sync::Arc;

use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use riccati_core::linalg::scalar::to_complex;
use riccati_core::linalg::{CMat, Mat, SparseMatrix};
use riccati_core::problem::generators::{gen_stokes_dae2, StokesOptions};
use riccati_core::problem::SolveStrategy;
use riccati_core::shifted::{Dae2Base, Dae2Operator, DenseForm, LowRankUpdate, ShiftedOperator, SparsePlusLowRank, StandardBase};

fn random(rng: &mut ChaCha8Rng, r: usize, c: usize, scale: f64) -> Mat {
    Mat::from_fn(r, c, |_, _| scale * (rng.random::<f64>() - 0.5))
}

/// Diagonally dominant stable `A` with a few random couplings and a
/// symmetric positive definite tridiagonal `E`.
fn pencil(rng: &mut ChaCha8Rng, n: usize) -> (Mat, Mat) {
    let mut a = Mat::zeros(n, n);
    for i in 0..n {
        a[(i, i)] = -1.0 - 4.0 * rng.random::<f64>();
        for _ in 0..2 {
            let j = rng.random_range(0..n);
            if j != i {
                a[(i, j)] += 0.3 * (rng.random::<f64>() - 0.5);
            }
        }
    }
    let mut e = Mat::identity(n, n) * 2.0;
    for i in 0..n.saturating_sub(1) {
        e[(i, i + 1)] = 0.4;
        e[(i + 1, i)] = 0.4;
    }
    (a, e)
}

enum Layout {
    Sparse,
    DenseGeneral,
    Hessenberg,
}

fn base(layout: &Layout, a: &Mat, e: &Mat) -> Arc<StandardBase> {
    Arc::new(match layout {
        Layout::Sparse => StandardBase::sparse(SparseMatrix::from_dense(a, 0.0), Some(SparseMatrix::from_dense(e, 0.0))).unwrap(),
        Layout::DenseGeneral => StandardBase::dense(DenseForm::General { a: a.clone(), e: e.clone() }),
        Layout::Hessenberg => {
            let mut h = a.clone();
            for j in 0..h.ncols() {
                for i in j + 2..h.nrows() {
                    h[(i, j)] = 0.0;
                }
            }
            StandardBase::dense(DenseForm::Hessenberg { h })
        }
    })
}

fn rel_diff(x: &CMat, y: &CMat) -> f64 {
    (x - y).norm() / x.norm().max(f64::MIN_POSITIVE)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn smw_matches_augmented(seed in 0u64..1_000_000, n in 4usize..60, w in 1usize..5, layout in 0usize..3,
                             re in 0.2f64..5.0, im in -3.0f64..3.0, with_extra in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (a, e) = pencil(&mut rng, n);
        let layout = match layout {
            0 => Layout::Sparse,
            1 => Layout::DenseGeneral,
            _ => Layout::Hessenberg,
        };
        let b = base(&layout, &a, &e);
        let u = random(&mut rng, n, w, 0.6);
        let v = random(&mut rng, n, w, 0.6);
        let extra = with_extra.then(|| LowRankUpdate { p: random(&mut rng, n, 2, 0.4), q: random(&mut rng, n, 2, 0.4) });
        let aug = SparsePlusLowRank::new(b.clone(), u.clone(), v.clone(), SolveStrategy::Augmented).unwrap();
        let smw = SparsePlusLowRank::new(b, u, v, SolveStrategy::Smw).unwrap();
        let f = to_complex(&random(&mut rng, n, 3, 2.0)) + to_complex(&random(&mut rng, n, 3, 1.0)) * Complex64::i();
        let sigma = Complex64::new(re, im);
        let xa = aug.solve(sigma, &f, extra.as_ref()).unwrap();
        let xs = smw.solve(sigma, &f, extra.as_ref()).unwrap();
        prop_assert!(rel_diff(&xa, &xs) <= 1e-9, "difference {:e}", rel_diff(&xa, &xs));
        prop_assert!(aug.relative_residual(sigma, &xa, &f, extra.as_ref()) <= 1e-11);
        prop_assert!(smw.relative_residual(sigma, &xs, &f, extra.as_ref()) <= 1e-11);
    }
}

#[test]
fn real_shift_with_complex_right_hand_side() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (a, e) = pencil(&mut rng, 30);
    let op =
        SparsePlusLowRank::new(base(&Layout::Sparse, &a, &e), random(&mut rng, 30, 2, 0.5), random(&mut rng, 30, 2, 0.5), SolveStrategy::Augmented).unwrap();
    let f = to_complex(&random(&mut rng, 30, 2, 1.0)) * Complex64::new(0.3, 1.0);
    let sigma = Complex64::new(1.5, 0.0);
    let x = op.solve(sigma, &f, None).unwrap();
    assert!(op.relative_residual(sigma, &x, &f, None) <= 1e-12);
}

#[test]
fn factorizations_are_cached_per_shift() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (a, e) = pencil(&mut rng, 40);
    let b = base(&Layout::Sparse, &a, &e);
    let op = SparsePlusLowRank::new(b, random(&mut rng, 40, 2, 0.5), random(&mut rng, 40, 2, 0.5), SolveStrategy::Smw).unwrap();
    let f = to_complex(&random(&mut rng, 40, 1, 1.0));
    for _ in 0..3 {
        op.solve(Complex64::new(2.0, 1.0), &f, None).unwrap();
    }
    let report = op.report();
    assert_eq!(report.solves, 3);
    assert_eq!(report.factorizations, 1);
    assert_eq!(report.cache_hits, 2);
}

fn stokes_base() -> Arc<Dae2Base> {
    let p = gen_stokes_dae2(6, 1, 2, 2, 1.0, StokesOptions::default()).unwrap();
    Arc::new(Dae2Base::new(p).unwrap())
}

#[test]
fn projector_is_idempotent_and_annihilates_constraints() {
    let base = stokes_base();
    let n = base.n();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let f = random(&mut rng, n, 4, 2.0);
    let pf = base.pi(&f);
    assert!((base.pi(&pf) - &pf).norm() <= 1e-12 * pf.norm());
    assert!(base.problem().j.mul_dense(&pf).norm() <= 1e-12 * f.norm());
    let ptf = base.pi_t(&f);
    assert!((base.pi_t(&ptf) - &ptf).norm() <= 1e-12 * ptf.norm());
}

#[test]
fn mass_matrix_intertwines_projector() {
    let base = stokes_base();
    let n = base.n();
    let e = &base.problem().e;
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let f = random(&mut rng, n, 3, 1.0);
    let lhs = e.mul_dense(&base.pi(&f));
    let rhs = base.pi_t(&e.mul_dense(&f));
    assert!((&lhs - &rhs).norm() <= 1e-12 * lhs.norm());
}

#[test]
fn projected_solves_stay_in_range_and_agree() {
    let base = stokes_base();
    let n = base.n();
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let u = base.problem().b2.clone();
    let v = base.pi_t(&random(&mut rng, n, u.ncols(), 0.5));
    let aug = Dae2Operator::new(base.clone(), u.clone(), v.clone(), SolveStrategy::Augmented).unwrap();
    let smw = Dae2Operator::new(base.clone(), u, v, SolveStrategy::Smw).unwrap();
    let f = aug.restrict(&random(&mut rng, n, 3, 1.0)).unwrap();
    for sigma in [Complex64::new(1.0, 0.0), Complex64::new(0.5, 2.0)] {
        let fc = to_complex(&f);
        let xa = aug.solve(sigma, &fc, None).unwrap();
        let xs = smw.solve(sigma, &fc, None).unwrap();
        assert!(rel_diff(&xa, &xs) <= 1e-9, "shift {sigma}");
        let (re, im) = riccati_core::linalg::scalar::split_complex(&xa);
        for part in [re, im] {
            assert!((base.pi(&part) - &part).norm() <= 1e-10 * xa.norm());
        }
        assert!(aug.relative_residual(sigma, &xa, &fc, None) <= 1e-10);
    }
}
