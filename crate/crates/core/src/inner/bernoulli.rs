//! Stabilizing feedback from the Bernoulli equation on the unstable left
//! eigenspace.

use crate::error::{Error, Result};
use crate::linalg::{mul, mul_nt, mul_tn, sym_eig_desc, Mat};
use crate::problem::SolverOptions;
use crate::shifted::ShiftedOperator;

use super::shifts::orthonormal_basis;
use super::sign::psd_factor;
use super::small_lyapunov;
use super::spectrum::unstable_left_eigs;

/// Feedback `K0` such that `A_k - B K0` is stable, with `K0 = Bᵀ Y0 Y0ᵀ E`.
#[derive(Clone, Debug)]
pub struct BernoulliFeedback {
    pub feedback: Mat,
    pub factor: Mat,
    pub unstable: usize,
}

/// Solves `A_kᵀXE + EᵀXA_k - EᵀXBBᵀXE = 0` on the span of the left
/// eigenvectors of the unstable eigenvalues of `(A_k, E)`.
///
/// A stable pencil gives `K0 = 0` and an empty factor. At most
/// `opts.unstable_cap` unstable eigenvalues are accepted.
pub fn bernoulli_feedback(op: &dyn ShiftedOperator, b: &Mat, opts: &SolverOptions) -> Result<BernoulliFeedback> {
    let n = op.n();
    let pairs = unstable_left_eigs(op, opts)?;
    if pairs.is_empty() {
        return Ok(BernoulliFeedback { feedback: Mat::zeros(b.ncols(), n), factor: Mat::zeros(n, 0), unstable: 0 });
    }
    let mut raw = Mat::zeros(n, 2 * pairs.len());
    for (k, (_, y)) in pairs.iter().enumerate() {
        for i in 0..n {
            raw[(i, 2 * k)] = y[i].re;
            raw[(i, 2 * k + 1)] = y[i].im;
        }
    }
    let w = orthonormal_basis(&raw, 1e-10);
    if w.ncols() != pairs.len() {
        log::warn!("unstable left eigenspace has dimension {} for {} eigenvalues", w.ncols(), pairs.len());
    }
    let at_w = op.apply_a(&w, true);
    let et_w = op.apply_e(&w, true);
    let gram = mul_tn(&et_w, &et_w);
    let s = crate::linalg::solve_dense(&gram, &mul_tn(&et_w, &at_w)).map_err(|_| Error::SingularMatrix { context: "Bernoulli projection".into() })?.transpose();
    let bt = mul_tn(&w, b);
    let rhs = mul_nt(&bt, &bt);
    let y = small_lyapunov(&s, &rhs).map_err(|_| Error::NotStabilizable("unstable eigenvalues sit symmetric to the imaginary axis".into()))?;
    let (vals, _) = sym_eig_desc(&y);
    let top = vals.first().copied().unwrap_or(0.0);
    let bottom = vals.last().copied().unwrap_or(0.0);
    if !(top > 0.0) || bottom <= 1e-12 * top {
        return Err(Error::NotStabilizable(format!("{} unstable eigenvalue(s) are not controllable through the stabilizing input", pairs.len())));
    }
    let x = crate::linalg::solve_dense(&y, &Mat::identity(y.nrows(), y.nrows()))?;
    let x = (&x + x.transpose()) * 0.5;
    let feedback = mul(&mul_tn(&bt, &x), &et_w.transpose());
    let factor = mul(&w, &psd_factor(&x, 0.0)?);
    Ok(BernoulliFeedback { feedback, factor, unstable: pairs.len() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::SolveStrategy;
    use crate::shifted::{DenseForm, SparsePlusLowRank, StandardBase};
    use std::sync::Arc;

    fn dense_op(a: Mat) -> SparsePlusLowRank {
        let n = a.nrows();
        let base = Arc::new(StandardBase::dense(DenseForm::General { a, e: Mat::identity(n, n) }));
        SparsePlusLowRank::new(base, Mat::zeros(n, 0), Mat::zeros(n, 0), SolveStrategy::Augmented).unwrap()
    }

    #[test]
    fn diagonal_example() {
        let op = dense_op(Mat::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -2.0]));
        let b = Mat::from_row_slice(2, 1, &[1.0, 0.0]);
        let fb = bernoulli_feedback(&op, &b, &SolverOptions::default()).unwrap();
        assert!((fb.feedback[(0, 0)] - 2.0).abs() < 1e-12);
        assert!(fb.feedback[(0, 1)].abs() < 1e-12);
        assert_eq!(fb.unstable, 1);
    }

    #[test]
    fn stable_pencil_needs_no_feedback() {
        let op = dense_op(Mat::from_row_slice(2, 2, &[-1.0, 3.0, 0.0, -2.0]));
        let fb = bernoulli_feedback(&op, &Mat::from_row_slice(2, 1, &[1.0, 1.0]), &SolverOptions::default()).unwrap();
        assert_eq!(fb.unstable, 0);
        assert_eq!(fb.factor.ncols(), 0);
        assert_eq!(fb.feedback, Mat::zeros(1, 2));
    }

    #[test]
    fn uncontrollable_mode_is_rejected() {
        let op = dense_op(Mat::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -2.0]));
        let b = Mat::from_row_slice(2, 1, &[0.0, 1.0]);
        assert!(matches!(bernoulli_feedback(&op, &b, &SolverOptions::default()), Err(Error::NotStabilizable(_))));
    }

    #[test]
    fn reflects_complex_pair() {
        let a = Mat::from_row_slice(3, 3, &[0.5, 2.0, 0.0, -2.0, 0.5, 0.0, 0.1, 0.0, -1.0]);
        let b = Mat::from_row_slice(3, 1, &[1.0, 0.3, 0.2]);
        let op = dense_op(a.clone());
        let fb = bernoulli_feedback(&op, &b, &SolverOptions::default()).unwrap();
        let closed = &a - &b * &fb.feedback;
        let vals = crate::linalg::pencil_eigenvalues(&closed, &Mat::identity(3, 3)).unwrap();
        let mut re: Vec<f64> = vals.iter().map(|z| z.re).collect();
        re.sort_by(f64::total_cmp);
        assert!((re[0] + 1.0).abs() < 1e-10 && (re[1] + 0.5).abs() < 1e-10 && (re[2] + 0.5).abs() < 1e-10, "{re:?}");
    }
}
