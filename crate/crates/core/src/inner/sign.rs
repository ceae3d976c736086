//! Dense solver based on the matrix sign function of the Hamiltonian.

use crate::error::{Error, Result};
use crate::linalg::{mul, mul_nt, norm2, sym_eig_desc, sym_norm2, thin_qr, DenseLu, Mat};
use crate::problem::SolverOptions;

use super::{DefiniteCare, InnerSolveResult};

const MAX_SIGN_ITER: usize = 100;

/// Stabilizing solution of `AᵀXE + EᵀXA - EᵀXBBᵀXE + Q = 0` for dense data.
///
/// The problem is moved to `E = I`, the sign function of the Hamiltonian is
/// computed with determinant-scaled Newton steps, and `X` is read off its
/// stable invariant subspace by least squares.
pub fn sign_care_dense(a: &Mat, e: &Mat, b: &Mat, q: &Mat, tol: f64) -> Result<Mat> {
    let n = a.nrows();
    if n == 0 {
        return Ok(Mat::zeros(0, 0));
    }
    let elu = DenseLu::factor(e.clone())?;
    let ah = elu.solve(a);
    let bh = elu.solve(b);
    let g = mul_nt(&bh, &bh);
    let qs = (q + q.transpose()) * 0.5;
    let mut z = Mat::zeros(2 * n, 2 * n);
    z.view_mut((0, 0), (n, n)).copy_from(&ah);
    z.view_mut((0, n), (n, n)).copy_from(&(-&g));
    z.view_mut((n, 0), (n, n)).copy_from(&(-&qs));
    z.view_mut((n, n), (n, n)).copy_from(&(-ah.transpose()));

    let conv = tol.max(1e-14);
    let mut scaling = true;
    let mut finishing = 0;
    let mut converged = false;
    for it in 0..MAX_SIGN_ITER {
        let lu = DenseLu::factor(z.clone()).map_err(|_| Error::NoStabilizingSolution("Hamiltonian has eigenvalues on the imaginary axis".into()))?;
        let c = if scaling { (lu.log_abs_det() / (2 * n) as f64).exp() } else { 1.0 };
        let zi = lu.inverse();
        let next = (&z / c + zi * c) * 0.5;
        let change = (&next - &z).norm() / next.norm();
        z = next;
        log::debug!("sign step {it}: scale {c:.3e}, relative change {change:.3e}");
        if change < 1e-2 {
            scaling = false;
        }
        if finishing > 0 {
            finishing -= 1;
            if finishing == 0 {
                converged = true;
                break;
            }
        } else if change < conv.sqrt() {
            finishing = 1;
        }
    }
    if !converged {
        return Err(Error::NoStabilizingSolution(format!("sign iteration did not converge in {MAX_SIGN_ITER} steps")));
    }
    let mut lhs = Mat::zeros(2 * n, n);
    lhs.view_mut((0, 0), (n, n)).copy_from(&z.view((0, n), (n, n)));
    lhs.view_mut((n, 0), (n, n)).copy_from(&(z.view((n, n), (n, n)) + Mat::identity(n, n)));
    let mut rhs = Mat::zeros(2 * n, n);
    rhs.view_mut((0, 0), (n, n)).copy_from(&(-(z.view((0, 0), (n, n)) + Mat::identity(n, n))));
    rhs.view_mut((n, 0), (n, n)).copy_from(&(-z.view((n, 0), (n, n))));
    let (qf, rf) = thin_qr(&lhs);
    let qtb = crate::linalg::mul_tn(&qf, &rhs);
    let y = rf.solve_upper_triangular(&qtb).ok_or_else(|| Error::NoStabilizingSolution("stable invariant subspace is not a graph".into()))?;
    let y = (&y + y.transpose()) * 0.5;
    let et = DenseLu::factor(e.transpose())?;
    let x = et.solve(&et.solve(&y).transpose());
    Ok((&x + x.transpose()) * 0.5)
}

/// Factor `Y` with `YYᵀ = X` for a positive semidefinite `X`; eigenvalues
/// below `tol · λ_max` are dropped.
pub fn psd_factor(x: &Mat, tol: f64) -> Result<Mat> {
    psd_factor_with_floor(x, tol, 0.0)
}

/// As [`psd_factor`], also accepting negative eigenvalues down to `-floor`.
fn psd_factor_with_floor(x: &Mat, tol: f64, floor: f64) -> Result<Mat> {
    let (vals, vecs) = sym_eig_desc(x);
    let top = vals.first().copied().unwrap_or(0.0).max(0.0);
    let bottom = vals.last().copied().unwrap_or(0.0);
    if bottom < -(1e-8 * top.max(f64::MIN_POSITIVE) + floor) {
        return Err(Error::NotPositiveSemidefinite { min_eig: bottom });
    }
    let keep = vals.iter().take_while(|&&v| v > tol * top && v > 0.0).count();
    let mut y = vecs.columns(0, keep).into_owned();
    for (j, mut col) in y.column_iter_mut().enumerate() {
        col *= vals[j].sqrt();
    }
    Ok(y)
}

/// Sign-function solve of a [`DefiniteCare`] whose operator is available
/// densely. The factor keeps eigenvalues of `W` above `tol · λ_max`.
pub fn solve_care_dense_sign(care: &DefiniteCare, tol: f64, opts: &SolverOptions) -> Result<InnerSolveResult> {
    let n = care.op.n();
    let (a, e) = care.op.dense_pencil(opts.dense_cap).ok_or(Error::TooLargeForDense { n, cap: opts.dense_cap })?;
    let q = mul_nt(&care.g, &care.g);
    let x = sign_care_dense(&a, &e, care.b, &q, 1e-14)?;
    // Rounding in the invariant subspace is absolute, on the scale
    // ‖A‖ / (‖E‖ ‖BBᵀ‖) where linear and quadratic terms balance.
    let bb = sym_norm2(&mul_nt(care.b, care.b));
    let floor = if bb > 0.0 { 1e3 * f64::EPSILON * norm2(&a) / (norm2(&e) * bb) } else { 0.0 };
    let y = psd_factor_with_floor(&x, tol.min(opts.compression_tol), floor).map_err(|err| match err {
        Error::NotPositiveSemidefinite { min_eig } => Error::NoStabilizingSolution(format!("solution is indefinite (eigenvalue {min_eig:e})")),
        other => other,
    })?;
    let feedback = mul(&crate::linalg::mul_tn(care.b, &x), &e);
    let gnorm = crate::linalg::norm2(&crate::linalg::mul_tn(&care.g, &care.g));
    let residual = if gnorm > 0.0 { super::definite_residual(care, &y) / gnorm } else { 0.0 };
    Ok(InnerSolveResult { factor: y, feedback, iterations: 1, residual, history: vec![residual], report: care.op.report() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_riccati() {
        // 2x - x^2 + 3 = 0 has stabilizing root 3.
        let x =
            sign_care_dense(&Mat::from_element(1, 1, 1.0), &Mat::identity(1, 1), &Mat::from_element(1, 1, 1.0), &Mat::from_element(1, 1, 3.0), 1e-14).unwrap();
        assert!((x[(0, 0)] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn residual_small_with_mass_matrix() {
        let n = 12;
        let a = Mat::from_fn(n, n, |i, j| if i == j { 0.5 - i as f64 * 0.3 } else { ((i * 3 + j * 5) % 7) as f64 * 0.05 });
        let e = Mat::from_fn(n, n, |i, j| if i == j { 2.0 } else { 0.1 / (1.0 + (i as f64 - j as f64).abs()) });
        let b = Mat::from_fn(n, 2, |i, j| ((i + j) % 3) as f64);
        let c = Mat::from_fn(n, 1, |i, _| 1.0 / (1.0 + i as f64));
        let q = &c * c.transpose();
        let x = sign_care_dense(&a, &e, &b, &q, 1e-13).unwrap();
        let res = a.transpose() * &x * &e + e.transpose() * &x * &a - e.transpose() * &x * &b * b.transpose() * &x * &e + &q;
        assert!(res.norm() < 1e-10 * q.norm(), "{}", res.norm());
    }
}
