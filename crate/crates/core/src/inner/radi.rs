//! RADI: a low-rank iteration that updates the residual factor directly.
//!
//! Each step solves one shifted system `(A_effᵀ + σEᵀ) V = R` with the
//! current closed-loop matrix `A_eff = A_k - B K`, then adds the update
//! `W Y Wᵀ` on the real span `W` of `V` that keeps the new residual of the
//! form `R_new R_newᵀ`. A complex shift covers its conjugate as well, so all
//! stored quantities stay real.

use std::collections::VecDeque;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{compress_factor, hcat, mul, mul_tn, norm2, Mat};
use crate::problem::SolverOptions;
use crate::shifted::LowRankUpdate;

use super::shifts::{ShiftContext, ShiftSelector};
use super::sign::psd_factor;
use super::{small_lyapunov, DefiniteCare, InnerSolveResult};

/// Minimum number of recent update columns the shift selector projects onto.
const SHIFT_BASIS_COLUMNS: usize = 2;
/// Cap for the basis, which doubles after every slow step.
const MAX_SHIFT_BASIS_COLUMNS: usize = 8;
/// A step is slow if it keeps more than this fraction of the residual norm,
/// and fast if it keeps less than `FAST_STEP`.
const SLOW_STEP: f64 = 0.9;
const FAST_STEP: f64 = 0.1;

/// Runs RADI until `‖R Rᵀ‖₂ ≤ tol · ‖G Gᵀ‖₂`.
pub fn solve_care_radi(care: &DefiniteCare, tol: f64, opts: &SolverOptions) -> Result<InnerSolveResult> {
    let op = care.op;
    let n = op.n();
    let m = care.b.ncols();
    let mut blocks: Vec<Mat> = Vec::new();
    let mut kt = Mat::zeros(n, m);
    if let Some(y0) = &care.initial {
        if y0.ncols() > 0 {
            kt = mul(&op.apply_e(y0, true), &mul_tn(y0, care.b));
            blocks.push(y0.clone());
        }
    }
    let gnorm = norm2(&mul_tn(&care.g, &care.g));
    let mut residual = care.g.clone();
    let mut res = if gnorm > 0.0 { 1.0 } else { 0.0 };
    let mut history = vec![res];
    let mut selector = ShiftSelector::new(&opts.shifts)?;
    let mut recent: VecDeque<Mat> = VecDeque::new();
    let mut basis_cols = SHIFT_BASIS_COLUMNS;
    let mut best = res;
    let mut since_best = 0;
    let mut iterations = 0;

    while res > tol {
        if iterations >= opts.inner_max_iter || since_best >= opts.stagnation_window {
            return Err(Error::StagnationNoConvergence { iterations, residual: res });
        }
        let last = (!recent.is_empty()).then(|| hcat(&recent.iter().collect::<Vec<_>>()));
        let before = res;
        let sigma = selector.next(&ShiftContext { op, b: care.b, kt: &kt, residual: &residual, last: last.as_ref() })?;
        let extra = LowRankUpdate { p: -&kt, q: care.b.clone() };
        let v = op.solve(-sigma, &residual.map(Complex64::from), Some(&extra))?;
        let r = residual.ncols();
        let real_shift = sigma.im == 0.0;
        let (w, s, gamma) = if real_shift {
            (v.map(|z| -z.re), Mat::identity(r, r) * sigma.re, Mat::identity(r, r))
        } else {
            let w = hcat(&[&v.map(|z| -z.re), &v.map(|z| -z.im)]);
            let mut s = Mat::zeros(2 * r, 2 * r);
            let mut gamma = Mat::zeros(r, 2 * r);
            for i in 0..r {
                s[(i, i)] = sigma.re;
                s[(r + i, r + i)] = sigma.re;
                s[(i, r + i)] = sigma.im;
                s[(r + i, i)] = -sigma.im;
                gamma[(i, i)] = 1.0;
            }
            (w, s, gamma)
        };
        let wb = mul_tn(&w, care.b);
        let q = -(mul_tn(&gamma, &gamma) + &wb * wb.transpose());
        let p = if real_shift { q / (2.0 * sigma.re) } else { small_lyapunov(&s.transpose(), &q)? };
        let y = crate::linalg::solve_dense(&p, &Mat::identity(p.nrows(), p.nrows())).map_err(|_| Error::ShiftedSystemSingular { shift: sigma })?;
        let y = (&y + y.transpose()) * 0.5;
        let et_w = op.apply_e(&w, true);
        let et_wy = mul(&et_w, &y);
        residual += mul(&et_wy, &gamma.transpose());
        kt += mul(&et_wy, &wb);
        blocks.push(mul(&w, &psd_factor(&y, 1e-15)?));
        iterations += 1;

        res = if gnorm > 0.0 { norm2(&mul_tn(&residual, &residual)) / gnorm } else { 0.0 };
        if !res.is_finite() {
            return Err(Error::Diverged(format!("RADI residual became {res} at step {iterations}")));
        }
        history.push(res);
        log::trace!("RADI step {iterations}: shift {sigma}, residual {res:.3e}");
        if res < best {
            best = res;
            since_best = 0;
        } else {
            since_best += 1;
        }
        if res > SLOW_STEP * before {
            basis_cols = (2 * basis_cols).min(MAX_SHIFT_BASIS_COLUMNS);
        } else if res < FAST_STEP * before {
            basis_cols = (basis_cols / 2).max(SHIFT_BASIS_COLUMNS);
        }
        recent.push_back(w);
        let mut cols: usize = recent.iter().map(|m| m.ncols()).sum();
        while recent.len() > 1 && cols - recent[0].ncols() >= basis_cols {
            cols -= recent[0].ncols();
            recent.pop_front();
        }
    }

    let refs: Vec<&Mat> = blocks.iter().collect();
    let factor = if refs.is_empty() { Mat::zeros(n, 0) } else { compress_factor(&hcat(&refs), opts.compression_tol) };
    Ok(InnerSolveResult { factor, feedback: kt.transpose(), iterations, residual: res, history, report: op.report() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inner::{definite_residual, sign::sign_care_dense};
    use crate::linalg::mul_nt;
    use crate::problem::{ShiftStrategy, SolveStrategy};
    use crate::shifted::{DenseForm, SparsePlusLowRank, StandardBase};
    use std::sync::Arc;

    fn setup(n: usize) -> (Mat, Mat, Mat, Mat) {
        let a = Mat::from_fn(n, n, |i, j| {
            if i == j {
                -2.0 - 0.1 * i as f64
            } else if j == i + 1 {
                1.5
            } else if i == j + 1 {
                -1.0
            } else {
                0.0
            }
        });
        let e = Mat::from_fn(n, n, |i, j| {
            if i == j {
                1.0
            } else if i.abs_diff(j) == 1 {
                0.2
            } else {
                0.0
            }
        });
        let b = Mat::from_fn(n, 2, |i, j| ((i * (j + 2)) % 5) as f64 * 0.3);
        let g = Mat::from_fn(n, 2, |i, j| if (i + j) % 4 == 0 { 1.0 } else { 0.1 });
        (a, e, b, g)
    }

    fn run(strategy: ShiftStrategy) {
        let n = 40;
        let (a, e, b, g) = setup(n);
        let base = Arc::new(StandardBase::dense(DenseForm::General { a: a.clone(), e: e.clone() }));
        let op = SparsePlusLowRank::new(base, Mat::zeros(n, 0), Mat::zeros(n, 0), SolveStrategy::Augmented).unwrap();
        let care = DefiniteCare { op: &op, b: &b, g: g.clone(), initial: None };
        let opts = SolverOptions { shifts: strategy, ..Default::default() };
        let out = solve_care_radi(&care, 1e-12, &opts).unwrap();
        let x = sign_care_dense(&a, &e, &b, &mul_nt(&g, &g), 1e-14).unwrap();
        let xz = mul_nt(&out.factor, &out.factor);
        assert!((&xz - &x).norm() <= 1e-9 * x.norm(), "{}", (&xz - &x).norm() / x.norm());
        let explicit = definite_residual(&care, &out.factor) / norm2(&mul_tn(&g, &g));
        assert!(explicit < 1e-10, "{explicit}");
        let k = mul(&mul_tn(&b, &x), &e);
        assert!((&out.feedback - &k).norm() <= 1e-9 * k.norm());
    }

    #[test]
    fn hamiltonian_shifts_match_sign_solver() {
        run(ShiftStrategy::Hamiltonian);
    }

    #[test]
    fn projection_shifts_match_sign_solver() {
        run(ShiftStrategy::Projection);
    }

    #[test]
    fn fixed_complex_shifts_match_sign_solver() {
        run(ShiftStrategy::Fixed(vec![Complex64::new(-1.0, 1.0), Complex64::new(-1.0, -1.0), Complex64::new(-3.0, 0.0), Complex64::new(-0.5, 0.0)]));
    }
}
