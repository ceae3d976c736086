//! Dense Riccati iteration with sign-function inner solves, used as a
//! reference for small problems.

use std::time::Instant;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::inner::sign::sign_care_dense;
use crate::inner::spectrum::dense_left_schur;
use crate::inner::InnerStats;
use crate::linalg::{mul, mul_nt, mul_tn, norm2, pencil_eigenvalues, spectral_abscissa, sym_norm2, Mat};
use crate::problem::{CareProblem, SolverOptions};

use super::metrics::care_residual_dense;
use super::trace::{IterationRecord, IterationTrace};

#[derive(Clone, Debug)]
pub struct DenseRiResult {
    pub x: Mat,
    pub steps: usize,
    pub guard: f64,
    /// `‖R(X)‖₂ / ‖CCᵀ‖₂`.
    pub normalized_residual: f64,
    pub trace: IterationTrace,
}

/// Hautus test: every left eigenvector of `(A, E)` for an eigenvalue in the
/// closed right half plane must see `B`.
pub fn check_stabilizability(a: &Mat, e: &Mat, b: &Mat) -> Result<bool> {
    let schur = dense_left_schur(a, e)?;
    let scale = b.norm().max(f64::MIN_POSITIVE);
    for (k, lambda) in schur.eigenvalues().iter().enumerate() {
        if lambda.re < 0.0 {
            continue;
        }
        let y = schur.eigenvector(k);
        let seen = (0..b.ncols()).map(|j| (0..b.nrows()).fold(Complex64::new(0.0, 0.0), |s, i| s + y[i].conj() * b[(i, j)]).norm()).fold(0.0, f64::max);
        if seen <= 1e-10 * scale {
            return Ok(false);
        }
    }
    Ok(true)
}

pub fn solve_ri_dense(problem: &CareProblem, opts: &SolverOptions) -> Result<DenseRiResult> {
    solve_ri_dense_with(problem, opts, &mut |_, _, _| {})
}

/// Dense iteration; `observer(step, X_{k+1}, W_k)` runs after every step.
///
/// The stabilizability of `(A_k, B2, E)` is tested at step 0 unless
/// `opts.check_stabilizability` says otherwise; the closed loop of the
/// result is verified to be stable.
pub fn solve_ri_dense_with(problem: &CareProblem, opts: &SolverOptions, observer: &mut dyn FnMut(usize, &Mat, &Mat)) -> Result<DenseRiResult> {
    let n = problem.n();
    if n > opts.dense_cap {
        return Err(Error::TooLargeForDense { n, cap: opts.dense_cap });
    }
    let a = problem.a.to_dense();
    let e = problem.dense_e();
    let (b1, b2, c) = (&problem.b1, &problem.b2, &problem.c);
    let cc = sym_norm2(&mul_nt(c, c)).max(f64::MIN_POSITIVE);
    let d = mul_nt(b1, b1) - mul_nt(b2, b2);
    let mut x = Mat::zeros(n, n);
    let mut trace = IterationTrace::default();
    let mut finals: Vec<f64> = Vec::new();
    let mut q = mul_tn(c, c);
    let start = Instant::now();
    for step in 0..opts.max_outer {
        let ak = &a + mul(&d, &mul(&x, &e));
        if opts.check_stabilizability.unwrap_or(step == 0) && !check_stabilizability(&ak, &e, b2)? {
            return Err(Error::NotStabilizable(format!("(A_{step}, B2, E) fails the Hautus test")));
        }
        let w = sign_care_dense(&ak, &e, b2, &q, 1e-14).map_err(|err| Error::InnerSolverFailure { step, source: Box::new(err) })?;
        x += &w;
        let guard = norm2(&mul(&mul_tn(b1, &w), &e));
        let final_res = guard * guard / cc;
        q = care_residual_dense(&a, &e, b1, b2, c, &x);
        let done = guard <= opts.tau;
        let (relative_res, normalized_res) = if opts.metrics_every_step || done {
            let res = sym_norm2(&q);
            let xnorm = sym_norm2(&x);
            (Some(if xnorm > 0.0 { res / xnorm } else { f64::INFINITY }), Some(res / cc))
        } else {
            (None, None)
        };
        trace.push(IterationRecord {
            step,
            guard,
            final_res,
            relative_res,
            normalized_res,
            rank: n,
            increment_rank: n,
            seconds: opts.record_timing.then(|| start.elapsed().as_secs_f64()),
            inner: InnerStats { method: "sign".into(), iterations: 1, ..Default::default() },
        });
        observer(step, &x, &w);
        log::info!("dense step {step}: guard {guard:.3e}, final residual {final_res:.3e}");
        if done {
            let closed = &a + mul(&d, &mul(&x, &e));
            let abscissa = spectral_abscissa(&pencil_eigenvalues(&closed, &e)?);
            if abscissa >= 0.0 {
                return Err(Error::NotStabilizable(format!("closed loop has spectral abscissa {abscissa:.3e}")));
            }
            let normalized_residual = normalized_res.unwrap_or_default();
            return Ok(DenseRiResult { normalized_residual, x, steps: step + 1, guard, trace });
        }
        if !guard.is_finite() || (step >= 2 && final_res > opts.divergence_factor * finals[step - 2]) {
            return Err(Error::NotStabilizable(format!("final residual grew to {final_res:.3e} at step {step}")));
        }
        finals.push(final_res);
    }
    Err(Error::MaxOuterExceeded(opts.max_outer))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hautus_examples() {
        let a = Mat::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        let i = Mat::identity(2, 2);
        assert!(!check_stabilizability(&a, &i, &Mat::from_row_slice(2, 1, &[0.0, 1.0])).unwrap());
        assert!(check_stabilizability(&a, &i, &Mat::from_row_slice(2, 1, &[1.0, 0.0])).unwrap());
        assert!(check_stabilizability(&(-&a * &a), &i, &Mat::zeros(2, 1)).unwrap());
    }
}
