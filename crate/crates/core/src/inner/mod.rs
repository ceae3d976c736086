//! Definite Riccati equations
//!
//! ```text
//! AᵀWE + EᵀWA - EᵀWBBᵀWE + GGᵀ = 0
//! ```
//!
//! with `A` given as a [`ShiftedOperator`]. Two solvers are provided: the
//! matrix sign function for small dense problems and RADI, a low-rank
//! residual-updating iteration, for everything else. Unstable operators
//! are handled by a Bernoulli feedback that serves as RADI's starting point.

pub mod bernoulli;
pub mod radi;
pub mod shifts;
pub mod sign;
pub mod spectrum;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{hcat, mul, mul_tn, qr::spectral_norm_sym_lowrank, Mat};
use crate::problem::{InnerMethod, SolverOptions};
use crate::shifted::{ShiftedOperator, ShiftedSolveReport};

pub use bernoulli::{bernoulli_feedback, BernoulliFeedback};
pub use radi::solve_care_radi;
pub use sign::{sign_care_dense, solve_care_dense_sign};

/// One definite Riccati equation.
pub struct DefiniteCare<'a> {
    pub op: &'a dyn ShiftedOperator,
    /// Input matrix of the negative quadratic term.
    pub b: &'a Mat,
    /// Factor of the constant term.
    pub g: Mat,
    /// Factor `Y0` of a stabilizing starting guess `Y0 Y0ᵀ` whose residual
    /// is exactly `GGᵀ` (a Bernoulli solution).
    pub initial: Option<Mat>,
}

/// Result of an inner solve.
#[derive(Clone, Debug)]
pub struct InnerSolveResult {
    /// `W ≈ Y Yᵀ`.
    pub factor: Mat,
    /// `K = Bᵀ W E`.
    pub feedback: Mat,
    pub iterations: usize,
    /// `‖R(W)‖₂ / ‖GGᵀ‖₂` as tracked by the solver.
    pub residual: f64,
    pub history: Vec<f64>,
    pub report: ShiftedSolveReport,
}

/// Summary of an inner solve kept in iteration traces.
#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
pub struct InnerStats {
    pub method: String,
    pub iterations: usize,
    pub residual: f64,
    pub rank: usize,
    pub bernoulli_unstable: usize,
    pub shifted: ShiftedSolveReport,
    /// Residual after every inner iteration.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub history: Vec<f64>,
}

/// `‖AᵀYYᵀE + EᵀYYᵀA - EᵀYYᵀBBᵀYYᵀE + GGᵀ‖₂` through the factored form.
pub fn definite_residual(care: &DefiniteCare, y: &Mat) -> f64 {
    let n = care.op.n();
    let r = y.ncols();
    let g = care.g.ncols();
    if r == 0 {
        return if g == 0 { 0.0 } else { crate::linalg::norm2(&mul_tn(&care.g, &care.g)) };
    }
    let ay = care.op.apply_a(y, true);
    let ey = care.op.apply_e(y, true);
    let yb = mul_tn(y, care.b);
    let m = mul(&yb, &yb.transpose());
    let stacked = hcat(&[&ay, &ey, &care.g]);
    let k = 2 * r + g;
    let mut s = Mat::zeros(k, k);
    for i in 0..r {
        s[(i, r + i)] = 1.0;
        s[(r + i, i)] = 1.0;
    }
    s.view_mut((r, r), (r, r)).copy_from(&(-m));
    for i in 0..g {
        s[(2 * r + i, 2 * r + i)] = 1.0;
    }
    debug_assert_eq!(stacked.nrows(), n);
    spectral_norm_sym_lowrank(&stacked, &s)
}

/// Dispatches to the configured inner solver.
pub fn solve_inner(care: &DefiniteCare, method: InnerMethod, tol: f64, opts: &SolverOptions) -> Result<InnerSolveResult> {
    match method {
        InnerMethod::Radi => solve_care_radi(care, tol, opts),
        InnerMethod::Sign => {
            if care.op.n() > opts.dense_cap {
                return Err(Error::TooLargeForDense { n: care.op.n(), cap: opts.dense_cap });
            }
            solve_care_dense_sign(care, tol, opts)
        }
    }
}

/// Solves `S X + X Sᵀ = Q` for small `S` through the Kronecker form.
pub fn small_lyapunov(s: &Mat, q: &Mat) -> Result<Mat> {
    let r = s.nrows();
    let id = Mat::identity(r, r);
    let k = id.kronecker(s) + s.kronecker(&id);
    let rhs = Mat::from_column_slice(r * r, 1, q.as_slice());
    let x = crate::linalg::solve_dense(&k, &rhs).map_err(|_| Error::SingularMatrix { context: "small Lyapunov equation".into() })?;
    let x = Mat::from_column_slice(r, r, x.as_slice());
    Ok((&x + x.transpose()) * 0.5)
}
