//! Shifted linear systems `(σEᵀ - A_kᵀ - P Qᵀ) X = F` where `A_k` is a
//! sparse or dense matrix plus a low-rank term.
//!
//! Two strategies are available: factor the bordered matrix
//! `[[Φ, L], [Rᵀ, I]]` directly, or factor `Φ = σEᵀ - Aᵀ` alone and apply
//! the Sherman–Morrison–Woodbury formula. Factorizations of `Φ` are cached
//! per shift and shared by every operator built on the same coefficients.

mod cache;
pub mod dae2;
pub mod standard;

use std::sync::atomic::{AtomicUsize, Ordering};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{mul_tn, CMat, DenseLu, Mat, Scalar};

pub use dae2::{apply_pi, apply_pi_transpose, Dae2Base, Dae2Operator};
pub use standard::{DenseForm, SparsePlusLowRank, StandardBase};

/// Extra real low-rank term `P Qᵀ` subtracted from the shifted matrix.
#[derive(Clone, Debug)]
pub struct LowRankUpdate {
    pub p: Mat,
    pub q: Mat,
}

impl LowRankUpdate {
    pub fn width(&self) -> usize {
        self.p.ncols()
    }
}

/// Counters for the shifted solves performed by one operator.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShiftedSolveReport {
    /// Number of calls, each a block of right-hand sides.
    pub solves: usize,
    /// Total number of right-hand-side columns.
    pub rhs_columns: usize,
    pub factorizations: usize,
    pub cache_hits: usize,
}

impl ShiftedSolveReport {
    pub fn merge(&mut self, other: &Self) {
        self.solves += other.solves;
        self.rhs_columns += other.rhs_columns;
        self.factorizations += other.factorizations;
        self.cache_hits += other.cache_hits;
    }
}

#[derive(Debug, Default)]
pub(crate) struct Counters {
    solves: AtomicUsize,
    rhs: AtomicUsize,
    factorizations: AtomicUsize,
    hits: AtomicUsize,
}

impl Counters {
    pub(crate) fn solve(&self, cols: usize) {
        self.solves.fetch_add(1, Ordering::Relaxed);
        self.rhs.fetch_add(cols, Ordering::Relaxed);
    }

    pub(crate) fn factorization(&self) {
        self.factorizations.fetch_add(1, Ordering::Relaxed);
    }

    pub(crate) fn hit(&self) {
        self.hits.fetch_add(1, Ordering::Relaxed);
    }

    pub(crate) fn snapshot(&self) -> ShiftedSolveReport {
        ShiftedSolveReport {
            solves: self.solves.load(Ordering::Relaxed),
            rhs_columns: self.rhs.load(Ordering::Relaxed),
            factorizations: self.factorizations.load(Ordering::Relaxed),
            cache_hits: self.hits.load(Ordering::Relaxed),
        }
    }
}

/// The pencil `(A_k, E)` of one outer step with its shifted solver.
pub trait ShiftedOperator: Sync {
    fn n(&self) -> usize;

    /// `A_k X`, or `A_kᵀ X` when `transpose` is set.
    fn apply_a(&self, x: &Mat, transpose: bool) -> Mat;

    /// `E X`, or `Eᵀ X` when `transpose` is set.
    fn apply_e(&self, x: &Mat, transpose: bool) -> Mat;

    /// Solves `(σEᵀ - A_kᵀ - P Qᵀ) X = F`.
    fn solve(&self, sigma: Complex64, f: &CMat, extra: Option<&LowRankUpdate>) -> Result<CMat>;

    /// Dense `(A_k, E)` when the problem is small enough.
    fn dense_pencil(&self, cap: usize) -> Option<(Mat, Mat)>;

    /// Projects a right-hand side onto the subspace on which solves are
    /// defined (the identity for standard problems).
    fn restrict(&self, f: &Mat) -> Result<Mat> {
        Ok(f.clone())
    }

    fn report(&self) -> ShiftedSolveReport;

    /// `‖(σEᵀ - A_kᵀ - P Qᵀ) X - F‖_F / ‖F‖_F`.
    fn relative_residual(&self, sigma: Complex64, x: &CMat, f: &CMat, extra: Option<&LowRankUpdate>) -> f64 {
        let (xr, xi) = crate::linalg::scalar::split_complex(x);
        let lhs = |v: &Mat| {
            let mut y = -self.apply_a(v, true);
            if let Some(u) = extra {
                y -= &u.p * mul_tn(&u.q, v);
            }
            (self.apply_e(v, true), y)
        };
        let (er, ar) = lhs(&xr);
        let (ei, ai) = lhs(&xi);
        let res = DMatrix::from_fn(x.nrows(), x.ncols(), |i, j| {
            let ex = Complex64::new(er[(i, j)], ei[(i, j)]);
            sigma * ex + Complex64::new(ar[(i, j)], ai[(i, j)]) - f[(i, j)]
        });
        res.norm() / f.norm().max(f64::MIN_POSITIVE)
    }
}

/// Applies SMW: `X = Z1 + Z2 (I - RᵀZ2)⁻¹ Rᵀ Z1` where `Φ Z1 = F`, `Φ Z2 = L`.
pub(crate) fn smw_correct<T: Scalar>(sigma: Complex64, z1: DMatrix<T>, z2: &DMatrix<T>, r: &Mat) -> Result<DMatrix<T>> {
    if z2.ncols() == 0 {
        return Ok(z1);
    }
    let rt = r.map(T::lift);
    let w = z2.ncols();
    let cap = DMatrix::<T>::identity(w, w) - mul_tn(&rt, z2);
    let lu = DenseLu::factor(cap).map_err(|_| Error::ShiftedSystemSingular { shift: sigma })?;
    let corr = lu.solve(&mul_tn(&rt, &z1));
    Ok(z1 + crate::linalg::mul(z2, &corr))
}

/// Runs a solver generic in the scalar type: real arithmetic for real
/// shifts (real and imaginary parts of `F` side by side), complex otherwise.
pub(crate) fn dispatch_scalar(
    sigma: Complex64,
    f: &CMat,
    real: impl FnOnce(f64, &Mat) -> Result<Mat>,
    complex: impl FnOnce(Complex64, &CMat) -> Result<CMat>,
) -> Result<CMat> {
    if sigma.im != 0.0 {
        return complex(sigma, f);
    }
    let (re, im) = crate::linalg::scalar::split_complex(f);
    let has_im = im.iter().any(|&x| x != 0.0);
    let stacked = if has_im { crate::linalg::hcat(&[&re, &im]) } else { re };
    let x = real(sigma.re, &stacked)?;
    let k = f.ncols();
    Ok(DMatrix::from_fn(f.nrows(), k, |i, j| Complex64::new(x[(i, j)], if has_im { x[(i, j + k)] } else { 0.0 })))
}

/// Joins the operator's own update `V Uᵀ` with an optional extra `P Qᵀ`.
pub(crate) fn combined_update(v: &Mat, u: &Mat, extra: Option<&LowRankUpdate>) -> (Mat, Mat) {
    match extra {
        Some(x) => (crate::linalg::hcat(&[v, &x.p]), crate::linalg::hcat(&[u, &x.q])),
        None => (v.clone(), u.clone()),
    }
}

pub(crate) fn singular_at(sigma: Complex64) -> impl Fn(Error) -> Error {
    move |e| match e {
        Error::SingularMatrix { .. } => Error::ShiftedSystemSingular { shift: sigma },
        other => other,
    }
}

pub(crate) use cache::FactorCache;
