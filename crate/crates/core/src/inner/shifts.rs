//! Shift selection for RADI.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{mul, mul_tn, small_dense_eig, sym_eig_desc, thin_qr, DenseLu, Mat};
use crate::problem::ShiftStrategy;
use crate::shifted::ShiftedOperator;

/// Orthonormal basis of the range of `m`, dropping directions whose
/// squared singular value is below `tol` relative to the largest.
pub(crate) fn orthonormal_basis(m: &Mat, tol: f64) -> Mat {
    let (vals, vecs) = sym_eig_desc(&mul_tn(m, m));
    let top = vals.first().copied().unwrap_or(0.0);
    let keep = vals.iter().take_while(|&&v| v > tol * top && v > 0.0).count();
    if keep == 0 {
        return Mat::zeros(m.nrows(), 0);
    }
    thin_qr(&mul(m, &vecs.columns(0, keep).into_owned())).0
}

/// State of the current RADI iterate that shift strategies look at.
pub(crate) struct ShiftContext<'a> {
    pub op: &'a dyn ShiftedOperator,
    pub b: &'a Mat,
    /// Transposed feedback `Kᵀ`.
    pub kt: &'a Mat,
    pub residual: &'a Mat,
    /// Real basis of the latest solution block.
    pub last: Option<&'a Mat>,
}

/// Closed-loop pencil and residual projected onto `span(basis)`:
/// `(Qᵀ(A_k - BK)Q, QᵀEQ, QᵀB, QᵀR)`.
struct Projected {
    a: Mat,
    e: Mat,
    b: Mat,
    r: Mat,
}

fn project(ctx: &ShiftContext, basis: &Mat) -> Option<Projected> {
    let q = orthonormal_basis(basis, 1e-12);
    if q.ncols() == 0 {
        return None;
    }
    let at_q = ctx.op.apply_a(&q, true);
    let qb = mul_tn(&q, ctx.b);
    let kq = mul_tn(ctx.kt, &q);
    let a = mul_tn(&at_q, &q) - mul(&qb, &kq);
    let e = mul_tn(&ctx.op.apply_e(&q, true), &q);
    let r = mul_tn(&q, ctx.residual);
    Some(Projected { a, e, b: qb, r })
}

fn hamiltonian_shift(p: &Projected) -> Option<Complex64> {
    let k = p.a.nrows();
    let lu = DenseLu::factor(p.e.clone()).ok()?;
    let a = lu.solve(&p.a);
    let b = lu.solve(&p.b);
    let mut h = Mat::zeros(2 * k, 2 * k);
    h.view_mut((0, 0), (k, k)).copy_from(&a);
    h.view_mut((0, k), (k, k)).copy_from(&(-(&b * b.transpose())));
    h.view_mut((k, 0), (k, k)).copy_from(&(-(&p.r * p.r.transpose())));
    h.view_mut((k, k), (k, k)).copy_from(&(-a.transpose()));
    let pairs = small_dense_eig(&h).ok()?;
    pairs
        .iter()
        .filter(|(l, _)| l.re < 0.0 && l.is_finite())
        .map(|(l, v)| (*l, v.rows(k, k).norm()))
        .max_by(|x, y| x.1.total_cmp(&y.1).then(y.0.im.total_cmp(&x.0.im)))
        .map(|(l, _)| if l.im.abs() <= 1e-12 * l.re.abs() { Complex64::new(l.re, 0.0) } else { Complex64::new(l.re, l.im.abs()) })
}

fn mirrored_ritz(p: &Projected) -> Vec<Complex64> {
    let Ok(lu) = DenseLu::factor(p.e.clone()) else {
        return Vec::new();
    };
    let Ok(pairs) = small_dense_eig(&lu.solve(&p.a)) else {
        return Vec::new();
    };
    let mut out: Vec<Complex64> = pairs
        .into_iter()
        .map(|(l, _)| l)
        .filter(|l| l.is_finite() && l.im >= 0.0 && l.norm() > 0.0)
        .map(|l| {
            let re = -l.re.abs().max(1e-8 * l.norm());
            let im = if l.im <= 1e-12 * l.re.abs() { 0.0 } else { l.im };
            Complex64::new(re, im)
        })
        .collect();
    out.sort_by(|x, y| y.norm().total_cmp(&x.norm()).then(x.im.total_cmp(&y.im)));
    out
}

/// Produces one shift `σ` with `Re σ < 0` per RADI step. Complex shifts
/// stand for a conjugate pair.
pub(crate) struct ShiftSelector {
    strategy: ShiftStrategy,
    queue: Vec<Complex64>,
    cursor: usize,
    previous: Option<Complex64>,
}

impl ShiftSelector {
    pub(crate) fn new(strategy: &ShiftStrategy) -> Result<Self> {
        if let ShiftStrategy::Fixed(list) = strategy {
            if list.is_empty() || list.iter().any(|s| !(s.re < 0.0) || !s.is_finite()) {
                return Err(Error::InvalidInput("fixed shifts must be finite with negative real part".into()));
            }
        }
        Ok(Self { strategy: strategy.clone(), queue: Vec::new(), cursor: 0, previous: None })
    }

    pub(crate) fn next(&mut self, ctx: &ShiftContext) -> Result<Complex64> {
        let shift = match &self.strategy {
            ShiftStrategy::Fixed(list) => {
                let mut s = list[self.cursor % list.len()];
                if let Some(prev) = self.previous {
                    if prev.im != 0.0 && s == prev.conj() {
                        self.cursor += 1;
                        s = list[self.cursor % list.len()];
                    }
                }
                self.cursor += 1;
                if s.im < 0.0 {
                    s = s.conj();
                }
                s
            }
            ShiftStrategy::Hamiltonian => {
                let from = |basis: &Mat| {
                    let p = project(ctx, basis)?;
                    hamiltonian_shift(&p).or_else(|| mirrored_ritz(&p).first().copied())
                };
                ctx.last.and_then(from).or_else(|| from(ctx.residual)).or(self.previous).ok_or_else(no_shift)?
            }
            ShiftStrategy::Projection => {
                if self.cursor >= self.queue.len() {
                    let basis = ctx.last.unwrap_or(ctx.residual);
                    self.queue = project(ctx, basis).as_ref().map(mirrored_ritz).unwrap_or_default();
                    self.cursor = 0;
                    if self.queue.is_empty() {
                        return Err(no_shift());
                    }
                }
                self.cursor += 1;
                self.queue[self.cursor - 1]
            }
        };
        self.previous = Some(shift);
        Ok(shift)
    }
}

fn no_shift() -> Error {
    Error::ShiftFailure("projected pencil yields no shift in the open left half plane".into())
}
