//! Nonsymmetric eigenvalues and eigenvectors of small dense matrices.

use nalgebra::{DVector, Schur};
use num_complex::Complex64;

use super::dense_lu::DenseLu;
use super::scalar::Mat;
use crate::error::{Error, Result};

/// `(Q, T)` of the real Schur form. The QR iteration can stall just above
/// full accuracy on tight eigenvalue clusters, so the deflation threshold
/// is relaxed step by step, ending at `1e-11` relative.
fn decompose(m: &Mat) -> Option<(Mat, Mat)> {
    let n = m.nrows();
    [(f64::EPSILON, 60), (1e-13, 400), (1e-11, 400)].into_iter().find_map(|(eps, sweeps)| {
        let s = Schur::try_new(m.clone(), eps, sweeps * n.max(10));
        if s.is_some() && eps > 1e-13 {
            log::debug!("real Schur form of a {n}x{n} matrix needed deflation threshold {eps:e}");
        }
        s.map(Schur::unpack)
    })
}

/// Real Schur form `M = Q T Qᵀ` together with its diagonal block layout.
#[derive(Clone, Debug)]
pub struct SchurForm {
    pub q: Mat,
    pub t: Mat,
    blocks: Vec<(usize, usize)>,
    values: Vec<Complex64>,
    owner: Vec<usize>,
}

impl SchurForm {
    pub fn new(m: &Mat) -> Result<Self> {
        crate::error::dim_check(m.is_square(), || format!("eig needs a square matrix, got {:?}", m.shape()))?;
        let n = m.nrows();
        if !m.iter().all(|x| x.is_finite()) {
            return Err(Error::InvalidInput("matrix has non-finite entries".into()));
        }
        let (q, t) = decompose(m).ok_or_else(|| Error::NoConvergence(format!("real Schur form of a {n}x{n} matrix")))?;
        let mut blocks = Vec::new();
        let mut values = Vec::with_capacity(n);
        let mut owner = Vec::with_capacity(n);
        let mut i = 0;
        while i < n {
            if i + 1 < n && t[(i + 1, i)] != 0.0 {
                let (a, b, c, d) = (t[(i, i)], t[(i, i + 1)], t[(i + 1, i)], t[(i + 1, i + 1)]);
                let half_tr = 0.5 * (a + d);
                let disc = 0.25 * (a - d) * (a - d) + b * c;
                let root = Complex64::new(disc, 0.0).sqrt();
                values.push(half_tr + root);
                values.push(half_tr - root);
                owner.extend([blocks.len(), blocks.len()]);
                blocks.push((i, 2));
                i += 2;
            } else {
                values.push(Complex64::new(t[(i, i)], 0.0));
                owner.push(blocks.len());
                blocks.push((i, 1));
                i += 1;
            }
        }
        Ok(Self { q, t, blocks, values, owner })
    }

    pub fn eigenvalues(&self) -> &[Complex64] {
        &self.values
    }

    /// Unit-norm right eigenvector for eigenvalue `idx`.
    pub fn eigenvector(&self, idx: usize) -> DVector<Complex64> {
        let t = &self.t;
        let n = t.nrows();
        let lambda = self.values[idx];
        let tnorm = t.iter().fold(0.0f64, |a, x| a.max(x.abs())).max(f64::MIN_POSITIVE);
        let smin = f64::EPSILON * tnorm;
        let guard = |d: Complex64| if d.norm() < smin { Complex64::new(smin, 0.0) } else { d };
        let c = |x: f64| Complex64::new(x, 0.0);
        let mut y = DVector::<Complex64>::zeros(n);
        let b = self.owner[idx];
        let (start, size) = self.blocks[b];
        if size == 1 {
            y[start] = c(1.0);
        } else {
            let (t11, t12, t21, t22) = (t[(start, start)], t[(start, start + 1)], t[(start + 1, start)], t[(start + 1, start + 1)]);
            let first = [c(t12), lambda - t11];
            let second = [lambda - t22, c(t21)];
            let pick = if first[0].norm() + first[1].norm() >= second[0].norm() + second[1].norm() { first } else { second };
            let nrm = (pick[0].norm_sqr() + pick[1].norm_sqr()).sqrt();
            y[start] = pick[0] / nrm;
            y[start + 1] = pick[1] / nrm;
        }
        let end = start + size;
        for &(bs, bsz) in self.blocks[..b].iter().rev() {
            let rhs = |i: usize, y: &DVector<Complex64>| {
                let mut s = Complex64::new(0.0, 0.0);
                for j in bs + bsz..end {
                    s -= y[j] * t[(i, j)];
                }
                s
            };
            if bsz == 1 {
                y[bs] = rhs(bs, &y) / guard(t[(bs, bs)] - lambda);
            } else {
                let (r0, r1) = (rhs(bs, &y), rhs(bs + 1, &y));
                let a = t[(bs, bs)] - lambda;
                let bb = c(t[(bs, bs + 1)]);
                let cc = c(t[(bs + 1, bs)]);
                let d = t[(bs + 1, bs + 1)] - lambda;
                let det = guard(a * d - bb * cc);
                y[bs] = (r0 * d - bb * r1) / det;
                y[bs + 1] = (a * r1 - cc * r0) / det;
            }
        }
        let mut v = DVector::<Complex64>::zeros(n);
        for j in 0..end {
            if y[j] != Complex64::new(0.0, 0.0) {
                for i in 0..n {
                    v[i] += y[j] * self.q[(i, j)];
                }
            }
        }
        let nrm = v.norm();
        if nrm > 0.0 {
            v /= c(nrm);
        }
        v
    }
}

/// All eigenpairs `(λ, v)` of a small dense matrix, `M v = λ v`, in the
/// order they appear on the diagonal of the real Schur form.
pub fn small_dense_eig(m: &Mat) -> Result<Vec<(Complex64, DVector<Complex64>)>> {
    let schur = SchurForm::new(m)?;
    Ok((0..m.nrows()).map(|k| (schur.values[k], schur.eigenvector(k))).collect())
}

/// Eigenvalues of the pencil `λE - A` for nonsingular `E`.
pub fn pencil_eigenvalues(a: &Mat, e: &Mat) -> Result<Vec<Complex64>> {
    let m = DenseLu::factor(e.clone())?.solve(a);
    Ok(SchurForm::new(&m)?.values)
}

/// Largest real part of a set of eigenvalues (`-inf` if empty).
pub fn spectral_abscissa(values: &[Complex64]) -> f64 {
    values.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max)
}

/// `‖M v - λ v‖₂`.
pub fn eigpair_residual(m: &Mat, lambda: Complex64, v: &DVector<Complex64>) -> f64 {
    let mv = m.map(Complex64::from) * v;
    (mv - v * lambda).norm()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check_pairs(m: &Mat) {
        let norm = m.norm().max(1.0);
        for (lambda, v) in small_dense_eig(m).unwrap() {
            assert!((v.norm() - 1.0).abs() < 1e-12);
            let r = eigpair_residual(m, lambda, &v);
            assert!(r <= 1e-10 * norm, "residual {r} for {lambda}");
        }
    }

    #[test]
    fn rotation_has_unit_imaginary_pair() {
        let m = Mat::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        let vals: Vec<_> = small_dense_eig(&m).unwrap().into_iter().map(|p| p.0).collect();
        assert_eq!(vals.len(), 2);
        for v in &vals {
            assert!(v.re.abs() < 1e-14 && (v.im.abs() - 1.0).abs() < 1e-14);
        }
        assert!((vals[0].im + vals[1].im).abs() < 1e-14);
        check_pairs(&m);
    }

    #[test]
    fn companion_matrix_roots() {
        // (x - 1)(x - 2)(x^2 + 1) = x^4 - 3x^3 + 3x^2 - 3x + 2
        let m = Mat::from_row_slice(4, 4, &[3., -3., 3., -2., 1., 0., 0., 0., 0., 1., 0., 0., 0., 0., 1., 0.]);
        let mut vals: Vec<_> = small_dense_eig(&m).unwrap().into_iter().map(|p| p.0).collect();
        vals.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        let expect = [Complex64::new(0., -1.), Complex64::new(0., 1.), Complex64::new(1., 0.), Complex64::new(2., 0.)];
        for (v, e) in vals.iter().zip(expect) {
            assert!((v - e).norm() < 1e-10, "{v} vs {e}");
        }
        check_pairs(&m);
    }

    #[test]
    fn clustered_symmetric_spectrum_converges() {
        let n = 24;
        let q = crate::linalg::thin_qr(&Mat::from_fn(n, n, |i, j| (((i * 37 + j * 11) % 19) as f64 - 9.0) / 7.0 + if i == j { 3.0 } else { 0.0 })).0;
        let target: Vec<f64> = (0..n).map(|i| if i % 2 == 0 { -1.17e9 } else { -1.2e6 }).collect();
        let a = &q * Mat::from_diagonal(&DVector::from_vec(target.clone())) * q.transpose();
        let a = (&a + a.transpose()) * 0.5;
        let mut vals: Vec<f64> = small_dense_eig(&a).unwrap().iter().map(|p| p.0.re).collect();
        vals.sort_by(f64::total_cmp);
        let mut target = target;
        target.sort_by(f64::total_cmp);
        for (v, t) in vals.iter().zip(&target) {
            assert!((v - t).abs() <= 1e-9 * 1.17e9, "{v} vs {t}");
        }
    }

    #[test]
    fn random_matrices_have_small_residuals() {
        for n in [3, 10, 41] {
            let m = Mat::from_fn(n, n, |i, j| (((i * 37 + j * 11) % 19) as f64 - 9.0) / 7.0);
            check_pairs(&m);
        }
    }
}
