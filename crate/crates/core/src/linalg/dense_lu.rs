//! Dense LU factorization with partial pivoting.
//!
//! The general factorization is right-looking and blocked so that the bulk
//! of the work runs through gemm. A second entry point handles matrices whose
//! leading block is upper Hessenberg and whose trailing rows and columns form
//! a dense border; only the structurally nonzero rows compete for the pivot,
//! which keeps the cost quadratic in the Hessenberg dimension.

use nalgebra::DMatrix;

use super::scalar::Scalar;
use crate::error::{Error, Result};
use crate::par;

const NB: usize = 48;

/// `P * M = L * U`, stored LAPACK style: unit `L` below the diagonal, `U` on
/// and above it, and `piv[j]` the row swapped with `j` at step `j`.
#[derive(Clone, Debug)]
pub struct DenseLu<T: Scalar> {
    lu: DMatrix<T>,
    piv: Vec<usize>,
}

/// `c -= a * b` on column-major raw blocks.
///
/// # Safety
/// The three blocks must be valid for the given shapes and `c` must not
/// overlap `a` or `b`.
#[allow(clippy::too_many_arguments)]
unsafe fn gemm_sub<T: Scalar>(m: usize, k: usize, n: usize, a: *const T, lda: usize, b: *const T, ldb: usize, c: *mut T, ldc: usize) {
    if m == 0 || n == 0 || k == 0 {
        return;
    }
    T::gemm_raw(m, k, n, -T::one(), a, 1, lda as isize, b, 1, ldb as isize, T::one(), c, 1, ldc as isize);
}

fn singular_threshold<T: Scalar>(m: &DMatrix<T>) -> Result<f64> {
    let norm = super::scalar::norm_inf(m);
    if m.nrows() > 0 && (norm == 0.0 || !norm.is_finite()) {
        return Err(Error::SingularMatrix { context: format!("LU of a {}x{} matrix with norm {norm}", m.nrows(), m.ncols()) });
    }
    Ok(m.nrows() as f64 * f64::EPSILON * norm)
}

impl<T: Scalar> DenseLu<T> {
    /// Factors a general square matrix.
    pub fn factor(mut m: DMatrix<T>) -> Result<Self> {
        crate::error::dim_check(m.is_square(), || format!("LU needs a square matrix, got {:?}", m.shape()))?;
        let n = m.nrows();
        let thresh = singular_threshold(&m)?;
        let mut piv = vec![0; n];
        let mut k0 = 0;
        while k0 < n {
            let kb = NB.min(n - k0);
            let kend = k0 + kb;
            for j in k0..kend {
                let p = pivot_row(&m, j, j..n);
                if m[(p, j)].modulus() <= thresh {
                    return Err(Error::SingularMatrix { context: format!("zero pivot in column {j} of {n}") });
                }
                piv[j] = p;
                if p != j {
                    m.swap_rows(j, p);
                }
                let data = m.as_mut_slice();
                let inv = T::one() / data[j + j * n];
                for x in &mut data[j + 1 + j * n..(j + 1) * n] {
                    *x *= inv;
                }
                let (head, tail) = data.split_at_mut((j + 1) * n);
                let lcol = &head[j * n..];
                for c in 0..kend - j - 1 {
                    let col = &mut tail[c * n..(c + 1) * n];
                    let t = col[j];
                    if t != T::zero() {
                        for i in j + 1..n {
                            col[i] -= lcol[i] * t;
                        }
                    }
                }
            }
            if kend < n {
                let data = m.as_mut_slice();
                for c in kend..n {
                    for j in k0..kend {
                        let t = data[j + c * n];
                        if t != T::zero() {
                            for i in j + 1..kend {
                                let l = data[i + j * n];
                                data[i + c * n] -= l * t;
                            }
                        }
                    }
                }
                let ptr = data.as_mut_ptr();
                // SAFETY: L21 (rows kend.., cols k0..kend), U12 (rows k0..kend,
                // cols kend..) and A22 (rows kend.., cols kend..) are disjoint.
                unsafe {
                    gemm_sub(n - kend, kb, n - kend, ptr.add(kend + k0 * n), n, ptr.add(k0 + kend * n), n, ptr.add(kend + kend * n), n);
                }
            }
            k0 = kend;
        }
        Ok(Self { lu: m, piv })
    }

    /// Factors a matrix whose leading `n_hess x n_hess` block is upper
    /// Hessenberg; the remaining rows and columns may be dense.
    pub fn factor_bordered_hessenberg(mut m: DMatrix<T>, n_hess: usize) -> Result<Self> {
        crate::error::dim_check(m.is_square() && n_hess <= m.nrows(), || format!("bordered Hessenberg LU: shape {:?}, block {n_hess}", m.shape()))?;
        let n = m.nrows();
        let thresh = singular_threshold(&m)?;
        let mut piv = vec![0; n];
        let mut cand: Vec<usize> = Vec::with_capacity(n - n_hess + 2);
        for j in 0..n {
            cand.clear();
            if j < n_hess {
                cand.push(j);
                if j + 1 < n_hess {
                    cand.push(j + 1);
                }
                cand.extend(n_hess..n);
            } else {
                cand.extend(j..n);
            }
            let p = pivot_row(&m, j, cand.iter().copied());
            if m[(p, j)].modulus() <= thresh {
                return Err(Error::SingularMatrix { context: format!("zero pivot in column {j} of {n}") });
            }
            piv[j] = p;
            if p != j {
                m.swap_rows(j, p);
            }
            let data = m.as_mut_slice();
            let inv = T::one() / data[j + j * n];
            cand.retain(|&r| r != j);
            for &r in &cand {
                data[r + j * n] *= inv;
            }
            for c in j + 1..n {
                let t = data[j + c * n];
                if t != T::zero() {
                    for &r in &cand {
                        let l = data[r + j * n];
                        data[r + c * n] -= l * t;
                    }
                }
            }
        }
        Ok(Self { lu: m, piv })
    }

    pub fn dim(&self) -> usize {
        self.lu.nrows()
    }

    /// `log |det M|`.
    pub fn log_abs_det(&self) -> f64 {
        (0..self.dim()).map(|i| self.lu[(i, i)].modulus().ln()).sum()
    }

    /// Solves `M X = B`.
    pub fn solve(&self, b: &DMatrix<T>) -> DMatrix<T> {
        let mut x = b.clone();
        self.solve_in_place(&mut x);
        x
    }

    pub fn solve_in_place(&self, b: &mut DMatrix<T>) {
        let n = self.dim();
        assert_eq!(b.nrows(), n, "LU solve: row mismatch");
        let nrhs = b.ncols();
        if n == 0 || nrhs == 0 {
            return;
        }
        for (j, &p) in self.piv.iter().enumerate() {
            if p != j {
                b.swap_rows(j, p);
            }
        }
        self.lower_solve(b.as_mut_slice(), 0);
        self.upper_solve(b.as_mut_slice(), nrhs);
    }

    /// Forward substitution with unit `L` on column-major `bd` (leading
    /// dimension `n`), whose rows above `start` are zero.
    fn lower_solve(&self, bd: &mut [T], start: usize) {
        let n = self.dim();
        let nrhs = bd.len() / n;
        let lu = self.lu.as_slice();
        let mut k0 = start;
        while k0 < n {
            let kend = (k0 + NB).min(n);
            for col in bd.chunks_mut(n) {
                for j in k0..kend {
                    let t = col[j];
                    if t != T::zero() {
                        for i in j + 1..kend {
                            col[i] -= lu[i + j * n] * t;
                        }
                    }
                }
            }
            let ptr = bd.as_mut_ptr();
            // SAFETY: rows kend.. and k0..kend of B are disjoint.
            unsafe {
                gemm_sub(n - kend, kend - k0, nrhs, lu.as_ptr().add(kend + k0 * n), n, ptr.add(k0), n, ptr.add(kend), n);
            }
            k0 = kend;
        }
    }

    fn upper_solve(&self, bd: &mut [T], nrhs: usize) {
        let n = self.dim();
        let lu = self.lu.as_slice();
        let mut kend = n;
        while kend > 0 {
            let k0 = kend.saturating_sub(NB);
            for col in bd.chunks_mut(n) {
                for j in (k0..kend).rev() {
                    col[j] /= lu[j + j * n];
                    let t = col[j];
                    if t != T::zero() {
                        for i in k0..j {
                            col[i] -= lu[i + j * n] * t;
                        }
                    }
                }
            }
            let ptr = bd.as_mut_ptr();
            // SAFETY: rows 0..k0 and k0..kend of B are disjoint.
            unsafe {
                gemm_sub(k0, kend - k0, nrhs, lu.as_ptr().add(k0 * n), n, ptr.add(k0), n, ptr, n);
            }
            kend = k0;
        }
    }

    /// Solves `Mᵀ X = B` (plain transpose).
    pub fn solve_transpose(&self, b: &DMatrix<T>) -> DMatrix<T> {
        let n = self.dim();
        assert_eq!(b.nrows(), n, "LU transpose solve: row mismatch");
        let mut x = b.clone();
        let lu = self.lu.as_slice();
        let piv = &self.piv;
        par::for_each_column(x.as_mut_slice(), n, |_, col| {
            for i in 0..n {
                let u = &lu[i * n..i * n + i];
                let mut s = col[i];
                for (k, &uk) in u.iter().enumerate() {
                    s -= uk * col[k];
                }
                col[i] = s / lu[i + i * n];
            }
            for i in (0..n).rev() {
                let l = &lu[i * n + i + 1..(i + 1) * n];
                let mut s = col[i];
                for (k, &lk) in l.iter().enumerate() {
                    s -= lk * col[i + 1 + k];
                }
                col[i] = s;
            }
            for j in (0..n).rev() {
                col.swap(j, piv[j]);
            }
        });
        x
    }

    /// `M⁻¹ = U⁻¹ L⁻¹ P`, skipping the zero upper part of `L⁻¹`.
    pub fn inverse(&self) -> DMatrix<T> {
        let n = self.dim();
        let mut x = DMatrix::identity(n, n);
        let bd = x.as_mut_slice();
        for c0 in (0..n).step_by(NB) {
            let c1 = (c0 + NB).min(n);
            self.lower_solve(&mut bd[c0 * n..c1 * n], c0);
        }
        self.upper_solve(bd, n);
        for (j, &p) in self.piv.iter().enumerate().rev() {
            if p != j {
                x.swap_columns(j, p);
            }
        }
        x
    }
}

fn pivot_row<T: Scalar>(m: &DMatrix<T>, col: usize, rows: impl Iterator<Item = usize>) -> usize {
    let mut best = (col, -1.0);
    for r in rows {
        let v = m[(r, col)].modulus();
        if v > best.1 {
            best = (r, v);
        }
    }
    best.0
}

/// Solves `A X = B` with a fresh factorization.
pub fn solve_dense<T: Scalar>(a: &DMatrix<T>, b: &DMatrix<T>) -> Result<DMatrix<T>> {
    Ok(DenseLu::factor(a.clone())?.solve(b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn test_matrix(n: usize) -> DMatrix<f64> {
        DMatrix::from_fn(n, n, |i, j| {
            let x = ((i * 7 + j * 13) % 17) as f64 / 17.0 - 0.5;
            if i == j {
                x + 0.1
            } else {
                x
            }
        })
    }

    #[test]
    fn solves_across_block_boundaries() {
        for n in [1, 5, 47, 48, 49, 130] {
            let a = test_matrix(n);
            let b = DMatrix::from_fn(n, 3, |i, j| (i + j) as f64);
            let lu = DenseLu::factor(a.clone()).unwrap();
            let x = lu.solve(&b);
            assert!((&a * &x - &b).norm() <= 1e-10 * b.norm(), "n = {n}");
            let y = lu.solve_transpose(&b);
            assert!((a.transpose() * &y - &b).norm() <= 1e-10 * b.norm(), "n = {n}");
            let inv = lu.inverse();
            assert!((&a * &inv - DMatrix::identity(n, n)).norm() <= 1e-10 * n as f64, "n = {n}");
        }
    }

    #[test]
    fn inverse_of_complex_matrix() {
        let n = 60;
        let a = DMatrix::from_fn(n, n, |i, j| Complex64::new(test_matrix(n)[(i, j)], if i == j { 1.0 } else { 0.01 * (i as f64 - j as f64) }));
        let inv = DenseLu::factor(a.clone()).unwrap().inverse();
        let err = (&a * inv - DMatrix::<Complex64>::identity(n, n)).norm();
        assert!(err < 1e-10);
    }

    #[test]
    fn singular_matrix_is_reported() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(matches!(DenseLu::factor(a), Err(Error::SingularMatrix { .. })));
    }

    #[test]
    fn bordered_hessenberg_matches_general() {
        let n = 40;
        let w = 3;
        let mut m = DMatrix::from_fn(n + w, n + w, |i, j| Complex64::new(((i * 5 + j * 3) % 11) as f64 - 5.0, ((i + 2 * j) % 7) as f64 * 0.1));
        for j in 0..n {
            for i in j + 2..n {
                m[(i, j)] = Complex64::new(0.0, 0.0);
            }
        }
        for i in n..n + w {
            for j in n..n + w {
                m[(i, j)] = if i == j { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) };
            }
        }
        let b = DMatrix::from_fn(n + w, 2, |i, j| Complex64::new(i as f64, j as f64));
        let lu = DenseLu::factor_bordered_hessenberg(m.clone(), n).unwrap();
        let x = lu.solve(&b);
        assert!((&m * &x - &b).norm() < 1e-9 * b.norm());
        let y = lu.solve_transpose(&b);
        assert!((m.transpose() * &y - &b).norm() < 1e-9 * b.norm());
    }
}
