//! Scalar abstraction over `f64` and `Complex64` with a BLAS-style gemm.

use nalgebra::{ComplexField, DMatrix, Dyn, Matrix, RawStorage, RawStorageMut};
use num_complex::Complex64;

pub type Mat = DMatrix<f64>;
pub type CMat = DMatrix<Complex64>;

/// Field types the dense kernels are generic over.
pub trait Scalar: ComplexField<RealField = f64> + Copy + Send + Sync + 'static {
    const IS_COMPLEX: bool;

    fn lift(x: f64) -> Self;

    /// Converts from complex, dropping the imaginary part for real scalars.
    fn from_c64(z: Complex64) -> Self;

    fn to_c64(self) -> Complex64;

    /// `c <- alpha * a * b + beta * c` on raw strided storage.
    ///
    /// # Safety
    /// Pointers and strides must describe valid, non-overlapping `m x k`,
    /// `k x n` and `m x n` arrays.
    #[allow(clippy::too_many_arguments)]
    unsafe fn gemm_raw(
        m: usize,
        k: usize,
        n: usize,
        alpha: Self,
        a: *const Self,
        rsa: isize,
        csa: isize,
        b: *const Self,
        rsb: isize,
        csb: isize,
        beta: Self,
        c: *mut Self,
        rsc: isize,
        csc: isize,
    );
}

impl Scalar for f64 {
    const IS_COMPLEX: bool = false;

    fn lift(x: f64) -> Self {
        x
    }

    fn from_c64(z: Complex64) -> Self {
        z.re
    }

    fn to_c64(self) -> Complex64 {
        Complex64::new(self, 0.0)
    }

    unsafe fn gemm_raw(
        m: usize,
        k: usize,
        n: usize,
        alpha: f64,
        a: *const f64,
        rsa: isize,
        csa: isize,
        b: *const f64,
        rsb: isize,
        csb: isize,
        beta: f64,
        c: *mut f64,
        rsc: isize,
        csc: isize,
    ) {
        matrixmultiply::dgemm(m, k, n, alpha, a, rsa, csa, b, rsb, csb, beta, c, rsc, csc);
    }
}

impl Scalar for Complex64 {
    const IS_COMPLEX: bool = true;

    fn lift(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }

    fn from_c64(z: Complex64) -> Self {
        z
    }

    fn to_c64(self) -> Complex64 {
        self
    }

    unsafe fn gemm_raw(
        m: usize,
        k: usize,
        n: usize,
        alpha: Complex64,
        a: *const Complex64,
        rsa: isize,
        csa: isize,
        b: *const Complex64,
        rsb: isize,
        csb: isize,
        beta: Complex64,
        c: *mut Complex64,
        rsc: isize,
        csc: isize,
    ) {
        use matrixmultiply::CGemmOption::Standard;
        // Complex64 is #[repr(C)] { re, im }, identical in layout to [f64; 2].
        matrixmultiply::zgemm(
            Standard,
            Standard,
            m,
            k,
            n,
            [alpha.re, alpha.im],
            a as *const [f64; 2],
            rsa,
            csa,
            b as *const [f64; 2],
            rsb,
            csb,
            [beta.re, beta.im],
            c as *mut [f64; 2],
            rsc,
            csc,
        );
    }
}

/// Transposition flag for [`gemm`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Op {
    N,
    T,
}

/// `c <- alpha * op(a) * op(b) + beta * c` for any dense storage.
pub fn gemm<T, S1, S2, S3>(alpha: T, a: &Matrix<T, Dyn, Dyn, S1>, ta: Op, b: &Matrix<T, Dyn, Dyn, S2>, tb: Op, beta: T, c: &mut Matrix<T, Dyn, Dyn, S3>)
where
    T: Scalar,
    S1: RawStorage<T, Dyn, Dyn>,
    S2: RawStorage<T, Dyn, Dyn>,
    S3: RawStorageMut<T, Dyn, Dyn>,
{
    let (ar, ac) = a.shape();
    let (rsa, csa) = a.strides();
    let (m, k, rsa, csa) = match ta {
        Op::N => (ar, ac, rsa, csa),
        Op::T => (ac, ar, csa, rsa),
    };
    let (br, bc) = b.shape();
    let (rsb, csb) = b.strides();
    let (kb, n, rsb, csb) = match tb {
        Op::N => (br, bc, rsb, csb),
        Op::T => (bc, br, csb, rsb),
    };
    assert_eq!(k, kb, "gemm: inner dimensions differ");
    assert_eq!(c.shape(), (m, n), "gemm: output shape mismatch");
    if m == 0 || n == 0 {
        return;
    }
    if k == 0 {
        if beta == T::zero() {
            c.fill(T::zero());
        } else {
            c.iter_mut().for_each(|x| *x *= beta);
        }
        return;
    }
    let (rsc, csc) = c.strides();
    // SAFETY: shapes and strides come from live nalgebra storages checked above.
    unsafe {
        T::gemm_raw(
            m,
            k,
            n,
            alpha,
            a.as_ptr(),
            rsa as isize,
            csa as isize,
            b.as_ptr(),
            rsb as isize,
            csb as isize,
            beta,
            c.as_mut_ptr(),
            rsc as isize,
            csc as isize,
        );
    }
}

/// `a * b`.
pub fn mul<T: Scalar>(a: &DMatrix<T>, b: &DMatrix<T>) -> DMatrix<T> {
    let mut c = DMatrix::zeros(a.nrows(), b.ncols());
    gemm(T::one(), a, Op::N, b, Op::N, T::zero(), &mut c);
    c
}

/// `aᵀ * b` (plain transpose, no conjugation).
pub fn mul_tn<T: Scalar>(a: &DMatrix<T>, b: &DMatrix<T>) -> DMatrix<T> {
    let mut c = DMatrix::zeros(a.ncols(), b.ncols());
    gemm(T::one(), a, Op::T, b, Op::N, T::zero(), &mut c);
    c
}

/// `a * bᵀ` (plain transpose, no conjugation).
pub fn mul_nt<T: Scalar>(a: &DMatrix<T>, b: &DMatrix<T>) -> DMatrix<T> {
    let mut c = DMatrix::zeros(a.nrows(), b.nrows());
    gemm(T::one(), a, Op::N, b, Op::T, T::zero(), &mut c);
    c
}

/// `aᴴ * b`.
pub fn mul_hn(a: &CMat, b: &CMat) -> CMat {
    mul_tn(&a.map(|z| z.conj()), b)
}

/// `op(a) * x` for a real `a` and a real or complex `x`.
pub fn real_mul<T: Scalar>(a: &Mat, op: Op, x: &DMatrix<T>) -> DMatrix<T> {
    let rows = if op == Op::N { a.nrows() } else { a.ncols() };
    if !T::IS_COMPLEX {
        let xr = x.map(|v| v.to_c64().re);
        let mut y = Mat::zeros(rows, x.ncols());
        gemm(1.0, a, op, &xr, Op::N, 0.0, &mut y);
        return y.map(T::lift);
    }
    let xc = x.map(|v| v.to_c64());
    let (re, im) = split_complex(&xc);
    let mut yr = Mat::zeros(rows, x.ncols());
    let mut yi = Mat::zeros(rows, x.ncols());
    gemm(1.0, a, op, &re, Op::N, 0.0, &mut yr);
    gemm(1.0, a, op, &im, Op::N, 0.0, &mut yi);
    DMatrix::from_fn(rows, x.ncols(), |i, j| T::from_c64(Complex64::new(yr[(i, j)], yi[(i, j)])))
}

/// Horizontal concatenation.
pub fn hcat<T: Scalar>(blocks: &[&DMatrix<T>]) -> DMatrix<T> {
    let rows = blocks.iter().map(|b| b.nrows()).find(|&r| r > 0).unwrap_or(0);
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let mut at = 0;
    for b in blocks {
        if b.ncols() == 0 {
            continue;
        }
        assert_eq!(b.nrows(), rows, "hcat: row counts differ");
        out.columns_mut(at, b.ncols()).copy_from(*b);
        at += b.ncols();
    }
    out
}

/// Promotes a real matrix to complex.
pub fn to_complex(m: &Mat) -> CMat {
    m.map(|x| Complex64::new(x, 0.0))
}

/// Real and imaginary parts of a complex matrix.
pub fn split_complex(m: &CMat) -> (Mat, Mat) {
    (m.map(|z| z.re), m.map(|z| z.im))
}

/// Largest absolute imaginary part relative to the largest modulus.
pub fn imag_ratio(m: &CMat) -> f64 {
    let big = m.iter().fold(0.0f64, |acc, z| acc.max(z.norm()));
    if big == 0.0 {
        return 0.0;
    }
    m.iter().fold(0.0f64, |acc, z| acc.max(z.im.abs())) / big
}

/// Infinity norm (maximum absolute row sum).
pub fn norm_inf<T: Scalar>(m: &DMatrix<T>) -> f64 {
    (0..m.nrows()).map(|i| m.row(i).iter().map(|x| x.modulus()).sum::<f64>()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gemm_matches_naive_for_all_transpositions() {
        let a = Mat::from_fn(5, 3, |i, j| (i * 3 + j) as f64 - 4.0);
        let b = Mat::from_fn(3, 4, |i, j| (i as f64 + 1.0) / (j as f64 + 2.0));
        let c = mul(&a, &b);
        assert!((&c - &a * &b).norm() < 1e-12);
        let at = a.transpose();
        assert!((mul_tn(&at, &b) - &c).norm() < 1e-12);
        let bt = b.transpose();
        assert!((mul_nt(&a, &bt) - &c).norm() < 1e-12);
    }

    #[test]
    fn complex_gemm_matches_nalgebra() {
        let a = CMat::from_fn(4, 6, |i, j| Complex64::new(i as f64 - j as f64, (i * j) as f64 * 0.5));
        let b = CMat::from_fn(6, 3, |i, j| Complex64::new(1.0 / (1.0 + i as f64 + j as f64), j as f64));
        assert!((mul(&a, &b) - &a * &b).norm() < 1e-12);
        assert!((mul_hn(&a.adjoint(), &b) - &a * &b).norm() < 1e-12);
    }

    #[test]
    fn gemm_on_views_and_empty_inner_dimension() {
        let a = Mat::from_fn(6, 6, |i, j| (i + 2 * j) as f64);
        let mut c = Mat::from_element(2, 2, 7.0);
        gemm(1.0, &a.view((1, 1), (2, 3)), Op::N, &a.view((0, 2), (3, 2)), Op::N, 0.0, &mut c);
        let expect = a.view((1, 1), (2, 3)) * a.view((0, 2), (3, 2));
        assert!((c - expect).norm() < 1e-12);
        let mut d = Mat::from_element(2, 2, 3.0);
        gemm(1.0, &Mat::zeros(2, 0), Op::N, &Mat::zeros(0, 2), Op::N, 2.0, &mut d);
        assert_eq!(d[(0, 0)], 6.0);
    }
}
