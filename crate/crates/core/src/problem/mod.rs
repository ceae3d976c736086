//! Problem descriptions, solver options, generators and file loading.

pub mod generators;
pub mod manifest;
pub mod options;

use nalgebra::DMatrix;

use crate::error::{dim_check, Result};
use crate::linalg::scalar::real_mul;
use crate::linalg::{Mat, Op, Scalar, SparseMatrix};

pub use generators::{gen_heat_fd, gen_random_care, gen_stokes_dae2, StokesOptions};
pub use manifest::{load_problem, save_problem, ProblemManifest};
pub use options::{InnerMethod, ShiftStrategy, SolveStrategy, SolverOptions};

/// A coefficient matrix stored densely or sparsely.
#[derive(Clone, Debug)]
pub enum Coeff {
    Dense(Mat),
    Sparse(SparseMatrix),
}

impl Coeff {
    pub fn shape(&self) -> (usize, usize) {
        match self {
            Coeff::Dense(m) => m.shape(),
            Coeff::Sparse(s) => s.shape(),
        }
    }

    /// `M X`.
    pub fn mul<T: Scalar>(&self, x: &DMatrix<T>) -> DMatrix<T> {
        match self {
            Coeff::Dense(m) => real_mul(m, Op::N, x),
            Coeff::Sparse(s) => s.mul_dense(x),
        }
    }

    /// `Mᵀ X`.
    pub fn mul_t<T: Scalar>(&self, x: &DMatrix<T>) -> DMatrix<T> {
        match self {
            Coeff::Dense(m) => real_mul(m, Op::T, x),
            Coeff::Sparse(s) => s.mul_dense_transpose(x),
        }
    }

    pub fn to_dense(&self) -> Mat {
        match self {
            Coeff::Dense(m) => m.clone(),
            Coeff::Sparse(s) => s.to_dense(),
        }
    }

    pub fn to_sparse(&self) -> SparseMatrix {
        match self {
            Coeff::Dense(m) => SparseMatrix::from_dense(m, 0.0),
            Coeff::Sparse(s) => s.clone(),
        }
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self, Coeff::Sparse(_))
    }
}

/// `AᵀXE + EᵀXA + EᵀX(B1B1ᵀ - B2B2ᵀ)XE + CᵀC = 0`.
///
/// `b1` already carries the `1/γ` scaling; `gamma` is kept for reporting.
/// `e = None` stands for the identity.
#[derive(Clone, Debug)]
pub struct CareProblem {
    pub a: Coeff,
    pub e: Option<Coeff>,
    pub b1: Mat,
    pub b2: Mat,
    pub c: Mat,
    pub gamma: f64,
    /// Number of eigenvalues of `λE - A` in the closed right half plane, if known.
    pub unstable: Option<usize>,
}

impl CareProblem {
    pub fn new(a: Coeff, e: Option<Coeff>, b1: Mat, b2: Mat, c: Mat) -> Result<Self> {
        let p = Self { a, e, b1, b2, c, gamma: 1.0, unstable: None };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n();
        dim_check(self.a.shape() == (n, n), || format!("A is {:?}, expected square", self.a.shape()))?;
        if let Some(e) = &self.e {
            dim_check(e.shape() == (n, n), || format!("E is {:?}, expected {n}x{n}", e.shape()))?;
        }
        dim_check(self.b1.nrows() == n, || format!("B1 has {} rows, expected {n}", self.b1.nrows()))?;
        dim_check(self.b2.nrows() == n, || format!("B2 has {} rows, expected {n}", self.b2.nrows()))?;
        dim_check(self.c.ncols() == n, || format!("C has {} columns, expected {n}", self.c.ncols()))?;
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.a.shape().0
    }

    pub fn is_sparse(&self) -> bool {
        self.a.is_sparse()
    }

    pub fn mul_e<T: Scalar>(&self, x: &DMatrix<T>) -> DMatrix<T> {
        match &self.e {
            Some(e) => e.mul(x),
            None => x.clone(),
        }
    }

    pub fn mul_et<T: Scalar>(&self, x: &DMatrix<T>) -> DMatrix<T> {
        match &self.e {
            Some(e) => e.mul_t(x),
            None => x.clone(),
        }
    }

    pub fn dense_e(&self) -> Mat {
        match &self.e {
            Some(e) => e.to_dense(),
            None => Mat::identity(self.n(), self.n()),
        }
    }
}

/// Index-2 descriptor system
///
/// ```text
/// E ẋ = A x + Jᵀ λ + B u,   0 = J x,   y = C x
/// ```
///
/// whose Riccati equation lives on the range of the projector
/// `Π = I - E⁻¹Jᵀ(JE⁻¹Jᵀ)⁻¹J`. `b1` carries the `1/γ` scaling.
#[derive(Clone, Debug)]
pub struct Dae2Problem {
    pub a: SparseMatrix,
    pub e: SparseMatrix,
    pub j: SparseMatrix,
    pub b1: Mat,
    pub b2: Mat,
    pub c: Mat,
    pub gamma: f64,
    pub unstable: Option<usize>,
}

impl Dae2Problem {
    pub fn validate(&self) -> Result<()> {
        let n = self.n();
        dim_check(self.a.shape() == (n, n), || format!("A is {:?}, expected square", self.a.shape()))?;
        dim_check(self.e.shape() == (n, n), || format!("E is {:?}, expected {n}x{n}", self.e.shape()))?;
        dim_check(self.j.ncols() == n && self.j.nrows() < n, || format!("J is {:?}, expected fewer than {n} rows and {n} columns", self.j.shape()))?;
        dim_check(self.b1.nrows() == n, || format!("B1 has {} rows, expected {n}", self.b1.nrows()))?;
        dim_check(self.b2.nrows() == n, || format!("B2 has {} rows, expected {n}", self.b2.nrows()))?;
        dim_check(self.c.ncols() == n, || format!("C has {} columns, expected {n}", self.c.ncols()))?;
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    /// Number of algebraic constraints.
    pub fn n_constraints(&self) -> usize {
        self.j.nrows()
    }
}

/// Either problem family.
#[derive(Clone, Debug)]
pub enum Problem {
    Standard(CareProblem),
    Dae2(Dae2Problem),
}

impl Problem {
    pub fn n(&self) -> usize {
        match self {
            Problem::Standard(p) => p.n(),
            Problem::Dae2(p) => p.n(),
        }
    }

    pub fn dims(&self) -> (usize, usize, usize, usize) {
        let (b1, b2, c) = match self {
            Problem::Standard(p) => (&p.b1, &p.b2, &p.c),
            Problem::Dae2(p) => (&p.b1, &p.b2, &p.c),
        };
        (self.n(), b1.ncols(), b2.ncols(), c.nrows())
    }

    pub fn gamma(&self) -> f64 {
        match self {
            Problem::Standard(p) => p.gamma,
            Problem::Dae2(p) => p.gamma,
        }
    }

    pub fn unstable(&self) -> Option<usize> {
        match self {
            Problem::Standard(p) => p.unstable,
            Problem::Dae2(p) => p.unstable,
        }
    }
}
