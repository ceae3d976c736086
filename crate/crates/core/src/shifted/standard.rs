//! Shifted solves for standard (nonsingular `E`) problems.

use std::sync::{Arc, OnceLock};

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{combined_update, dispatch_scalar, singular_at, smw_correct, Counters, FactorCache, LowRankUpdate, ShiftedOperator, ShiftedSolveReport};
use crate::error::{Error, Result};
use crate::linalg::sparse_lu::minimum_degree;
use crate::linalg::{mul, mul_tn, CMat, CscMatrix, DenseLu, Mat, Scalar, SparseLu, SparseMatrix};
use crate::problem::{CareProblem, Coeff, SolveStrategy};

const CACHE_SLOTS: usize = 8;

/// Dense coefficient layouts.
#[derive(Clone, Debug)]
pub enum DenseForm {
    General {
        a: Mat,
        e: Mat,
    },
    /// `E = I` and `A` upper Hessenberg; shifted systems cost `O(n²)`.
    Hessenberg {
        h: Mat,
    },
}

#[derive(Clone, Debug)]
enum Coefficients {
    Sparse { a: SparseMatrix, e: Option<SparseMatrix> },
    Dense(DenseForm),
}

pub(crate) enum Factor<T: Scalar> {
    Sparse(SparseLu<T>),
    Dense(DenseLu<T>),
    /// Factorization of the transposed matrix.
    Transposed(DenseLu<T>),
}

impl<T: Scalar> Factor<T> {
    fn solve(&self, rhs: &DMatrix<T>) -> DMatrix<T> {
        match self {
            Factor::Sparse(lu) => lu.solve(rhs),
            Factor::Dense(lu) => lu.solve(rhs),
            Factor::Transposed(lu) => lu.solve_transpose(rhs),
        }
    }
}

/// Coefficients `(A, E)` shared by the operators of all outer steps,
/// together with the per-shift factorization cache.
pub struct StandardBase {
    n: usize,
    coeffs: Coefficients,
    order: OnceLock<Vec<usize>>,
    real_cache: FactorCache<Factor<f64>>,
    complex_cache: FactorCache<Factor<Complex64>>,
}

pub(crate) trait CachedScalar: Scalar {
    fn cache(base: &StandardBase) -> &FactorCache<Factor<Self>>;
}

impl CachedScalar for f64 {
    fn cache(base: &StandardBase) -> &FactorCache<Factor<f64>> {
        &base.real_cache
    }
}

impl CachedScalar for Complex64 {
    fn cache(base: &StandardBase) -> &FactorCache<Factor<Complex64>> {
        &base.complex_cache
    }
}

impl StandardBase {
    fn with(n: usize, coeffs: Coefficients) -> Self {
        Self { n, coeffs, order: OnceLock::new(), real_cache: FactorCache::new(CACHE_SLOTS), complex_cache: FactorCache::new(CACHE_SLOTS) }
    }

    pub fn sparse(a: SparseMatrix, e: Option<SparseMatrix>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n || e.as_ref().is_some_and(|e| e.shape() != (n, n)) {
            return Err(Error::DimensionMismatch("sparse pencil must be square".into()));
        }
        Ok(Self::with(n, Coefficients::Sparse { a, e }))
    }

    pub fn dense(form: DenseForm) -> Self {
        let n = match &form {
            DenseForm::General { a, .. } => a.nrows(),
            DenseForm::Hessenberg { h } => h.nrows(),
        };
        Self::with(n, Coefficients::Dense(form))
    }

    /// Uses the storage of the problem's coefficients as is.
    pub fn from_problem(p: &CareProblem) -> Result<Self> {
        Ok(match &p.a {
            Coeff::Sparse(a) => Self::sparse(a.clone(), p.e.as_ref().map(Coeff::to_sparse))?,
            Coeff::Dense(a) => Self::dense(DenseForm::General { a: a.clone(), e: p.dense_e() }),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self.coeffs, Coefficients::Sparse { .. })
    }

    pub fn apply_a<T: Scalar>(&self, x: &DMatrix<T>, transpose: bool) -> DMatrix<T> {
        use crate::linalg::scalar::real_mul;
        use crate::linalg::Op;
        let op = if transpose { Op::T } else { Op::N };
        match &self.coeffs {
            Coefficients::Sparse { a, .. } => {
                if transpose {
                    a.mul_dense_transpose(x)
                } else {
                    a.mul_dense(x)
                }
            }
            Coefficients::Dense(DenseForm::General { a, .. }) => real_mul(a, op, x),
            Coefficients::Dense(DenseForm::Hessenberg { h }) => real_mul(h, op, x),
        }
    }

    pub fn apply_e<T: Scalar>(&self, x: &DMatrix<T>, transpose: bool) -> DMatrix<T> {
        use crate::linalg::scalar::real_mul;
        use crate::linalg::Op;
        match &self.coeffs {
            Coefficients::Sparse { e: Some(e), .. } => {
                if transpose {
                    e.mul_dense_transpose(x)
                } else {
                    e.mul_dense(x)
                }
            }
            Coefficients::Dense(DenseForm::General { e, .. }) => real_mul(e, if transpose { Op::T } else { Op::N }, x),
            _ => x.clone(),
        }
    }

    pub fn dense_a(&self) -> Mat {
        match &self.coeffs {
            Coefficients::Sparse { a, .. } => a.to_dense(),
            Coefficients::Dense(DenseForm::General { a, .. }) => a.clone(),
            Coefficients::Dense(DenseForm::Hessenberg { h }) => h.clone(),
        }
    }

    pub fn dense_e(&self) -> Mat {
        match &self.coeffs {
            Coefficients::Sparse { e: Some(e), .. } => e.to_dense(),
            Coefficients::Dense(DenseForm::General { e, .. }) => e.clone(),
            _ => Mat::identity(self.n, self.n),
        }
    }

    /// Triplets of `σEᵀ - Aᵀ` (sparse coefficients only).
    fn phi_triplets<T: Scalar>(&self, sigma: T) -> Vec<(usize, usize, T)> {
        let Coefficients::Sparse { a, e } = &self.coeffs else { unreachable!("phi_triplets on dense coefficients") };
        let mut t: Vec<(usize, usize, T)> = a.triplets().map(|(i, j, v)| (j, i, T::lift(-v))).collect();
        match e {
            Some(e) => t.extend(e.triplets().map(|(i, j, v)| (j, i, sigma * T::lift(v)))),
            None => t.extend((0..self.n).map(|i| (i, i, sigma))),
        }
        t
    }

    fn sparse_order(&self) -> &[usize] {
        self.order.get_or_init(|| {
            let phi = CscMatrix::from_triplets(self.n, self.phi_triplets(1.0f64));
            minimum_degree(&phi)
        })
    }

    /// Dense `σEᵀ - Aᵀ` (general) or `σI - H` (Hessenberg).
    fn dense_shifted<T: Scalar>(&self, sigma: T) -> DMatrix<T> {
        match &self.coeffs {
            Coefficients::Dense(DenseForm::General { a, e }) => DMatrix::from_fn(self.n, self.n, |i, j| sigma * T::lift(e[(j, i)]) - T::lift(a[(j, i)])),
            Coefficients::Dense(DenseForm::Hessenberg { h }) => {
                DMatrix::from_fn(self.n, self.n, |i, j| if i == j { sigma - T::lift(h[(i, j)]) } else { -T::lift(h[(i, j)]) })
            }
            Coefficients::Sparse { .. } => unreachable!("dense_shifted on sparse coefficients"),
        }
    }

    fn factor_plain<T: Scalar>(&self, sigma: T) -> Result<Factor<T>> {
        Ok(match &self.coeffs {
            Coefficients::Sparse { .. } => {
                let phi = CscMatrix::from_triplets(self.n, self.phi_triplets(sigma));
                Factor::Sparse(SparseLu::factor(&phi, Some(self.sparse_order()))?)
            }
            Coefficients::Dense(DenseForm::General { .. }) => Factor::Dense(DenseLu::factor(self.dense_shifted(sigma))?),
            Coefficients::Dense(DenseForm::Hessenberg { .. }) => Factor::Transposed(DenseLu::factor_bordered_hessenberg(self.dense_shifted(sigma), self.n)?),
        })
    }

    pub(crate) fn cached_factor<T: CachedScalar>(&self, sigma: Complex64, counters: &Counters) -> Result<Arc<Factor<T>>> {
        if let Some(f) = T::cache(self).get(sigma) {
            counters.hit();
            return Ok(f);
        }
        counters.factorization();
        let f = Arc::new(self.factor_plain(T::from_c64(sigma)).map_err(singular_at(sigma))?);
        T::cache(self).insert(sigma, f.clone());
        Ok(f)
    }

    /// Factors `[[Φ, L], [Rᵀ, I]]` (or its transpose for Hessenberg data).
    fn factor_bordered<T: Scalar>(&self, sigma: T, l: &Mat, r: &Mat) -> Result<Factor<T>> {
        let n = self.n;
        let w = l.ncols();
        Ok(match &self.coeffs {
            Coefficients::Sparse { .. } => {
                let mut t = self.phi_triplets(sigma);
                t.reserve(2 * n * w + w);
                for c in 0..w {
                    for i in 0..n {
                        if l[(i, c)] != 0.0 {
                            t.push((i, n + c, T::lift(l[(i, c)])));
                        }
                        if r[(i, c)] != 0.0 {
                            t.push((n + c, i, T::lift(r[(i, c)])));
                        }
                    }
                    t.push((n + c, n + c, T::one()));
                }
                let m = CscMatrix::from_triplets(n + w, t);
                let order: Vec<usize> = self.sparse_order().iter().copied().chain(n..n + w).collect();
                Factor::Sparse(SparseLu::factor(&m, Some(&order))?)
            }
            Coefficients::Dense(form) => {
                let hess = matches!(form, DenseForm::Hessenberg { .. });
                let mut m = DMatrix::<T>::zeros(n + w, n + w);
                m.view_mut((0, 0), (n, n)).copy_from(&self.dense_shifted(sigma));
                // Hessenberg data is factored transposed: [[M, R], [Lᵀ, I]].
                let (right, bottom) = if hess { (r, l) } else { (l, r) };
                for c in 0..w {
                    for i in 0..n {
                        m[(i, n + c)] = T::lift(right[(i, c)]);
                        m[(n + c, i)] = T::lift(bottom[(i, c)]);
                    }
                    m[(n + c, n + c)] = T::one();
                }
                if hess {
                    Factor::Transposed(DenseLu::factor_bordered_hessenberg(m, n)?)
                } else {
                    Factor::Dense(DenseLu::factor(m)?)
                }
            }
        })
    }
}

/// `A_k = A + U Vᵀ` over shared coefficients.
pub struct SparsePlusLowRank {
    base: Arc<StandardBase>,
    u: Mat,
    v: Mat,
    strategy: SolveStrategy,
    counters: Counters,
}

impl SparsePlusLowRank {
    pub fn new(base: Arc<StandardBase>, u: Mat, v: Mat, strategy: SolveStrategy) -> Result<Self> {
        let n = base.n();
        if u.shape() != v.shape() || (u.ncols() > 0 && u.nrows() != n) {
            return Err(Error::DimensionMismatch(format!("low-rank update {:?} / {:?} for n = {n}", u.shape(), v.shape())));
        }
        let (u, v) = if u.ncols() == 0 { (Mat::zeros(n, 0), Mat::zeros(n, 0)) } else { (u, v) };
        Ok(Self { base, u, v, strategy, counters: Counters::default() })
    }

    pub fn base(&self) -> &Arc<StandardBase> {
        &self.base
    }

    pub fn strategy(&self) -> SolveStrategy {
        self.strategy
    }

    fn solve_typed<T: CachedScalar>(&self, sigma: Complex64, f: &DMatrix<T>, l: &Mat, r: &Mat) -> Result<DMatrix<T>> {
        let n = self.base.n();
        let w = l.ncols();
        if self.strategy == SolveStrategy::Smw || w == 0 {
            let fac = self.base.cached_factor::<T>(sigma, &self.counters)?;
            let rhs = crate::linalg::hcat(&[f, &l.map(T::lift)]);
            let z = fac.solve(&rhs);
            let k = f.ncols();
            let z1 = z.columns(0, k).into_owned();
            let z2 = z.columns(k, w).into_owned();
            return smw_correct(sigma, z1, &z2, r);
        }
        self.counters.factorization();
        let fac = self.base.factor_bordered(T::from_c64(sigma), l, r).map_err(singular_at(sigma))?;
        let mut rhs = DMatrix::<T>::zeros(n + w, f.ncols());
        rhs.view_mut((0, 0), (n, f.ncols())).copy_from(f);
        Ok(fac.solve(&rhs).rows(0, n).into_owned())
    }
}

impl ShiftedOperator for SparsePlusLowRank {
    fn n(&self) -> usize {
        self.base.n()
    }

    fn apply_a(&self, x: &Mat, transpose: bool) -> Mat {
        let mut y = self.base.apply_a(x, transpose);
        if self.u.ncols() > 0 {
            if transpose {
                y += mul(&self.v, &mul_tn(&self.u, x));
            } else {
                y += mul(&self.u, &mul_tn(&self.v, x));
            }
        }
        y
    }

    fn apply_e(&self, x: &Mat, transpose: bool) -> Mat {
        self.base.apply_e(x, transpose)
    }

    fn solve(&self, sigma: Complex64, f: &CMat, extra: Option<&LowRankUpdate>) -> Result<CMat> {
        if f.nrows() != self.n() {
            return Err(Error::DimensionMismatch(format!("right-hand side has {} rows, expected {}", f.nrows(), self.n())));
        }
        if !sigma.re.is_finite() || !sigma.im.is_finite() {
            return Err(Error::InvalidInput(format!("shift {sigma} is not finite")));
        }
        self.counters.solve(f.ncols());
        let (l, r) = combined_update(&self.v, &self.u, extra);
        dispatch_scalar(sigma, f, |s, fr| self.solve_typed::<f64>(Complex64::new(s, 0.0), fr, &l, &r), |s, fc| self.solve_typed::<Complex64>(s, fc, &l, &r))
    }

    fn dense_pencil(&self, cap: usize) -> Option<(Mat, Mat)> {
        if self.n() > cap {
            return None;
        }
        let mut a = self.base.dense_a();
        if self.u.ncols() > 0 {
            a += mul(&self.u, &self.v.transpose());
        }
        Some((a, self.base.dense_e()))
    }

    fn report(&self) -> ShiftedSolveReport {
        self.counters.snapshot()
    }
}
