//! Shifted solves for index-2 descriptor systems.
//!
//! All operations stay in the original coordinates: projections with
//! `Π = I - E⁻¹Jᵀ(JE⁻¹Jᵀ)⁻¹J` and shifted solves on the hidden manifold are
//! carried out through saddle-point systems, so neither `Π` nor a null-space
//! basis of `J` is ever formed.

use std::sync::{Arc, OnceLock};

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{combined_update, dispatch_scalar, singular_at, smw_correct, Counters, FactorCache, LowRankUpdate, ShiftedOperator, ShiftedSolveReport};
use crate::error::{Error, Result};
use crate::linalg::sparse_lu::minimum_degree;
use crate::linalg::{mul, mul_tn, CMat, CscMatrix, Mat, Scalar, SparseLu};
use crate::problem::{Dae2Problem, SolveStrategy};

const CACHE_SLOTS: usize = 8;

/// Problem data, the factored projection system `[[E, Jᵀ], [J, 0]]` and
/// the per-shift cache of saddle factorizations.
pub struct Dae2Base {
    prob: Dae2Problem,
    projector: SparseLu<f64>,
    order: OnceLock<Vec<usize>>,
    real_cache: FactorCache<SparseLu<f64>>,
    complex_cache: FactorCache<SparseLu<Complex64>>,
}

pub(crate) trait SaddleScalar: Scalar {
    fn cache(base: &Dae2Base) -> &FactorCache<SparseLu<Self>>;
}

impl SaddleScalar for f64 {
    fn cache(base: &Dae2Base) -> &FactorCache<SparseLu<f64>> {
        &base.real_cache
    }
}

impl SaddleScalar for Complex64 {
    fn cache(base: &Dae2Base) -> &FactorCache<SparseLu<Complex64>> {
        &base.complex_cache
    }
}

impl Dae2Base {
    pub fn new(prob: Dae2Problem) -> Result<Self> {
        prob.validate()?;
        let n = prob.n();
        let mut t: Vec<(usize, usize, f64)> = prob.e.triplets().collect();
        for (i, j, v) in prob.j.triplets() {
            t.push((n + i, j, v));
            t.push((j, n + i, v));
        }
        let m = CscMatrix::from_triplets(n + prob.n_constraints(), t);
        let projector = SparseLu::factor(&m, None).map_err(|e| match e {
            Error::SingularMatrix { .. } => Error::InvalidInput("[[E, Jᵀ], [J, 0]] is singular; J must have full row rank".into()),
            other => other,
        })?;
        Ok(Self { prob, projector, order: OnceLock::new(), real_cache: FactorCache::new(CACHE_SLOTS), complex_cache: FactorCache::new(CACHE_SLOTS) })
    }

    pub fn problem(&self) -> &Dae2Problem {
        &self.prob
    }

    pub fn n(&self) -> usize {
        self.prob.n()
    }

    fn n_total(&self) -> usize {
        self.prob.n() + self.prob.n_constraints()
    }

    fn projection_solve(&self, top: &Mat) -> Mat {
        let n = self.n();
        let mut rhs = Mat::zeros(self.n_total(), top.ncols());
        rhs.view_mut((0, 0), (n, top.ncols())).copy_from(top);
        self.projector.solve(&rhs).rows(0, n).into_owned()
    }

    /// `Π F`.
    pub fn pi(&self, f: &Mat) -> Mat {
        self.projection_solve(&self.prob.e.mul_dense(f))
    }

    /// `Πᵀ F`.
    pub fn pi_t(&self, f: &Mat) -> Mat {
        self.prob.e.mul_dense(&self.projection_solve(f))
    }

    /// Triplets of `[[σEᵀ - Aᵀ, -Jᵀ], [-J, 0]]`.
    fn saddle_triplets<T: Scalar>(&self, sigma: T) -> Vec<(usize, usize, T)> {
        let n = self.n();
        let p = &self.prob;
        let mut t: Vec<(usize, usize, T)> = p.a.triplets().map(|(i, j, v)| (j, i, T::lift(-v))).collect();
        t.extend(p.e.triplets().map(|(i, j, v)| (j, i, sigma * T::lift(v))));
        for (i, j, v) in p.j.triplets() {
            t.push((n + i, j, T::lift(-v)));
            t.push((j, n + i, T::lift(-v)));
        }
        t
    }

    fn saddle_order(&self) -> &[usize] {
        self.order.get_or_init(|| minimum_degree(&CscMatrix::from_triplets(self.n_total(), self.saddle_triplets(1.0f64))))
    }

    fn cached_saddle<T: SaddleScalar>(&self, sigma: Complex64, counters: &Counters) -> Result<Arc<SparseLu<T>>> {
        if let Some(f) = T::cache(self).get(sigma) {
            counters.hit();
            return Ok(f);
        }
        counters.factorization();
        let m = CscMatrix::from_triplets(self.n_total(), self.saddle_triplets(T::from_c64(sigma)));
        let f = Arc::new(SparseLu::factor(&m, Some(self.saddle_order())).map_err(singular_at(sigma))?);
        T::cache(self).insert(sigma, f.clone());
        Ok(f)
    }

    fn bordered_saddle<T: Scalar>(&self, sigma: Complex64, l: &Mat, r: &Mat) -> Result<SparseLu<T>> {
        let n = self.n();
        let nt = self.n_total();
        let w = l.ncols();
        let mut t = self.saddle_triplets(T::from_c64(sigma));
        for c in 0..w {
            for i in 0..n {
                if l[(i, c)] != 0.0 {
                    t.push((i, nt + c, T::lift(l[(i, c)])));
                }
                if r[(i, c)] != 0.0 {
                    t.push((nt + c, i, T::lift(r[(i, c)])));
                }
            }
            t.push((nt + c, nt + c, T::one()));
        }
        let m = CscMatrix::from_triplets(nt + w, t);
        let order: Vec<usize> = self.saddle_order().iter().copied().chain(nt..nt + w).collect();
        SparseLu::factor(&m, Some(&order)).map_err(singular_at(sigma))
    }
}

/// `Π F` through one saddle-point solve.
pub fn apply_pi(base: &Dae2Base, f: &Mat) -> Mat {
    base.pi(f)
}

/// `Πᵀ F` through one saddle-point solve.
pub fn apply_pi_transpose(base: &Dae2Base, f: &Mat) -> Mat {
    base.pi_t(f)
}

/// Outer-step operator of the projected problem: `A_k = ΠᵀAΠ + ΠᵀB̃ Vᵀ`
/// with the raw input matrix `B̃` stored in `u`.
pub struct Dae2Operator {
    base: Arc<Dae2Base>,
    u: Mat,
    v: Mat,
    strategy: SolveStrategy,
    counters: Counters,
}

impl Dae2Operator {
    pub fn new(base: Arc<Dae2Base>, u: Mat, v: Mat, strategy: SolveStrategy) -> Result<Self> {
        let n = base.n();
        if u.shape() != v.shape() || (u.ncols() > 0 && u.nrows() != n) {
            return Err(Error::DimensionMismatch(format!("low-rank update {:?} / {:?} for n = {n}", u.shape(), v.shape())));
        }
        let (u, v) = if u.ncols() == 0 { (Mat::zeros(n, 0), Mat::zeros(n, 0)) } else { (u, v) };
        Ok(Self { base, u, v, strategy, counters: Counters::default() })
    }

    pub fn base(&self) -> &Arc<Dae2Base> {
        &self.base
    }

    fn solve_typed<T: SaddleScalar>(&self, sigma: Complex64, f: &DMatrix<T>, l: &Mat, r: &Mat) -> Result<DMatrix<T>> {
        let n = self.base.n();
        let nt = self.base.n_total();
        let w = l.ncols();
        let k = f.ncols();
        if self.strategy == SolveStrategy::Smw || w == 0 {
            let fac = self.base.cached_saddle::<T>(sigma, &self.counters)?;
            let mut rhs = DMatrix::<T>::zeros(nt, k + w);
            rhs.view_mut((0, 0), (n, k)).copy_from(f);
            rhs.view_mut((0, k), (n, w)).copy_from(&l.map(T::lift));
            let z = fac.solve(&rhs);
            let z1 = z.view((0, 0), (n, k)).into_owned();
            let z2 = z.view((0, k), (n, w)).into_owned();
            return smw_correct(sigma, z1, &z2, r);
        }
        self.counters.factorization();
        let fac = self.base.bordered_saddle::<T>(sigma, l, r)?;
        let mut rhs = DMatrix::<T>::zeros(nt + w, k);
        rhs.view_mut((0, 0), (n, k)).copy_from(f);
        Ok(fac.solve(&rhs).rows(0, n).into_owned())
    }
}

impl ShiftedOperator for Dae2Operator {
    fn n(&self) -> usize {
        self.base.n()
    }

    fn apply_a(&self, x: &Mat, transpose: bool) -> Mat {
        let p = &self.base.prob;
        let px = self.base.pi(x);
        if transpose {
            let mut y = self.base.pi_t(&p.a.mul_dense_transpose(&px));
            if self.u.ncols() > 0 {
                y += mul(&self.v, &mul_tn(&self.u, &px));
            }
            y
        } else {
            let mut y = p.a.mul_dense(&px);
            if self.u.ncols() > 0 {
                y += mul(&self.u, &mul_tn(&self.v, x));
            }
            self.base.pi_t(&y)
        }
    }

    fn apply_e(&self, x: &Mat, transpose: bool) -> Mat {
        if transpose {
            self.base.prob.e.mul_dense_transpose(x)
        } else {
            self.base.prob.e.mul_dense(x)
        }
    }

    /// Solves the saddle system `[[σEᵀ - Aᵀ - L Rᵀ, -Jᵀ], [-J, 0]] [X; λ] = [F; 0]`.
    /// For `F = ΠᵀF` the solution lies in the range of `Π` and solves the
    /// projected shifted system.
    fn solve(&self, sigma: Complex64, f: &CMat, extra: Option<&LowRankUpdate>) -> Result<CMat> {
        if f.nrows() != self.n() {
            return Err(Error::DimensionMismatch(format!("right-hand side has {} rows, expected {}", f.nrows(), self.n())));
        }
        self.counters.solve(f.ncols());
        let (l, r) = combined_update(&self.v, &self.u, extra);
        dispatch_scalar(sigma, f, |s, fr| self.solve_typed::<f64>(Complex64::new(s, 0.0), fr, &l, &r), |s, fc| self.solve_typed::<Complex64>(s, fc, &l, &r))
    }

    fn dense_pencil(&self, _cap: usize) -> Option<(Mat, Mat)> {
        None
    }

    fn restrict(&self, f: &Mat) -> Result<Mat> {
        Ok(self.base.pi_t(f))
    }

    fn report(&self) -> ShiftedSolveReport {
        self.counters.snapshot()
    }
}
