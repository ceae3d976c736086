//! Eigenvalues of `λEᵀ - A_kᵀ` near a target, for stability checks and
//! Bernoulli stabilization.
//!
//! Small problems use a dense Schur form. Large ones run an explicitly
//! restarted shift-and-invert Arnoldi iteration on `(τEᵀ - A_kᵀ)⁻¹Eᵀ`,
//! whose dominant eigenvalues `μ` map to `λ = τ - 1/μ`. Eigenvalues far from
//! the target are invisible to the sparse path.

use std::sync::Arc;

use nalgebra::DVector;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{small_dense_eig, DenseLu, Mat, SchurForm};
use crate::problem::{Dae2Problem, SolveStrategy, SolverOptions};
use crate::shifted::{Dae2Base, Dae2Operator, ShiftedOperator};

/// An eigenvalue with its left eigenvector `y`, `A_kᵀ y = λ Eᵀ y`.
pub type EigenPair = (Complex64, DVector<Complex64>);

/// Settings for the shift-and-invert Arnoldi iteration.
#[derive(Clone, Debug)]
pub struct ArnoldiOptions {
    pub target: f64,
    pub count: usize,
    pub krylov: usize,
    pub restarts: usize,
    pub tol: f64,
    pub seed: u64,
}

impl ArnoldiOptions {
    pub fn new(target: f64, count: usize) -> Self {
        Self { target, count, krylov: (3 * count + 20).max(40), restarts: 30, tol: 1e-10, seed: 0x5eed }
    }
}

/// The `count` eigenvalues nearest to the target, nearest first.
pub fn eigs_near(op: &dyn ShiftedOperator, opts: &ArnoldiOptions) -> Result<Vec<EigenPair>> {
    let n = op.n();
    if n == 0 || opts.count == 0 {
        return Ok(Vec::new());
    }
    let mut tau = opts.target;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let random = Mat::from_fn(n, 1, |_, _| StandardNormal.sample(&mut rng));
    let mut start = loop {
        match op.restrict(&random).and_then(|f| solve_real(op, tau, &f)) {
            Ok(v) => break v,
            Err(Error::ShiftedSystemSingular { .. }) if tau == opts.target => {
                tau = opts.target + 1e-3 * (1.0 + opts.target.abs());
            }
            Err(e) => return Err(e),
        }
    };
    let m = opts.krylov.min(n).max(opts.count.min(n));
    let want = opts.count.min(n);
    let mut best: Vec<EigenPair> = Vec::new();
    for _ in 0..=opts.restarts {
        let (basis, h, beta) = arnoldi(op, tau, &start, m)?;
        let k = h.nrows();
        let mut ritz: Vec<(Complex64, DVector<Complex64>, f64)> = small_dense_eig(&h)?
            .into_iter()
            .map(|(mu, s)| {
                let res = beta * s[k - 1].norm();
                (mu, s, res)
            })
            .collect();
        ritz.sort_by(|a, b| b.0.norm().total_cmp(&a.0.norm()).then(a.0.im.total_cmp(&b.0.im)));
        let mut take = want.min(ritz.len());
        if take < ritz.len() && ritz[take - 1].0.im != 0.0 && (ritz[take].0 - ritz[take - 1].0.conj()).norm() <= 1e-10 * ritz[take].0.norm() {
            take += 1;
        }
        let wanted = &ritz[..take];
        let converged = k < m || wanted.iter().all(|(mu, _, res)| *res <= opts.tol * mu.norm());
        let vb = basis.columns(0, k).map(Complex64::from);
        best = wanted
            .iter()
            .map(|(mu, s, _)| {
                let mut y = &vb * s;
                let nrm = y.norm();
                y /= Complex64::new(nrm, 0.0);
                (Complex64::new(tau, 0.0) - mu.inv(), y)
            })
            .collect();
        if converged {
            return Ok(best);
        }
        let mut next = Mat::zeros(n, 1);
        for (_, y) in &best {
            for i in 0..n {
                next[(i, 0)] += y[i].re + y[i].im;
            }
        }
        start = next;
    }
    log::warn!("Arnoldi stopped after {} restarts without full convergence", opts.restarts);
    Ok(best)
}

fn solve_real(op: &dyn ShiftedOperator, tau: f64, f: &Mat) -> Result<Mat> {
    let x = op.solve(Complex64::new(tau, 0.0), &f.map(Complex64::from), None)?;
    Ok(x.map(|z| z.re))
}

/// Arnoldi factorization of `(τEᵀ - A_kᵀ)⁻¹Eᵀ`; returns the basis, the
/// square Hessenberg matrix and the trailing subdiagonal entry.
fn arnoldi(op: &dyn ShiftedOperator, tau: f64, start: &Mat, m: usize) -> Result<(Mat, Mat, f64)> {
    let n = op.n();
    let mut v = Mat::zeros(n, m + 1);
    let mut h = Mat::zeros(m + 1, m);
    let nrm = start.norm();
    if nrm == 0.0 {
        return Err(Error::InvalidInput("Arnoldi start vector is zero".into()));
    }
    v.set_column(0, &(start.column(0) / nrm));
    let mut size = m;
    for j in 0..m {
        let ex = op.apply_e(&v.columns(j, 1).into_owned(), true);
        let mut w = solve_real(op, tau, &ex)?;
        for _ in 0..2 {
            let basis = v.columns(0, j + 1);
            let coef = basis.transpose() * &w;
            w -= basis * &coef;
            for i in 0..=j {
                h[(i, j)] += coef[(i, 0)];
            }
        }
        let beta = w.norm();
        h[(j + 1, j)] = beta;
        let scale = h.column(j).norm();
        if beta <= 1e-13 * scale.max(f64::MIN_POSITIVE) {
            size = j + 1;
            break;
        }
        v.set_column(j + 1, &(w.column(0) / beta));
    }
    let beta = if size < m { 0.0 } else { h[(m, m - 1)] };
    Ok((v, h.view((0, 0), (size, size)).into_owned(), beta))
}

/// All eigenpairs of a dense pencil `λEᵀ - Aᵀ` (left eigenvectors of `(A, E)`).
pub fn dense_left_schur(a: &Mat, e: &Mat) -> Result<SchurForm> {
    let n = DenseLu::factor(e.transpose())?.solve(&a.transpose());
    SchurForm::new(&n)
}

/// Left eigenpairs in the closed right half plane.
pub fn unstable_left_eigs(op: &dyn ShiftedOperator, opts: &SolverOptions) -> Result<Vec<EigenPair>> {
    if let Some((a, e)) = op.dense_pencil(opts.dense_cap) {
        let schur = dense_left_schur(&a, &e)?;
        let idx: Vec<usize> = (0..a.nrows()).filter(|&k| schur.eigenvalues()[k].re >= 0.0).collect();
        if idx.len() > opts.unstable_cap {
            return Err(Error::TooManyUnstable { count: idx.len(), cap: opts.unstable_cap });
        }
        return Ok(idx.into_iter().map(|k| (schur.eigenvalues()[k], schur.eigenvector(k))).collect());
    }
    let mut count = opts.eig_count.max(2);
    loop {
        let pairs = eigs_near(op, &ArnoldiOptions::new(opts.eig_target, count))?;
        let found = pairs.len();
        let unstable: Vec<EigenPair> = pairs.into_iter().filter(|(l, _)| l.re >= 0.0).collect();
        if unstable.len() > opts.unstable_cap {
            return Err(Error::TooManyUnstable { count: unstable.len(), cap: opts.unstable_cap });
        }
        if unstable.len() + 1 < found || found < count || count > opts.unstable_cap + 2 {
            return Ok(unstable);
        }
        count *= 2;
    }
}

/// Eigenvalues of a dense pencil or, for large operators, those nearest to
/// `opts.eig_target`.
pub fn operator_eigenvalues(op: &dyn ShiftedOperator, opts: &SolverOptions) -> Result<Vec<Complex64>> {
    if let Some((a, e)) = op.dense_pencil(opts.dense_cap) {
        return crate::linalg::pencil_eigenvalues(&a, &e);
    }
    Ok(eigs_near(op, &ArnoldiOptions::new(opts.eig_target, opts.eig_count))?.into_iter().map(|p| p.0).collect())
}

/// The `count` finite eigenvalues of a DAE2 pencil nearest to zero.
pub fn dae2_rightmost(prob: &Dae2Problem, count: usize) -> Result<Vec<Complex64>> {
    let base = Arc::new(Dae2Base::new(prob.clone())?);
    let n = base.n();
    let op = Dae2Operator::new(base, Mat::zeros(n, 0), Mat::zeros(n, 0), SolveStrategy::Augmented)?;
    Ok(eigs_near(&op, &ArnoldiOptions::new(0.0, count))?.into_iter().map(|p| p.0).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::SparseMatrix;
    use crate::shifted::{SparsePlusLowRank, StandardBase};

    #[test]
    fn arnoldi_finds_eigenvalues_near_target() {
        let n = 200;
        let trip: Vec<_> = (0..n).map(|i| (i, i, -(i as f64) - 1.0)).chain((0..n - 1).map(|i| (i, i + 1, 0.3))).collect();
        let a = SparseMatrix::from_triplets(n, n, &trip).unwrap();
        let base = Arc::new(StandardBase::sparse(a, None).unwrap());
        let op = SparsePlusLowRank::new(base, Mat::zeros(n, 0), Mat::zeros(n, 0), SolveStrategy::Augmented).unwrap();
        let pairs = eigs_near(&op, &ArnoldiOptions::new(0.0, 4)).unwrap();
        let mut vals: Vec<f64> = pairs.iter().map(|p| p.0.re).collect();
        vals.sort_by(|a, b| b.total_cmp(a));
        for (k, v) in vals.iter().enumerate() {
            assert!((v + (k as f64 + 1.0)).abs() < 1e-8, "{vals:?}");
        }
        for (l, y) in &pairs {
            let yr = y.map(|z| z.re);
            let yi = y.map(|z| z.im);
            let m = |v: &DVector<f64>| op.apply_a(&Mat::from_column_slice(n, 1, v.as_slice()), true);
            let r = (m(&yr) - Mat::from_column_slice(n, 1, yr.as_slice()) * l.re + Mat::from_column_slice(n, 1, yi.as_slice()) * l.im).norm();
            assert!(r < 1e-7, "{r}");
        }
    }
}
