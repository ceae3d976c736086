//! Seeded synthetic problems.
//!
//! Random draws come from ChaCha8 seeded with `seed_from_u64`, with normal
//! variates from `rand_distr::StandardNormal`, so a seed reproduces the same
//! matrices on every platform.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{CareProblem, Coeff, Dae2Problem};
use crate::error::{Error, Result};
use crate::linalg::{pencil_eigenvalues, Mat, SparseMatrix};

fn gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> Mat {
    let data: Vec<f64> = (0..rows * cols).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect();
    Mat::from_vec(rows, cols, data)
}

/// Dense random problem with a prescribed number of unstable eigenvalues.
///
/// `E = I + G/(5√n)` and `A = M - sE` with `M` Gaussian, so the spectrum of
/// `λE - A` is that of `E⁻¹M` shifted left by `s`. The shift sits in the
/// middle of the gap between the `unstable`-th and the next real part; if a
/// complex pair straddles that position the pair is kept unstable and
/// [`CareProblem::unstable`] reports the actual count. Input and output
/// matrices are Gaussian scaled by `1/√n`; `B1` is further divided by `gamma`.
pub fn gen_random_care(n: usize, m1: usize, m2: usize, p: usize, unstable: usize, gamma: f64, seed: u64) -> Result<CareProblem> {
    if n == 0 || unstable > n || gamma <= 0.0 {
        return Err(Error::InvalidInput(format!("random problem needs n > 0, unstable <= n, gamma > 0 (n={n}, unstable={unstable}, gamma={gamma})")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sn = (n as f64).sqrt();
    let m = gaussian(&mut rng, n, n, 1.0 / sn);
    let e = Mat::identity(n, n) + gaussian(&mut rng, n, n, 0.2 / sn);
    let b1 = gaussian(&mut rng, n, m1, 1.0 / (sn * gamma));
    let b2 = gaussian(&mut rng, n, m2, 1.0 / sn);
    let c = gaussian(&mut rng, p, n, 1.0 / sn);

    let mut re: Vec<f64> = pencil_eigenvalues(&m, &e)?.iter().map(|z| z.re).collect();
    re.sort_by(|a, b| b.total_cmp(a));
    let tie = 1e-10 * re.iter().fold(1.0f64, |acc, v| acc.max(v.abs()));
    let mut k = unstable;
    while k > 0 && k < n && re[k - 1] - re[k] <= tie {
        k += 1;
    }
    let shift = match k {
        0 => re[0] + 0.5,
        k if k == n => re[n - 1] - 0.5,
        k => 0.5 * (re[k - 1] + re[k]),
    };
    let a = &m - &e * shift;
    let mut prob = CareProblem::new(Coeff::Dense(a), Some(Coeff::Dense(e)), b1, b2, c)?;
    prob.gamma = gamma;
    prob.unstable = Some(k);
    Ok(prob)
}

/// One-dimensional heat equation on `(0, 1)` discretized with linear finite
/// elements on `n` interior nodes: `A = -K` (stiffness), `E = M` (mass).
///
/// The `m1 + m2` inputs act on consecutive equal segments of the interval
/// (`B = M·indicator`), the first `m1` being disturbances scaled by `1/gamma`.
/// The `p` outputs sample the state at evenly spaced nodes.
pub fn gen_heat_fd(n: usize, m1: usize, m2: usize, p: usize, gamma: f64) -> Result<CareProblem> {
    if n < 2 || p > n || gamma <= 0.0 || m1 + m2 == 0 || m1 + m2 > n {
        return Err(Error::InvalidInput(format!("heat problem needs n >= 2, p <= n, 0 < m1 + m2 <= n, gamma > 0 (n={n}, m1={m1}, m2={m2}, p={p})")));
    }
    let h = 1.0 / (n as f64 + 1.0);
    let mut ta = Vec::with_capacity(3 * n);
    let mut te = Vec::with_capacity(3 * n);
    for i in 0..n {
        ta.push((i, i, -2.0 / h));
        te.push((i, i, 4.0 * h / 6.0));
        if i + 1 < n {
            ta.push((i, i + 1, 1.0 / h));
            ta.push((i + 1, i, 1.0 / h));
            te.push((i, i + 1, h / 6.0));
            te.push((i + 1, i, h / 6.0));
        }
    }
    let a = SparseMatrix::from_triplets(n, n, &ta)?;
    let e = SparseMatrix::from_triplets(n, n, &te)?;
    let m = m1 + m2;
    let mut ind = Mat::zeros(n, m);
    for i in 0..n {
        ind[(i, (i * m / n).min(m - 1))] = 1.0;
    }
    let b = e.mul_dense(&ind);
    let b1 = b.columns(0, m1).into_owned() / gamma;
    let b2 = b.columns(m1, m2).into_owned();
    let mut c = Mat::zeros(p, n);
    for k in 0..p {
        c[(k, ((k + 1) * (n + 1) / (p + 1)).saturating_sub(1).min(n - 1))] = 1.0;
    }
    let mut prob = CareProblem::new(Coeff::Sparse(a), Some(Coeff::Sparse(e)), b1, b2, c)?;
    prob.gamma = gamma;
    prob.unstable = Some(0);
    Ok(prob)
}

/// How the reaction term of the Stokes generator is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Growth {
    /// Add `rate · E` to the velocity operator.
    Fixed(f64),
    /// Pick the rate so that this many eigenvalues become unstable.
    Unstable(usize),
}

/// Parameters of [`gen_stokes_dae2`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StokesOptions {
    pub viscosity: f64,
    /// Speed of a uniform background flow in the x direction.
    pub convection: f64,
    pub growth: Growth,
}

impl Default for StokesOptions {
    fn default() -> Self {
        Self { viscosity: 1.0, convection: 0.0, growth: Growth::Fixed(0.0) }
    }
}

struct StaggeredGrid {
    cells: usize,
}

impl StaggeredGrid {
    fn nu(&self) -> usize {
        (self.cells - 1) * self.cells
    }

    fn n(&self) -> usize {
        2 * self.nu()
    }

    /// u on vertical faces: x = i h (1 <= i < N), y = (j + 1/2) h.
    fn u(&self, i: usize, j: usize) -> usize {
        (i - 1) + j * (self.cells - 1)
    }

    /// v on horizontal faces: x = (i + 1/2) h, y = j h (1 <= j < N).
    fn v(&self, i: usize, j: usize) -> usize {
        self.nu() + i + (j - 1) * self.cells
    }

    fn position(&self, k: usize) -> (f64, f64) {
        let h = 1.0 / self.cells as f64;
        if k < self.nu() {
            let (i, j) = (k % (self.cells - 1) + 1, k / (self.cells - 1));
            (i as f64 * h, (j as f64 + 0.5) * h)
        } else {
            let k = k - self.nu();
            let (i, j) = (k % self.cells, k / self.cells + 1);
            ((i as f64 + 0.5) * h, j as f64 * h)
        }
    }
}

/// Velocity–pressure Stokes (optionally Oseen) flow in the unit square on a
/// staggered `cells x cells` grid with no-slip walls.
///
/// `E` is a lumped mass with a smoothly varying density, `A` the viscous
/// operator plus convection and reaction terms, and `J` the discrete
/// divergence with one pressure cell removed so that it has full row rank.
/// Inputs are smooth body forces in the horizontal direction centred on the
/// left part of the domain; outputs probe velocities on the right.
pub fn gen_stokes_dae2(cells: usize, m1: usize, m2: usize, p: usize, gamma: f64, opts: StokesOptions) -> Result<Dae2Problem> {
    if cells < 3 || gamma <= 0.0 || opts.viscosity <= 0.0 {
        return Err(Error::InvalidInput(format!("Stokes problem needs cells >= 3, gamma > 0, viscosity > 0 (cells={cells})")));
    }
    let g = StaggeredGrid { cells };
    let nn = cells;
    let h = 1.0 / nn as f64;
    let n = g.n();

    let density = |x: f64, y: f64| 1.0 + 0.5 * x + 0.25 * (std::f64::consts::PI * y).sin();
    let mut te = Vec::with_capacity(n);
    for k in 0..n {
        let (x, y) = g.position(k);
        te.push((k, k, h * h * density(x, y)));
    }
    let e = SparseMatrix::from_triplets(n, n, &te)?;

    let nu = opts.viscosity;
    let conv = opts.convection * h / 2.0;
    let mut ta = Vec::with_capacity(6 * n);
    for j in 0..nn {
        for i in 1..nn {
            let r = g.u(i, j);
            let mut diag = -4.0;
            if i > 1 {
                ta.push((r, g.u(i - 1, j), nu + conv));
            }
            if i + 1 < nn {
                ta.push((r, g.u(i + 1, j), nu - conv));
            }
            if j > 0 {
                ta.push((r, g.u(i, j - 1), nu));
            } else {
                diag -= 1.0;
            }
            if j + 1 < nn {
                ta.push((r, g.u(i, j + 1), nu));
            } else {
                diag -= 1.0;
            }
            ta.push((r, r, nu * diag));
        }
    }
    for j in 1..nn {
        for i in 0..nn {
            let r = g.v(i, j);
            let mut diag = -4.0;
            if i > 0 {
                ta.push((r, g.v(i - 1, j), nu + conv));
            } else {
                diag -= 1.0;
            }
            if i + 1 < nn {
                ta.push((r, g.v(i + 1, j), nu - conv));
            } else {
                diag -= 1.0;
            }
            if j > 1 {
                ta.push((r, g.v(i, j - 1), nu));
            }
            if j + 1 < nn {
                ta.push((r, g.v(i, j + 1), nu));
            }
            ta.push((r, r, nu * diag));
        }
    }
    let base = SparseMatrix::from_triplets(n, n, &ta)?;

    let mut tj = Vec::with_capacity(4 * nn * nn);
    let mut row = 0;
    for j in 0..nn {
        for i in 0..nn {
            if i == 0 && j == 0 {
                continue;
            }
            if i + 1 < nn {
                tj.push((row, g.u(i + 1, j), h));
            }
            if i > 0 {
                tj.push((row, g.u(i, j), -h));
            }
            if j + 1 < nn {
                tj.push((row, g.v(i, j + 1), h));
            }
            if j > 0 {
                tj.push((row, g.v(i, j), -h));
            }
            row += 1;
        }
    }
    let jm = SparseMatrix::from_triplets(nn * nn - 1, n, &tj)?;

    let m = m1 + m2;
    let mut force = Mat::zeros(n, m);
    let width = 0.12;
    for q in 0..m {
        let cy = (q as f64 + 1.0) / (m as f64 + 1.0);
        let cx = 0.3;
        for k in 0..g.nu() {
            let (x, y) = g.position(k);
            let d2 = (x - cx).powi(2) + (y - cy).powi(2);
            force[(k, q)] = (-d2 / (2.0 * width * width)).exp();
        }
    }
    let b = e.mul_dense(&force);
    let b1 = b.columns(0, m1).into_owned() / gamma;
    let b2 = b.columns(m1, m2).into_owned();
    let mut c = Mat::zeros(p, n);
    for k in 0..p {
        let ty = (k as f64 + 1.0) / (p as f64 + 1.0);
        let target = (0.75, ty);
        let want_v = k % 2 == 1;
        let range = if want_v { g.nu()..n } else { 0..g.nu() };
        let best = range
            .min_by(|&a, &b| {
                let da = dist2(g.position(a), target);
                let db = dist2(g.position(b), target);
                da.total_cmp(&db).then(a.cmp(&b))
            })
            .expect("grid has velocity unknowns");
        c[(k, best)] = 1.0;
    }

    let mut prob = Dae2Problem { a: base.clone(), e: e.clone(), j: jm, b1, b2, c, gamma, unstable: None };
    let mut placed = None;
    let rate = match opts.growth {
        Growth::Fixed(r) => r,
        Growth::Unstable(count) => {
            let mut vals = crate::inner::spectrum::dae2_rightmost(&prob, count + 2)?;
            vals.sort_by(|a, b| b.re.total_cmp(&a.re));
            if vals.len() < count + 1 {
                return Err(Error::NoConvergence("rightmost Stokes eigenvalues".into()));
            }
            let mut k = count;
            while k > 0 && k < vals.len() && (vals[k - 1].re - vals[k].re).abs() <= 1e-9 * vals[k].norm() {
                k += 1;
            }
            placed = Some(k);
            if k == 0 {
                if vals[0].re < 0.0 {
                    0.0
                } else {
                    -vals[0].re - 1.0
                }
            } else if k < vals.len() {
                -0.5 * (vals[k - 1].re + vals[k].re)
            } else {
                return Err(Error::NoConvergence("not enough Stokes eigenvalues to place the growth rate".into()));
            }
        }
    };
    if rate != 0.0 {
        prob.a = base.add(1.0, &e, rate)?;
    }
    prob.unstable = if prob.n() <= 1500 { Some(dae2_unstable_count(&prob)?) } else { placed };
    Ok(prob)
}

fn dist2(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)
}

/// Counts eigenvalues of the projected pencil in the closed right half
/// plane by restricting to an orthonormal basis of `ker J`.
pub fn dae2_unstable_count(prob: &Dae2Problem) -> Result<usize> {
    let (a, e) = dae2_reduced_pencil(prob)?;
    Ok(pencil_eigenvalues(&a, &e)?.iter().filter(|z| z.re >= 0.0).count())
}

/// `(NᵀAN, NᵀEN)` for an orthonormal basis `N` of `ker J`.
pub fn dae2_reduced_pencil(prob: &Dae2Problem) -> Result<(Mat, Mat)> {
    let n = prob.n();
    let jd = prob.j.to_dense();
    let (vals, vecs) = crate::linalg::sym_eig_desc(&(jd.transpose() * &jd));
    let top = vals.first().copied().unwrap_or(0.0);
    let rank = vals.iter().filter(|&&v| v > 1e-12 * top).count();
    let basis = vecs.columns(rank, n - rank).into_owned();
    let a = basis.transpose() * prob.a.mul_dense(&basis);
    let e = basis.transpose() * prob.e.mul_dense(&basis);
    Ok((a, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_problem_has_requested_unstable_count() {
        let p = gen_random_care(60, 2, 3, 4, 5, 8.0, 7).unwrap();
        let vals = pencil_eigenvalues(&p.a.to_dense(), &p.dense_e()).unwrap();
        let count = vals.iter().filter(|z| z.re > 0.0).count();
        assert_eq!(Some(count), p.unstable);
        assert!(count >= 5 && count <= 6);
    }

    #[test]
    fn same_seed_same_matrices() {
        let a = gen_random_care(20, 1, 1, 1, 2, 2.0, 11).unwrap();
        let b = gen_random_care(20, 1, 1, 1, 2, 2.0, 11).unwrap();
        assert_eq!(a.a.to_dense(), b.a.to_dense());
        assert_eq!(a.b1, b.b1);
    }

    #[test]
    fn heat_operator_rows_and_shapes() {
        let p = gen_heat_fd(50, 3, 3, 6, 2.0).unwrap();
        assert_eq!((p.b1.ncols(), p.b2.ncols(), p.c.nrows()), (3, 3, 6));
        let a = p.a.to_dense();
        for i in 0..50 {
            assert!(a.row(i).sum() <= 1e-12);
        }
    }

    #[test]
    fn stokes_divergence_has_full_row_rank() {
        let p = gen_stokes_dae2(6, 1, 1, 4, 50.0, StokesOptions::default()).unwrap();
        let jd = p.j.to_dense();
        let s = (&jd * jd.transpose()).symmetric_eigenvalues();
        assert!(s.min() > 1e-10 * s.max());
        assert_eq!(p.unstable, Some(0));
    }
}
