//! Left-looking sparse LU (Gilbert–Peierls) with threshold partial pivoting
//! and a minimum-degree column ordering.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap};

use nalgebra::DMatrix;

use super::scalar::Scalar;
use super::sparse::CscMatrix;
use crate::error::{Error, Result};
use crate::par;

const NONE: usize = usize::MAX;

/// Relative size a diagonal entry needs to be preferred as pivot.
pub const PIVOT_THRESHOLD: f64 = 0.1;

/// Minimum-degree ordering of the symmetric pattern `A + Aᵀ`.
///
/// Ties are broken by index, so the ordering is deterministic.
pub fn minimum_degree<T: Scalar>(a: &CscMatrix<T>) -> Vec<usize> {
    let n = a.n;
    let mut adj: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for j in 0..n {
        for &i in a.column(j).0 {
            if i != j {
                adj[i].insert(j);
                adj[j].insert(i);
            }
        }
    }
    let mut heap: BinaryHeap<Reverse<(usize, usize)>> = (0..n).map(|v| Reverse((adj[v].len(), v))).collect();
    let mut done = vec![false; n];
    let mut order = Vec::with_capacity(n);
    while let Some(Reverse((deg, v))) = heap.pop() {
        if done[v] || deg != adj[v].len() {
            continue;
        }
        done[v] = true;
        order.push(v);
        let nbrs: Vec<usize> = std::mem::take(&mut adj[v]).into_iter().collect();
        for &u in &nbrs {
            adj[u].remove(&v);
            for &w in &nbrs {
                if w != u {
                    adj[u].insert(w);
                }
            }
            heap.push(Reverse((adj[u].len(), u)));
        }
    }
    order
}

/// `P A Q = L U` with unit lower `L`.
#[derive(Clone, Debug)]
pub struct SparseLu<T: Scalar> {
    n: usize,
    q: Vec<usize>,
    pinv: Vec<usize>,
    l: CscMatrix<T>,
    u: CscMatrix<T>,
}

impl<T: Scalar> SparseLu<T> {
    /// Factors `a` with the given column order (minimum degree if `None`).
    pub fn factor(a: &CscMatrix<T>, order: Option<&[usize]>) -> Result<Self> {
        let n = a.n;
        let q: Vec<usize> = match order {
            Some(o) => {
                if o.len() != n {
                    return Err(Error::DimensionMismatch(format!("ordering of length {} for n = {n}", o.len())));
                }
                o.to_vec()
            }
            None => minimum_degree(a),
        };
        let norm = a.norm1();
        if n > 0 && (norm == 0.0 || !norm.is_finite()) {
            return Err(Error::SingularMatrix { context: format!("sparse LU of a matrix with norm {norm}") });
        }
        let thresh = f64::EPSILON * norm;
        let mut lp = vec![0; n + 1];
        let mut li: Vec<usize> = Vec::with_capacity(4 * a.nnz());
        let mut lx: Vec<T> = Vec::with_capacity(4 * a.nnz());
        let mut up = vec![0; n + 1];
        let mut ui: Vec<usize> = Vec::with_capacity(4 * a.nnz());
        let mut ux: Vec<T> = Vec::with_capacity(4 * a.nnz());
        let mut pinv = vec![NONE; n];
        let mut x = vec![T::zero(); n];
        let mut ws = Workspace::new(n);
        for k in 0..n {
            lp[k] = li.len();
            up[k] = ui.len();
            let col = q[k];
            let top = ws.reach(&lp, &li, a, col, &pinv);
            for &i in &ws.xi[top..] {
                x[i] = T::zero();
            }
            let (rows, vals) = a.column(col);
            for (&i, &v) in rows.iter().zip(vals) {
                x[i] = v;
            }
            for &j in &ws.xi[top..] {
                let jj = pinv[j];
                if jj == NONE {
                    continue;
                }
                let xj = x[j];
                for p in lp[jj] + 1..lp[jj + 1] {
                    x[li[p]] -= lx[p] * xj;
                }
            }
            let mut ipiv = NONE;
            let mut best = -1.0;
            for &i in &ws.xi[top..] {
                if pinv[i] == NONE {
                    let t = x[i].modulus();
                    if t > best {
                        best = t;
                        ipiv = i;
                    }
                } else {
                    ui.push(pinv[i]);
                    ux.push(x[i]);
                }
            }
            if ipiv == NONE || best <= thresh {
                return Err(Error::SingularMatrix { context: format!("sparse LU pivot {k} of {n}") });
            }
            if pinv[col] == NONE && x[col].modulus() >= best * PIVOT_THRESHOLD {
                ipiv = col;
            }
            let pivot = x[ipiv];
            ui.push(k);
            ux.push(pivot);
            pinv[ipiv] = k;
            li.push(ipiv);
            lx.push(T::one());
            for &i in &ws.xi[top..] {
                if pinv[i] == NONE {
                    li.push(i);
                    lx.push(x[i] / pivot);
                }
                x[i] = T::zero();
            }
        }
        lp[n] = li.len();
        up[n] = ui.len();
        for r in li.iter_mut() {
            *r = pinv[*r];
        }
        Ok(Self { n, q, pinv, l: CscMatrix { n, colptr: lp, rowidx: li, values: lx }, u: CscMatrix { n, colptr: up, rowidx: ui, values: ux } })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Nonzeros in `L` and `U`.
    pub fn fill(&self) -> (usize, usize) {
        (self.l.nnz(), self.u.nnz())
    }

    /// Solves `A X = B`.
    pub fn solve(&self, b: &DMatrix<T>) -> DMatrix<T> {
        let n = self.n;
        assert_eq!(b.nrows(), n, "sparse LU solve: row mismatch");
        let mut out = DMatrix::<T>::zeros(n, b.ncols());
        par::for_each_column(out.as_mut_slice(), n, |c, dst| {
            let mut x = vec![T::zero(); n];
            for (i, &v) in b.column(c).iter().enumerate() {
                x[self.pinv[i]] = v;
            }
            let l = &self.l;
            for j in 0..n {
                let xj = x[j];
                if xj != T::zero() {
                    for p in l.colptr[j] + 1..l.colptr[j + 1] {
                        x[l.rowidx[p]] -= l.values[p] * xj;
                    }
                }
            }
            let u = &self.u;
            for j in (0..n).rev() {
                let end = u.colptr[j + 1] - 1;
                x[j] /= u.values[end];
                let xj = x[j];
                if xj != T::zero() {
                    for p in u.colptr[j]..end {
                        x[u.rowidx[p]] -= u.values[p] * xj;
                    }
                }
            }
            for k in 0..n {
                dst[self.q[k]] = x[k];
            }
        });
        out
    }
}

struct Workspace {
    xi: Vec<usize>,
    stack: Vec<usize>,
    pstack: Vec<usize>,
    mark: Vec<bool>,
}

impl Workspace {
    fn new(n: usize) -> Self {
        Self { xi: vec![0; n], stack: vec![0; n], pstack: vec![0; n], mark: vec![false; n] }
    }

    /// Nonzero pattern of `L \ A(:, col)` in topological order, stored in
    /// `xi[top..]`.
    fn reach<T: Scalar>(&mut self, lp: &[usize], li: &[usize], a: &CscMatrix<T>, col: usize, pinv: &[usize]) -> usize {
        let n = self.xi.len();
        let mut top = n;
        for &start in a.column(col).0 {
            if self.mark[start] {
                continue;
            }
            let mut head = 0usize;
            self.stack[0] = start;
            loop {
                let j = self.stack[head];
                let jj = pinv[j];
                if !self.mark[j] {
                    self.mark[j] = true;
                    self.pstack[head] = if jj == NONE { 0 } else { lp[jj] };
                }
                let end = if jj == NONE { 0 } else { lp[jj + 1] };
                let mut descended = false;
                let mut p = self.pstack[head];
                while p < end {
                    let i = li[p];
                    p += 1;
                    if !self.mark[i] {
                        self.pstack[head] = p;
                        head += 1;
                        self.stack[head] = i;
                        descended = true;
                        break;
                    }
                }
                if !descended {
                    self.pstack[head] = p;
                    top -= 1;
                    self.xi[top] = j;
                    if head == 0 {
                        break;
                    }
                    head -= 1;
                }
            }
        }
        for &i in &self.xi[top..] {
            self.mark[i] = false;
        }
        top
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn laplacian_with_border(n: usize, w: usize) -> CscMatrix<f64> {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 4.0));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.5));
            }
        }
        for b in 0..w {
            for i in 0..n {
                t.push((i, n + b, ((i + b) % 5) as f64 * 0.1));
                t.push((n + b, i, ((i * 3 + b) % 7) as f64 * 0.05));
            }
            t.push((n + b, n + b, 1.0));
        }
        CscMatrix::from_triplets(n + w, t)
    }

    #[test]
    fn bordered_system_solves() {
        let a = laplacian_with_border(300, 4);
        let lu = SparseLu::factor(&a, None).unwrap();
        let b = DMatrix::from_fn(304, 2, |i, j| (i as f64).sin() + j as f64);
        let x = lu.solve(&b);
        assert!((a.mul_dense(&x) - &b).norm() < 1e-10 * b.norm());
    }

    #[test]
    fn saddle_point_with_zero_block() {
        // [[2, 0, 1], [0, 3, 1], [1, 1, 0]]
        let t = vec![(0, 0, 2.0), (1, 1, 3.0), (0, 2, 1.0), (1, 2, 1.0), (2, 0, 1.0), (2, 1, 1.0)];
        let a = CscMatrix::from_triplets(3, t);
        let lu = SparseLu::factor(&a, None).unwrap();
        let b = DMatrix::from_column_slice(3, 1, &[1.0, 2.0, 3.0]);
        assert!((a.mul_dense(&lu.solve(&b)) - &b).norm() < 1e-13);
    }

    #[test]
    fn complex_shifted_system() {
        let n = 50;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, Complex64::new(-2.0, 0.7)));
            if i + 1 < n {
                t.push((i, i + 1, Complex64::new(1.0, 0.0)));
                t.push((i + 1, i, Complex64::new(1.0, 0.0)));
            }
        }
        let a = CscMatrix::from_triplets(n, t);
        let lu = SparseLu::factor(&a, None).unwrap();
        let b = DMatrix::from_fn(n, 1, |i, _| Complex64::new(i as f64, 1.0));
        assert!((a.mul_dense(&lu.solve(&b)) - &b).norm() < 1e-12 * b.norm());
    }

    #[test]
    fn structurally_singular_matrix_is_reported() {
        let a = CscMatrix::from_triplets(2, vec![(0, 0, 1.0), (1, 0, 1.0)]);
        assert!(matches!(SparseLu::factor(&a, None), Err(Error::SingularMatrix { .. })));
    }

    #[test]
    fn minimum_degree_is_a_permutation() {
        let a = laplacian_with_border(40, 2);
        let mut o = minimum_degree(&a);
        assert_eq!(o[40..], [40, 41]);
        o.sort();
        assert_eq!(o, (0..42).collect::<Vec<_>>());
    }
}
