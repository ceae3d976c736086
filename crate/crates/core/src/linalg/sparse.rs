//! Compressed sparse row storage.

use nalgebra::DMatrix;

use super::scalar::{Mat, Scalar};
use crate::error::{Error, Result};
use crate::par;

/// Real CSR matrix with sorted, duplicate-free column indices per row.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Builds from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        if let Some(&(i, j, _)) = triplets.iter().find(|t| t.0 >= nrows || t.1 >= ncols) {
            return Err(Error::InvalidInput(format!("entry ({i}, {j}) outside a {nrows}x{ncols} matrix")));
        }
        let mut sorted: Vec<(usize, usize, f64)> = triplets.to_vec();
        sorted.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut indptr = vec![0; nrows + 1];
        let mut indices = Vec::with_capacity(sorted.len());
        let mut values: Vec<f64> = Vec::with_capacity(sorted.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in sorted {
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
            } else {
                indices.push(j);
                values.push(v);
                indptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..nrows {
            indptr[i + 1] += indptr[i];
        }
        Ok(Self { nrows, ncols, indptr, indices, values })
    }

    pub fn identity(n: usize) -> Self {
        Self { nrows: n, ncols: n, indptr: (0..=n).collect(), indices: (0..n).collect(), values: vec![1.0; n] }
    }

    /// Keeps entries with `|a_ij| > drop_tol`.
    pub fn from_dense(m: &Mat, drop_tol: f64) -> Self {
        let mut t = Vec::new();
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                if m[(i, j)].abs() > drop_tol {
                    t.push((i, j, m[(i, j)]));
                }
            }
        }
        Self::from_triplets(m.nrows(), m.ncols(), &t).expect("indices are in range")
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nrows, self.ncols)
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.indptr[i]..self.indptr[i + 1];
        (&self.indices[r.clone()], &self.values[r])
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |i| {
            let (c, v) = self.row(i);
            c.iter().zip(v).map(move |(&j, &x)| (i, j, x))
        })
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (c, v) = self.row(i);
        c.binary_search(&j).map(|k| v[k]).unwrap_or(0.0)
    }

    pub fn transpose(&self) -> Self {
        let t: Vec<_> = self.triplets().map(|(i, j, v)| (j, i, v)).collect();
        Self::from_triplets(self.ncols, self.nrows, &t).expect("indices are in range")
    }

    pub fn to_dense(&self) -> Mat {
        let mut m = Mat::zeros(self.nrows, self.ncols);
        for (i, j, v) in self.triplets() {
            m[(i, j)] += v;
        }
        m
    }

    /// `alpha * self + beta * other`.
    pub fn add(&self, alpha: f64, other: &Self, beta: f64) -> Result<Self> {
        if self.shape() != other.shape() {
            return Err(Error::DimensionMismatch(format!("sparse add {:?} + {:?}", self.shape(), other.shape())));
        }
        let t: Vec<_> = self.triplets().map(|(i, j, v)| (i, j, alpha * v)).chain(other.triplets().map(|(i, j, v)| (i, j, beta * v))).collect();
        Self::from_triplets(self.nrows, self.ncols, &t)
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        let mut s = self.clone();
        s.values.iter_mut().for_each(|v| *v *= alpha);
        s
    }

    pub fn is_diagonal(&self) -> bool {
        self.triplets().all(|(i, j, _)| i == j)
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).collect()
    }

    /// `A X` for a dense block `X`.
    pub fn mul_dense<T: Scalar>(&self, x: &DMatrix<T>) -> DMatrix<T> {
        assert_eq!(x.nrows(), self.ncols, "sparse product: inner dimensions differ");
        let mut y = DMatrix::<T>::zeros(self.nrows, x.ncols());
        par::for_each_column(y.as_mut_slice(), self.nrows, |c, out| {
            let xc = x.column(c);
            for (i, o) in out.iter_mut().enumerate() {
                let (cols, vals) = self.row(i);
                let mut s = T::zero();
                for (&j, &v) in cols.iter().zip(vals) {
                    s += xc[j] * T::lift(v);
                }
                *o = s;
            }
        });
        y
    }

    /// `Aᵀ X` for a dense block `X`.
    pub fn mul_dense_transpose<T: Scalar>(&self, x: &DMatrix<T>) -> DMatrix<T> {
        assert_eq!(x.nrows(), self.nrows, "sparse transpose product: dimensions differ");
        let mut y = DMatrix::<T>::zeros(self.ncols, x.ncols());
        par::for_each_column(y.as_mut_slice(), self.ncols, |c, out| {
            let xc = x.column(c);
            for i in 0..self.nrows {
                let xi = xc[i];
                if xi == T::zero() {
                    continue;
                }
                let (cols, vals) = self.row(i);
                for (&j, &v) in cols.iter().zip(vals) {
                    out[j] += xi * T::lift(v);
                }
            }
        });
        y
    }
}

/// Square compressed sparse column matrix over a generic scalar, the input
/// format of the sparse LU.
#[derive(Clone, Debug)]
pub struct CscMatrix<T> {
    pub n: usize,
    pub colptr: Vec<usize>,
    pub rowidx: Vec<usize>,
    pub values: Vec<T>,
}

impl<T: Scalar> CscMatrix<T> {
    /// Builds an `n x n` matrix from triplets; duplicates are summed.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, T)>) -> Self {
        triplets.sort_by(|a, b| (a.1, a.0).cmp(&(b.1, b.0)));
        let mut colptr = vec![0; n + 1];
        let mut rowidx = Vec::with_capacity(triplets.len());
        let mut values: Vec<T> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in triplets {
            debug_assert!(i < n && j < n);
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
            } else {
                rowidx.push(i);
                values.push(v);
                colptr[j + 1] += 1;
                last = Some((i, j));
            }
        }
        for j in 0..n {
            colptr[j + 1] += colptr[j];
        }
        Self { n, colptr, rowidx, values }
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn column(&self, j: usize) -> (&[usize], &[T]) {
        let r = self.colptr[j]..self.colptr[j + 1];
        (&self.rowidx[r.clone()], &self.values[r])
    }

    /// Maximum absolute column sum.
    pub fn norm1(&self) -> f64 {
        (0..self.n).map(|j| self.column(j).1.iter().map(|v| v.modulus()).sum::<f64>()).fold(0.0, f64::max)
    }

    pub fn mul_dense(&self, x: &DMatrix<T>) -> DMatrix<T> {
        let mut y = DMatrix::<T>::zeros(self.n, x.ncols());
        for c in 0..x.ncols() {
            for j in 0..self.n {
                let xj = x[(j, c)];
                let (rows, vals) = self.column(j);
                for (&i, &v) in rows.iter().zip(vals) {
                    y[(i, c)] += v * xj;
                }
            }
        }
        y
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicates_are_summed_and_products_match_dense() {
        let a = SparseMatrix::from_triplets(3, 2, &[(0, 0, 1.0), (2, 1, 2.0), (0, 0, 0.5), (1, 1, -1.0)]).unwrap();
        assert_eq!(a.nnz(), 3);
        assert_eq!(a.get(0, 0), 1.5);
        let d = a.to_dense();
        let x = Mat::from_fn(2, 2, |i, j| (i + 2 * j) as f64 + 1.0);
        assert!((a.mul_dense(&x) - &d * &x).norm() < 1e-14);
        let y = Mat::from_fn(3, 2, |i, j| (i * j) as f64 - 1.0);
        assert!((a.mul_dense_transpose(&y) - d.transpose() * &y).norm() < 1e-14);
        assert_eq!(a.transpose().to_dense(), d.transpose());
    }

    #[test]
    fn out_of_range_entry_is_rejected() {
        assert!(SparseMatrix::from_triplets(2, 2, &[(2, 0, 1.0)]).is_err());
    }
}
