//! Householder QR, factor compression and spectral norms of factored
//! symmetric matrices.

use nalgebra::{DMatrix, SymmetricEigen};

use super::scalar::{gemm, Mat, Op};

const NB: usize = 32;

/// Thin QR factorization `A = Q R` of a matrix with at least as many rows
/// as columns. `Q` has orthonormal columns and `R` is upper triangular.
pub fn thin_qr(a: &Mat) -> (Mat, Mat) {
    let (m, k) = a.shape();
    assert!(m >= k, "thin_qr needs rows >= cols, got {m}x{k}");
    let mut f = a.clone();
    let mut tau = vec![0.0; k];
    let mut blocks = Vec::new();
    let mut j0 = 0;
    while j0 < k {
        let jb = NB.min(k - j0);
        for j in j0..j0 + jb {
            tau[j] = householder_column(&mut f, j, j0 + jb);
        }
        let (v, t) = block_reflector(&f, &tau, j0, jb);
        if j0 + jb < k {
            // A2 <- (I - V T Vᵀ)ᵀ A2
            let mut a2 = f.view_mut((j0, j0 + jb), (m - j0, k - j0 - jb));
            let mut w = Mat::zeros(jb, k - j0 - jb);
            gemm(1.0, &v, Op::T, &a2, Op::N, 0.0, &mut w);
            let tw = t.transpose() * &w;
            gemm(-1.0, &v, Op::N, &tw, Op::N, 1.0, &mut a2);
        }
        blocks.push((j0, v, t));
        j0 += jb;
    }
    let r = Mat::from_fn(k, k, |i, j| if i <= j { f[(i, j)] } else { 0.0 });
    let mut q = Mat::zeros(m, k);
    for i in 0..k {
        q[(i, i)] = 1.0;
    }
    for (j0, v, t) in blocks.iter().rev() {
        let mut q2 = q.view_mut((*j0, *j0), (m - j0, k - j0));
        let mut w = Mat::zeros(v.ncols(), k - j0);
        gemm(1.0, v, Op::T, &q2, Op::N, 0.0, &mut w);
        let tw = t * &w;
        gemm(-1.0, v, Op::N, &tw, Op::N, 1.0, &mut q2);
    }
    (q, r)
}

/// Reduces column `j` below the diagonal, applies the reflector to the
/// remaining columns of the current panel and returns its `tau`. The
/// reflector vector is left below the diagonal with an implicit unit head.
fn householder_column(f: &mut Mat, j: usize, panel_end: usize) -> f64 {
    let m = f.nrows();
    let alpha = f[(j, j)];
    let tail_norm = f.view((j + 1, j), (m - j - 1, 1)).norm();
    if tail_norm == 0.0 {
        return 0.0;
    }
    let norm = alpha.hypot(tail_norm);
    let beta = if alpha >= 0.0 { -norm } else { norm };
    let tau = (beta - alpha) / beta;
    let scale = 1.0 / (alpha - beta);
    for i in j + 1..m {
        f[(i, j)] *= scale;
    }
    f[(j, j)] = beta;
    let data = f.as_mut_slice();
    let (head, tail) = data.split_at_mut((j + 1) * m);
    let v = &head[j * m..];
    for c in 0..panel_end - j - 1 {
        let col = &mut tail[c * m..(c + 1) * m];
        let mut s = col[j];
        for i in j + 1..m {
            s += v[i] * col[i];
        }
        s *= tau;
        col[j] -= s;
        for i in j + 1..m {
            col[i] -= s * v[i];
        }
    }
    tau
}

/// Explicit `V` and triangular `T` with `H_j0 ⋯ H_{j0+jb-1} = I - V T Vᵀ`.
fn block_reflector(f: &Mat, tau: &[f64], j0: usize, jb: usize) -> (Mat, Mat) {
    let m = f.nrows();
    let mut v = Mat::zeros(m - j0, jb);
    for c in 0..jb {
        v[(c, c)] = 1.0;
        for i in c + 1..m - j0 {
            v[(i, c)] = f[(j0 + i, j0 + c)];
        }
    }
    let mut t = Mat::zeros(jb, jb);
    for i in 0..jb {
        let ti = tau[j0 + i];
        t[(i, i)] = ti;
        if i > 0 && ti != 0.0 {
            let vi = v.column(i);
            let z = v.columns(0, i).tr_mul(&vi) * (-ti);
            let tz = t.view((0, 0), (i, i)) * z;
            t.view_mut((0, i), (i, 1)).copy_from(&tz);
        }
    }
    (v, t)
}

/// Eigen-decomposition of a symmetric matrix with eigenvalues in
/// descending order.
pub fn sym_eig_desc(m: &Mat) -> (Vec<f64>, Mat) {
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = Mat::from_fn(m.nrows(), order.len(), |i, j| eig.eigenvectors[(i, order[j])]);
    (vals, vecs)
}

/// Replaces `Z` by a factor with fewer columns and `Z'Z'ᵀ ≈ ZZᵀ`.
///
/// Eigenvalues of `ZZᵀ` below `tol * λ_max` are discarded, so
/// `‖Z'Z'ᵀ - ZZᵀ‖₂ ≤ tol ‖ZZᵀ‖₂`.
pub fn compress_factor(z: &Mat, tol: f64) -> Mat {
    let (n, r) = z.shape();
    if r == 0 || n == 0 {
        return Mat::zeros(n, 0);
    }
    let (basis, core) = if n >= r {
        let (q, rf) = thin_qr(z);
        (Some(q), &rf * rf.transpose())
    } else {
        (None, z * z.transpose())
    };
    let (vals, vecs) = sym_eig_desc(&core);
    let top = vals.first().copied().unwrap_or(0.0);
    if top <= 0.0 {
        return Mat::zeros(n, 0);
    }
    let keep = vals.iter().take_while(|&&v| v > tol * top).count();
    let mut scaled = vecs.columns(0, keep).into_owned();
    for (j, mut col) in scaled.column_iter_mut().enumerate() {
        col *= vals[j].sqrt();
    }
    match basis {
        Some(q) => super::scalar::mul(&q, &scaled),
        None => scaled,
    }
}

/// `‖G S Gᵀ‖₂` for tall `G` and small symmetric `S`, without forming the
/// outer product.
pub fn spectral_norm_sym_lowrank(g: &Mat, s: &Mat) -> f64 {
    let (n, k) = g.shape();
    assert_eq!(s.shape(), (k, k), "core matrix shape mismatch");
    if n == 0 || k == 0 {
        return 0.0;
    }
    let small = if n >= k {
        let (_, r) = thin_qr(g);
        &r * s * r.transpose()
    } else {
        g * s * g.transpose()
    };
    sym_eig_desc(&small).0.iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
}

/// Spectral norm of a general (small) matrix.
pub fn norm2(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    let gram = if m.nrows() <= m.ncols() { super::mul_nt(m, m) } else { super::mul_tn(m, m) };
    sym_norm2(&gram).sqrt()
}

/// Spectral norm of a symmetric matrix (only its symmetric part is used).
pub fn sym_norm2(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    let s = (m + m.transpose()) * 0.5;
    s.symmetric_eigenvalues().iter().fold(0.0, |acc: f64, v| acc.max(v.abs()))
}
