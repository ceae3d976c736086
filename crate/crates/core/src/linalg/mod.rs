//! Dense and sparse linear algebra kernels.

pub mod dense_lu;
pub mod eig;
pub mod mtx;
pub mod qr;
pub mod scalar;
pub mod sparse;
pub mod sparse_lu;

pub use dense_lu::{solve_dense, DenseLu};
pub use eig::{pencil_eigenvalues, small_dense_eig, spectral_abscissa, SchurForm};
pub use qr::{compress_factor, norm2, spectral_norm_sym_lowrank, sym_eig_desc, sym_norm2, thin_qr};
pub use scalar::{gemm, hcat, mul, mul_nt, mul_tn, CMat, Mat, Op, Scalar};
pub use sparse::{CscMatrix, SparseMatrix};
pub use sparse_lu::SparseLu;
