use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Solver for the definite Riccati equation of each outer step.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum InnerMethod {
    #[default]
    Radi,
    Sign,
}

/// How shifted systems with a low-rank update are solved.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SolveStrategy {
    /// Bordered system `[[Φ, V], [Uᵀ, I]]`.
    #[default]
    Augmented,
    /// Sherman–Morrison–Woodbury on top of the unmodified matrix.
    Smw,
}

/// Shift selection inside RADI.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ShiftStrategy {
    /// Eigenvalues of the Hamiltonian of the residual equation projected
    /// onto the latest solution block.
    #[default]
    Hamiltonian,
    /// Ritz values of the closed-loop pencil on the latest blocks.
    Projection,
    /// A fixed cyclic list (complex shifts must appear in conjugate pairs).
    Fixed(Vec<Complex64>),
}

/// Options for the outer and inner iterations.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    /// Outer stopping threshold on `‖B1ᵀ Y Yᵀ E‖₂`.
    pub tau: f64,
    pub max_outer: usize,
    pub inner: InnerMethod,
    /// Relative residual tolerance of every inner solve.
    pub inner_tol: f64,
    /// Loosen inner solves early on: the tolerance of step `k` becomes
    /// `max(inner_tol, min(0.1 τ, 0.01 final_res_{k-1}))`.
    pub adaptive_inner_tol: bool,
    pub inner_max_iter: usize,
    /// Consecutive RADI steps without improvement before giving up.
    pub stagnation_window: usize,
    pub strategy: SolveStrategy,
    pub shifts: ShiftStrategy,
    /// Eigenvalues of `ZᵀZ` below this fraction of the largest are dropped
    /// when compressing, so `ZZᵀ` changes by at most this much relative.
    pub compression_tol: f64,
    /// Abort when the factor rank exceeds this.
    pub max_rank: usize,
    /// Abort when the stopping quantity grows by this factor over two steps.
    pub divergence_factor: f64,
    /// Compute a Bernoulli feedback when an outer-step operator is unstable.
    pub bernoulli: bool,
    pub unstable_cap: usize,
    /// Target of the shift-and-invert eigensolver used for large stability checks.
    pub eig_target: f64,
    pub eig_count: usize,
    /// Largest dimension handled with dense O(n³) kernels.
    pub dense_cap: usize,
    /// Hautus test on every dense outer iterate (`None`: dense path only).
    pub check_stabilizability: Option<bool>,
    /// Record wall-clock seconds in traces (disable for byte-stable output).
    pub record_timing: bool,
    /// Outer residual metrics at every step instead of only at the end.
    pub metrics_every_step: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tau: 1e-9,
            max_outer: 30,
            inner: InnerMethod::Radi,
            inner_tol: 1e-13,
            adaptive_inner_tol: false,
            inner_max_iter: 600,
            stagnation_window: 25,
            strategy: SolveStrategy::Augmented,
            shifts: ShiftStrategy::Hamiltonian,
            compression_tol: 1e-14,
            max_rank: 2000,
            divergence_factor: 10.0,
            bernoulli: true,
            unstable_cap: 24,
            eig_target: 0.0,
            eig_count: 8,
            dense_cap: 600,
            check_stabilizability: None,
            record_timing: true,
            metrics_every_step: true,
        }
    }
}
