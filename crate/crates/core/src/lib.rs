//! Solvers for continuous-time algebraic Riccati equations whose quadratic
//! term is indefinite,
//!
//! ```text
//! AᵀXE + EᵀXA + EᵀX(B1B1ᵀ - B2B2ᵀ)XE + CᵀC = 0,
//! ```
//!
//! as they arise in H∞ control. The stabilizing solution is built as a sum of
//! solutions of definite Riccati equations; the large-scale path keeps every
//! iterate as a low-rank factor `X ≈ ZZᵀ` and supports index-2 descriptor
//! systems through implicit projection.

pub mod error;
pub mod inner;
pub mod linalg;
pub mod par;
pub mod problem;
pub mod riccati;
pub mod shifted;

pub use error::{Error, Result};
