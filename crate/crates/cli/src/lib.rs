//! Command-line front end for the Riccati solvers: problem generation,
//! single runs, benchmark suites and residual audits.

pub mod commands;
pub mod manifest;
pub mod table;

pub use commands::{exit_code, run_bench, run_gen, run_solve, run_verify, Suite};
pub use manifest::{GeneratorSpec, Metric, Overrides, ProblemSource, RunManifest};
pub use table::{ResultRow, ResultTable, RunStatus, RunSummary};
