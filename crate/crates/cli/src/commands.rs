//! The `solve`, `bench`, `verify` and `gen` commands.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::Value;

use riccati_core::linalg::mtx::{read_mtx, write_dense};
use riccati_core::linalg::Mat;
use riccati_core::problem::{save_problem, Problem};
use riccati_core::riccati::{outer_residual_metrics, solve_lrri, IterationTrace, LrriResult, ResidualMetrics};
use riccati_core::{Error, Result};

use crate::manifest::{Metric, Overrides, RunManifest};
use crate::table::{ResultRow, ResultTable, RunStatus, RunSummary};

/// Process exit code for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err.root() {
        Error::NotStabilizable(_) => 2,
        Error::MaxOuterExceeded(_) => 3,
        Error::Io(_) | Error::Json(_) | Error::Csv(_) | Error::Parse { .. } | Error::InvalidInput(_) | Error::DimensionMismatch(_) => 4,
        _ => 1,
    }
}

#[derive(Serialize)]
struct HistoryRow {
    step: usize,
    guard: f64,
    final_res: f64,
    relative_res: Option<f64>,
    normalized_res: Option<f64>,
    rank: usize,
    increment_rank: usize,
    inner_iterations: usize,
    inner_residual: f64,
}

#[derive(Serialize)]
struct InnerRow {
    step: usize,
    iteration: usize,
    residual: f64,
}

/// Outer convergence history without timings, so reruns are byte-identical.
pub fn write_history_csv(trace: &IterationTrace, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in &trace.records {
        w.serialize(HistoryRow {
            step: r.step,
            guard: r.guard,
            final_res: r.final_res,
            relative_res: r.relative_res,
            normalized_res: r.normalized_res,
            rank: r.rank,
            increment_rank: r.increment_rank,
            inner_iterations: r.inner.iterations,
            inner_residual: r.inner.residual,
        })?;
    }
    w.flush()?;
    Ok(())
}

/// Residual after every inner iteration of every outer step.
pub fn write_inner_csv(trace: &IterationTrace, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in &trace.records {
        for (iteration, &residual) in r.inner.history.iter().enumerate() {
            w.serialize(InnerRow { step: r.step, iteration, residual })?;
        }
    }
    w.flush()?;
    Ok(())
}

fn converged_summary(m: &RunManifest, n: usize, res: &LrriResult, seconds: f64) -> RunSummary {
    let pick = |metric: Metric, v: Option<f64>| if m.wants(metric) { v } else { None };
    let metrics = &res.metrics;
    RunSummary {
        row: ResultRow {
            name: m.name.clone(),
            status: RunStatus::Converged,
            steps: Some(res.steps),
            runtime_s: Some(seconds),
            rank: Some(res.factor.ncols()),
            final_res: pick(Metric::FinalRes, metrics.final_res),
            relative_res: pick(Metric::RelativeRes, Some(metrics.relative_res)),
            normalized_res: pick(Metric::NormalizedRes, Some(metrics.normalized_res)),
            solution_norm: pick(Metric::SolutionNorm, Some(metrics.solution_norm)),
            error: None,
        },
        exit_code: 0,
        n: Some(n),
        bernoulli_unstable: Some(res.bernoulli_unstable),
        inner_iterations: Some(res.trace.records.iter().map(|r| r.inner.iterations).sum()),
        shifted: Some(res.report.clone()),
    }
}

fn failed_summary(m: &RunManifest, n: Option<usize>, err: &Error, seconds: Option<f64>) -> RunSummary {
    RunSummary {
        row: ResultRow {
            name: m.name.clone(),
            status: RunStatus::Failed,
            steps: None,
            runtime_s: seconds,
            rank: None,
            final_res: None,
            relative_res: None,
            normalized_res: None,
            solution_norm: None,
            error: Some(err.to_string()),
        },
        exit_code: exit_code(err),
        n,
        bernoulli_unstable: None,
        inner_iterations: None,
        shifted: None,
    }
}

/// Runs one manifest and writes its artifacts into `out`.
///
/// Problem and solver failures are recorded in the returned summary; only
/// errors while writing artifacts are returned as `Err`.
pub fn run_solve(m: &RunManifest, out: &Path) -> Result<RunSummary> {
    std::fs::create_dir_all(out)?;
    std::fs::write(out.join("run.json"), serde_json::to_string_pretty(&m.resolved())? + "\n")?;
    let problem = match m.load_problem() {
        Ok(p) => p,
        Err(e) => {
            log::error!("{}: {e}", m.name);
            let s = failed_summary(m, None, &e, None);
            s.save(out.join("summary.json"))?;
            return Ok(s);
        }
    };
    let n = problem.n();
    log::info!("{}: solving a problem of size {n}", m.name);
    let start = Instant::now();
    let result = solve_lrri(&problem, &m.options);
    let seconds = start.elapsed().as_secs_f64();
    let summary = match result {
        Ok(res) => {
            write_dense(out.join("Z.mtx"), &res.factor)?;
            write_dense(out.join("increment.mtx"), &res.increment)?;
            res.trace.save_jsonl(out.join("trace.jsonl"))?;
            write_history_csv(&res.trace, &out.join("trace.csv"))?;
            write_inner_csv(&res.trace, &out.join("inner.csv"))?;
            log::info!("{}: {} steps, rank {}, {seconds:.2} s", m.name, res.steps, res.factor.ncols());
            converged_summary(m, n, &res, seconds)
        }
        Err(e) => {
            log::error!("{}: {e}", m.name);
            failed_summary(m, Some(n), &e, Some(seconds))
        }
    };
    summary.save(out.join("summary.json"))?;
    Ok(summary)
}

/// A list of runs sharing one output directory.
#[derive(Clone, Debug)]
pub struct Suite {
    pub name: String,
    pub runs: Vec<RunManifest>,
}

impl Suite {
    /// Reads `{"name": ..., "runs": [...]}` or a bare array. Entries are run
    /// manifests or paths to them, relative to the suite file.
    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let value: Value = serde_json::from_str(&text).map_err(|e| Error::InvalidInput(format!("invalid suite: {e}")))?;
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("suite").to_string();
        let (name, entries) = match value {
            Value::Array(a) => (stem, a),
            Value::Object(mut o) => {
                let name = o.get("name").and_then(Value::as_str).map(String::from).unwrap_or(stem);
                match o.remove("runs") {
                    Some(Value::Array(a)) => (name, a),
                    _ => return Err(Error::InvalidInput("suite is missing required key 'runs'".into())),
                }
            }
            _ => return Err(Error::InvalidInput("suite must be an object or an array".into())),
        };
        let runs = entries
            .into_iter()
            .enumerate()
            .map(|(i, e)| {
                let run = match e {
                    Value::String(p) => RunManifest::read(base.join(p)),
                    other => RunManifest::from_value(other, base.clone()),
                };
                run.map_err(|err| Error::InvalidInput(format!("suite entry {i}: {err}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut seen = BTreeSet::new();
        for r in &runs {
            if !seen.insert(&r.name) {
                return Err(Error::InvalidInput(format!("run name '{}' appears twice in the suite", r.name)));
            }
        }
        Ok(Self { name, runs })
    }
}

/// Runs every row into `out/<row name>` and writes `results.csv` and
/// `results.json`. Failed rows are recorded and the suite continues.
pub fn run_bench(suite: &Suite, out: &Path, overrides: &Overrides) -> Result<ResultTable> {
    std::fs::create_dir_all(out)?;
    let mut runs = suite.runs.clone();
    for r in &mut runs {
        r.apply(overrides);
        r.validate()?;
    }
    let mut table = ResultTable::default();
    for r in &runs {
        let summary = run_solve(r, &out.join(&r.name))?;
        table.rows.push(summary.row);
    }
    table.save(out)?;
    Ok(table)
}

fn read_factor(path: &Path, n: usize, what: &str) -> Result<Mat> {
    let z = read_mtx(path)?.into_dense();
    if z.nrows() != n {
        return Err(Error::DimensionMismatch(format!("{what} has {} rows but the problem has size {n}", z.nrows())));
    }
    Ok(z)
}

/// Recomputes the residual metrics of `ZZᵀ` from files alone.
pub fn run_verify(m: &RunManifest, factor: &Path, increment: Option<&Path>) -> Result<ResidualMetrics> {
    let problem = m.load_problem()?;
    verify_problem(&problem, factor, increment)
}

pub fn verify_problem(problem: &Problem, factor: &Path, increment: Option<&Path>) -> Result<ResidualMetrics> {
    let n = problem.n();
    let z = read_factor(factor, n, "factor")?;
    let y = increment.map(|p| read_factor(p, n, "increment")).transpose()?;
    outer_residual_metrics(problem, &z, y.as_ref())
}

/// Writes the problem of a manifest as MatrixMarket files plus `problem.json`.
pub fn run_gen(m: &RunManifest, out: &Path) -> Result<PathBuf> {
    let problem = m.load_problem()?;
    let notes = serde_json::to_string(&m.problem)?;
    save_problem(out, &problem, &notes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_the_root_error() {
        assert_eq!(exit_code(&Error::NotStabilizable("x".into())), 2);
        assert_eq!(exit_code(&Error::InnerSolverFailure { step: 1, source: Box::new(Error::MaxOuterExceeded(3)) }), 3);
        assert_eq!(exit_code(&Error::InvalidInput("x".into())), 4);
        assert_eq!(exit_code(&Error::NoConvergence("x".into())), 1);
    }
}
