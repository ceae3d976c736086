//! Riccati iteration for the indefinite equation.
//!
//! Every outer step solves one definite Riccati equation
//!
//! ```text
//! A_kᵀ W E + Eᵀ W A_k - Eᵀ W B2 B2ᵀ W E + G Gᵀ = 0,
//! A_k = A + (B1B1ᵀ - B2B2ᵀ) X_k E,
//! ```
//!
//! adds its solution to `X_k`, and stops once `‖B1ᵀ W E‖₂ ≤ τ`. The new
//! residual is exactly `Eᵀ W B1 B1ᵀ W E`, which supplies the next constant
//! term `G = Eᵀ Y (Yᵀ B1)` for `W = Y Yᵀ`. The low-rank variant keeps
//! `X_k = Z Zᵀ` and never forms an `n × n` matrix.

pub mod dense;
pub mod metrics;
pub mod trace;

use std::sync::Arc;
use std::time::Instant;

use nalgebra::linalg::Hessenberg;

use crate::error::{Error, Result};
use crate::inner::{bernoulli_feedback, solve_inner, DefiniteCare, InnerStats};
use crate::linalg::{compress_factor, hcat, mul, mul_tn, DenseLu, Mat};
use crate::problem::{CareProblem, Coeff, InnerMethod, Problem, SolveStrategy, SolverOptions};
use crate::shifted::{Dae2Base, Dae2Operator, DenseForm, ShiftedOperator, ShiftedSolveReport, SparsePlusLowRank, StandardBase};

pub use dense::{check_stabilizability, solve_ri_dense, solve_ri_dense_with, DenseRiResult};
pub use metrics::{care_residual_dense, guard_norm, outer_residual_metrics, ResidualEvaluator, ResidualMetrics};
pub use trace::{IterationRecord, IterationTrace};

enum Base {
    Standard(Arc<StandardBase>),
    Dae2(Arc<Dae2Base>),
}

/// The problem in the coordinates the iteration runs in.
///
/// Dense standard problems are reduced once to `E = I` with `A` upper
/// Hessenberg: `E⁻¹A = Q H Qᵀ`, `B ↦ QᵀE⁻¹B`, `C ↦ CQ`. A factor `Z'` in
/// these coordinates maps back to `Z = E⁻ᵀ Q Z'`.
pub struct WorkingSystem {
    base: Base,
    b1: Mat,
    b2: Mat,
    ct: Mat,
    back: Option<Mat>,
}

impl WorkingSystem {
    pub fn new(problem: &Problem) -> Result<Self> {
        match problem {
            Problem::Standard(p) => match &p.a {
                Coeff::Sparse(_) => Ok(Self {
                    base: Base::Standard(Arc::new(StandardBase::from_problem(p)?)),
                    b1: p.b1.clone(),
                    b2: p.b2.clone(),
                    ct: p.c.transpose(),
                    back: None,
                }),
                Coeff::Dense(a) => Self::hessenberg(p, a),
            },
            Problem::Dae2(p) => {
                let base = Arc::new(Dae2Base::new(p.clone())?);
                let ct = base.pi_t(&p.c.transpose());
                Ok(Self { b1: p.b1.clone(), b2: p.b2.clone(), ct, back: None, base: Base::Dae2(base) })
            }
        }
    }

    fn hessenberg(p: &CareProblem, a: &Mat) -> Result<Self> {
        let (ea, eb1, eb2, elu) = match &p.e {
            Some(e) => {
                let lu = DenseLu::factor(e.to_dense()).map_err(|_| Error::InvalidInput("E is singular".into()))?;
                (lu.solve(a), lu.solve(&p.b1), lu.solve(&p.b2), Some(lu))
            }
            None => (a.clone(), p.b1.clone(), p.b2.clone(), None),
        };
        let (q, h) = Hessenberg::new(ea).unpack();
        let back = match &elu {
            Some(lu) => lu.solve_transpose(&q),
            None => q.clone(),
        };
        Ok(Self {
            base: Base::Standard(Arc::new(StandardBase::dense(DenseForm::Hessenberg { h }))),
            b1: mul_tn(&q, &eb1),
            b2: mul_tn(&q, &eb2),
            ct: mul_tn(&q, &p.c.transpose()),
            back: Some(back),
        })
    }

    pub fn n(&self) -> usize {
        self.ct.nrows()
    }

    /// Operator for `A_k = A + U Vᵀ`.
    pub fn operator(&self, u: Mat, v: Mat, strategy: SolveStrategy) -> Result<Box<dyn ShiftedOperator>> {
        Ok(match &self.base {
            Base::Standard(b) => Box::new(SparsePlusLowRank::new(b.clone(), u, v, strategy)?),
            Base::Dae2(b) => Box::new(Dae2Operator::new(b.clone(), u, v, strategy)?),
        })
    }

    /// Operator of step `k` for `X_k = Z Zᵀ`.
    pub fn step_operator(&self, z: &Mat, strategy: SolveStrategy) -> Result<Box<dyn ShiftedOperator>> {
        let n = self.n();
        if z.ncols() == 0 {
            return self.operator(Mat::zeros(n, 0), Mat::zeros(n, 0), strategy);
        }
        let probe = self.operator(Mat::zeros(n, 0), Mat::zeros(n, 0), strategy)?;
        let etz = probe.apply_e(z, true);
        let u = hcat(&[&self.b1, &(-&self.b2)]);
        let v = hcat(&[&mul(&etz, &mul_tn(z, &self.b1)), &mul(&etz, &mul_tn(z, &self.b2))]);
        self.operator(u, v, strategy)
    }

    /// Maps a factor back to the coordinates of the problem.
    pub fn to_original(&self, z: &Mat) -> Mat {
        match &self.back {
            Some(m) => mul(m, z),
            None => z.clone(),
        }
    }
}

/// Outcome of the low-rank Riccati iteration.
#[derive(Clone, Debug)]
pub struct LrriResult {
    /// `X ≈ Z Zᵀ` in the coordinates of the problem.
    pub factor: Mat,
    /// Factor of the last increment, in the same coordinates.
    pub increment: Mat,
    pub steps: usize,
    pub guard: f64,
    /// Measures of the returned factor; `final_res` is recomputed from
    /// `increment` so that it can be audited from the two factors alone.
    pub metrics: ResidualMetrics,
    pub trace: IterationTrace,
    pub report: ShiftedSolveReport,
    /// Unstable eigenvalues removed by Bernoulli feedback, summed over steps.
    pub bernoulli_unstable: usize,
}

/// State after one outer step, handed to observers.
pub struct StepView<'a> {
    pub step: usize,
    pub guard: f64,
    pub record: &'a IterationRecord,
    system: &'a WorkingSystem,
    factor: &'a Mat,
    increment: &'a Mat,
}

impl StepView<'_> {
    /// `Z_{k+1}` in the coordinates of the problem.
    pub fn factor(&self) -> Mat {
        self.system.to_original(self.factor)
    }

    /// Factor `Y` of the increment `W_k = Y Yᵀ`.
    pub fn increment(&self) -> Mat {
        self.system.to_original(self.increment)
    }
}

pub fn solve_lrri(problem: &Problem, opts: &SolverOptions) -> Result<LrriResult> {
    solve_lrri_with(problem, opts, &mut |_| {})
}

/// Runs the low-rank Riccati iteration, calling `observer` after every step.
pub fn solve_lrri_with(problem: &Problem, opts: &SolverOptions, observer: &mut dyn FnMut(&StepView)) -> Result<LrriResult> {
    let system = WorkingSystem::new(problem)?;
    let evaluator = match (&system.base, problem) {
        (Base::Dae2(b), _) => ResidualEvaluator::dae2(b.clone()),
        (_, Problem::Standard(p)) => ResidualEvaluator::standard(p),
        (_, Problem::Dae2(_)) => unreachable!("index-2 problems always get an index-2 base"),
    };
    let n = system.n();
    let cc = evaluator.cc_norm();
    let mut z = Mat::zeros(n, 0);
    let mut g = system.ct.clone();
    let mut trace = IterationTrace::default();
    let mut report = ShiftedSolveReport::default();
    let mut guards: Vec<f64> = Vec::new();
    let mut bernoulli_unstable = 0;
    let mut may_be_unstable = problem.unstable() != Some(0);
    let start = Instant::now();

    for step in 0..opts.max_outer {
        let wrap = |e: Error| Error::InnerSolverFailure { step, source: Box::new(e) };
        let op = system.step_operator(&z, opts.strategy)?;
        if opts.check_stabilizability == Some(true) {
            if let Some((a, e)) = op.dense_pencil(opts.dense_cap) {
                if !check_stabilizability(&a, &e, &system.b2)? {
                    return Err(Error::NotStabilizable(format!("(A_{step}, B2, E) fails the Hautus test")));
                }
            }
        }
        let mut step_unstable = 0;
        let initial = if may_be_unstable && opts.bernoulli && opts.inner == InnerMethod::Radi {
            let fb = bernoulli_feedback(op.as_ref(), &system.b2, opts).map_err(wrap)?;
            if fb.unstable > 0 {
                log::info!("step {step}: Bernoulli stabilization of {} unstable eigenvalue(s)", fb.unstable);
            }
            // Once an outer-step operator is stable, all later ones are too.
            may_be_unstable = fb.unstable > 0;
            step_unstable = fb.unstable;
            bernoulli_unstable += fb.unstable;
            (fb.unstable > 0).then_some(fb.factor)
        } else {
            None
        };
        let tol = match guards.last() {
            Some(&gd) if opts.adaptive_inner_tol => {
                let prev = gd * gd / cc.max(f64::MIN_POSITIVE);
                opts.inner_tol.max((0.1 * opts.tau).min(1e-2 * prev))
            }
            _ => opts.inner_tol,
        };
        let care = DefiniteCare { op: op.as_ref(), b: &system.b2, g: g.clone(), initial };
        let inner = solve_inner(&care, opts.inner, tol, opts).map_err(wrap)?;
        let y = inner.factor;
        let et_y = op.apply_e(&y, true);
        let guard = guard_norm(&system.b1, &y, &et_y);
        z = compress_factor(&hcat(&[&z, &y]), opts.compression_tol);
        if z.ncols() > opts.max_rank {
            return Err(Error::NotStabilizable(format!("factor rank {} exceeds the limit {}", z.ncols(), opts.max_rank)));
        }
        let step_report = op.report();
        report.merge(&step_report);

        let final_res = guard * guard / cc.max(f64::MIN_POSITIVE);
        let converged = guard <= opts.tau;
        let increment = converged.then(|| system.to_original(&y));
        let metrics = (opts.metrics_every_step || converged).then(|| evaluator.metrics(&system.to_original(&z), increment.as_ref()));
        let record = IterationRecord {
            step,
            guard,
            final_res,
            relative_res: metrics.map(|m| m.relative_res),
            normalized_res: metrics.map(|m| m.normalized_res),
            rank: z.ncols(),
            increment_rank: y.ncols(),
            seconds: opts.record_timing.then(|| start.elapsed().as_secs_f64()),
            inner: InnerStats {
                method: format!("{:?}", opts.inner).to_lowercase(),
                iterations: inner.iterations,
                residual: inner.residual,
                rank: y.ncols(),
                bernoulli_unstable: step_unstable,
                shifted: step_report,
                history: inner.history,
            },
        };
        log::info!("step {step}: guard {guard:.3e}, final_res {final_res:.3e}, rank {}, inner iterations {}", z.ncols(), inner.iterations);
        observer(&StepView { step, guard, record: &record, system: &system, factor: &z, increment: &y });
        trace.push(record);

        if converged {
            let factor = system.to_original(&z);
            let (Some(increment), Some(metrics)) = (increment, metrics) else { unreachable!("computed for the converged step") };
            return Ok(LrriResult { factor, increment, steps: step + 1, guard, metrics, trace, report, bernoulli_unstable });
        }
        if !guard.is_finite() || (step >= 2 && guard * guard > opts.divergence_factor * guards[step - 2] * guards[step - 2]) {
            return Err(Error::NotStabilizable(format!("final residual grew to {final_res:.3e} at step {step}")));
        }
        guards.push(guard);
        g = mul(&et_y, &mul_tn(&y, &system.b1));
    }
    Err(Error::MaxOuterExceeded(opts.max_outer))
}
