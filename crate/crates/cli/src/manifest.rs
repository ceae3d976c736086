//! Run manifests: a problem source, solver options, an output directory and
//! the metrics to report.
//!
//! ```json
//! { "name": "rand512-s1",
//!   "problem": { "generator": { "kind": "random", "n": 512, "m1": 2, "m2": 6, "p": 5,
//!                               "unstable": 3, "gamma": 3.0 },
//!                "seed": 1 },
//!   "options": { "tau": 1e-9 },
//!   "out": "runs/rand512-s1",
//!   "metrics": ["final_res", "relative_res", "normalized_res", "solution_norm"] }
//! ```
//!
//! `problem.files` may replace `problem.generator`; it names a problem
//! manifest relative to the run manifest. A problem manifest (recognized by
//! its top-level `kind` key) is also accepted in place of a run manifest.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use riccati_core::problem::generators::{gen_heat_fd, gen_random_care, gen_stokes_dae2, StokesOptions};
use riccati_core::problem::{load_problem, InnerMethod, Problem, ProblemManifest, SolveStrategy, SolverOptions};
use riccati_core::{Error, Result};

/// Synthetic problem families.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeneratorSpec {
    /// Dense random pencil with a given number of unstable eigenvalues.
    Random {
        n: usize,
        m1: usize,
        m2: usize,
        p: usize,
        #[serde(default)]
        unstable: usize,
        #[serde(default = "one")]
        gamma: f64,
    },
    /// Sparse 1D heat equation.
    Heat {
        n: usize,
        m1: usize,
        m2: usize,
        p: usize,
        #[serde(default = "one")]
        gamma: f64,
    },
    /// Index-2 Stokes flow on a square grid.
    Stokes {
        cells: usize,
        m1: usize,
        m2: usize,
        p: usize,
        #[serde(default = "one")]
        gamma: f64,
        #[serde(default)]
        flow: StokesOptions,
    },
}

fn one() -> f64 {
    1.0
}

impl GeneratorSpec {
    pub fn generate(&self, seed: u64) -> Result<Problem> {
        Ok(match *self {
            Self::Random { n, m1, m2, p, unstable, gamma } => Problem::Standard(gen_random_care(n, m1, m2, p, unstable, gamma, seed)?),
            Self::Heat { n, m1, m2, p, gamma } => Problem::Standard(gen_heat_fd(n, m1, m2, p, gamma)?),
            Self::Stokes { cells, m1, m2, p, gamma, flow } => Problem::Dae2(gen_stokes_dae2(cells, m1, m2, p, gamma, flow)?),
        })
    }
}

/// Where the coefficients come from. Exactly one of `files` and `generator`
/// must be set; `seed` only affects random generators.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ProblemSource {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub files: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<GeneratorSpec>,
    #[serde(default)]
    pub seed: u64,
}

/// Reported residual measures.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    FinalRes,
    RelativeRes,
    NormalizedRes,
    SolutionNorm,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::FinalRes, Metric::RelativeRes, Metric::NormalizedRes, Metric::SolutionNorm];

    fn all() -> Vec<Metric> {
        Self::ALL.to_vec()
    }
}

/// Everything needed to reproduce one solver run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub name: String,
    pub problem: ProblemSource,
    #[serde(default)]
    pub options: SolverOptions,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default = "Metric::all")]
    pub metrics: Vec<Metric>,
    /// Directory that relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

/// Command-line settings that take precedence over a manifest.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub tau: Option<f64>,
    pub inner: Option<InnerMethod>,
    pub strategy: Option<SolveStrategy>,
    pub seed: Option<u64>,
}

fn json_error(e: serde_json::Error) -> Error {
    Error::InvalidInput(format!("invalid manifest: {e}"))
}

impl RunManifest {
    /// Reads a run manifest or a bare problem manifest.
    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", path.display())))?;
        let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let value: Value = serde_json::from_str(&text).map_err(json_error)?;
        if value.get("kind").is_some() {
            ProblemManifest::from_json(&text)?;
            let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("problem").to_string();
            let files = path.file_name().map(PathBuf::from);
            let problem = ProblemSource { files, ..Default::default() };
            return Ok(Self { name, problem, options: SolverOptions::default(), out: None, metrics: Metric::all(), base_dir });
        }
        Self::from_value(value, base_dir)
    }

    /// Parses and validates a manifest whose paths are relative to `base_dir`.
    pub fn from_value(value: Value, base_dir: PathBuf) -> Result<Self> {
        let mut m: Self = serde_json::from_value(value).map_err(json_error)?;
        m.base_dir = base_dir;
        m.validate()?;
        Ok(m)
    }

    /// Checks the structure and, for file sources, the problem manifest keys.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidInput(msg));
        if self.name.is_empty() || self.name.contains(['/', '\\']) || self.name == "." || self.name == ".." {
            return bad(format!("run name '{}' must be a non-empty file name", self.name));
        }
        match (&self.problem.files, &self.problem.generator) {
            (Some(_), Some(_)) => return bad("manifest sets both 'problem.files' and 'problem.generator'".into()),
            (None, None) => return bad("manifest is missing required key 'problem.files' or 'problem.generator'".into()),
            (Some(f), None) => {
                ProblemManifest::read(self.base_dir.join(f))?;
            }
            (None, Some(_)) => {}
        }
        let o = &self.options;
        if !(o.tau > 0.0) || !(o.inner_tol > 0.0) {
            return bad(format!("tolerances must be positive (tau={}, inner_tol={})", o.tau, o.inner_tol));
        }
        Ok(())
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(tau) = o.tau {
            self.options.tau = tau;
        }
        if let Some(inner) = o.inner {
            self.options.inner = inner;
        }
        if let Some(strategy) = o.strategy {
            self.options.strategy = strategy;
        }
        if let Some(seed) = o.seed {
            self.problem.seed = seed;
        }
    }

    pub fn load_problem(&self) -> Result<Problem> {
        match (&self.problem.files, &self.problem.generator) {
            (Some(f), _) => load_problem(self.base_dir.join(f)),
            (None, Some(g)) => g.generate(self.problem.seed),
            (None, None) => Err(Error::InvalidInput("manifest has no problem source".into())),
        }
    }

    /// The manifest with paths made absolute, as written next to the results.
    pub fn resolved(&self) -> Self {
        let mut m = self.clone();
        if let Some(f) = &m.problem.files {
            m.problem.files = Some(absolute(&self.base_dir.join(f)));
        }
        m.out = m.out.as_ref().map(|o| absolute(&self.base_dir.join(o)));
        m
    }

    /// Output directory: `out` relative to the manifest, else `runs/<name>`.
    pub fn out_dir(&self) -> PathBuf {
        match &self.out {
            Some(o) => self.base_dir.join(o),
            None => PathBuf::from("runs").join(&self.name),
        }
    }

    pub fn wants(&self, metric: Metric) -> bool {
        self.metrics.contains(&metric)
    }
}

fn absolute(p: &Path) -> PathBuf {
    std::path::absolute(p).unwrap_or_else(|_| p.to_path_buf())
}
