//! JSON problem manifests pointing at MatrixMarket files.
//!
//! ```json
//! { "kind": "standard",
//!   "files": { "A": "A.mtx", "E": "E.mtx", "B1": "B1.mtx", "B2": "B2.mtx", "C": "C.mtx" },
//!   "gamma": 8.0,
//!   "notes": "free text" }
//! ```
//!
//! `kind` is `standard` or `dae2` (which also needs `J`). Paths are relative
//! to the manifest. `B1` is stored unscaled; loading divides it by `gamma`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{CareProblem, Coeff, Dae2Problem, Problem};
use crate::error::{Error, Result};
use crate::linalg::mtx::{read_mtx, write_dense, write_sparse, MtxData};
use crate::linalg::Mat;

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ProblemManifest {
    pub kind: String,
    pub files: BTreeMap<String, String>,
    #[serde(default = "one")]
    pub gamma: f64,
    #[serde(default)]
    pub notes: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unstable: Option<usize>,
}

fn one() -> f64 {
    1.0
}

fn require<'a>(v: &'a Value, key: &str, what: &str) -> Result<&'a Value> {
    v.get(key).ok_or_else(|| Error::InvalidInput(format!("manifest is missing required key '{what}'")))
}

impl ProblemManifest {
    /// Parses and checks required keys, naming the first missing one.
    pub fn from_json(text: &str) -> Result<Self> {
        let v: Value = serde_json::from_str(text)?;
        let kind = require(&v, "kind", "kind")?.as_str().ok_or_else(|| Error::InvalidInput("manifest key 'kind' must be a string".into()))?;
        if kind != "standard" && kind != "dae2" {
            return Err(Error::InvalidInput(format!("unknown problem kind '{kind}'")));
        }
        let files = require(&v, "files", "files")?;
        let mut keys = vec!["A", "B1", "B2", "C"];
        if kind == "dae2" {
            keys.extend(["E", "J"]);
        }
        for k in keys {
            require(files, k, &format!("files.{k}"))?;
        }
        let m: Self = serde_json::from_value(v)?;
        if !(m.gamma > 0.0) {
            return Err(Error::InvalidInput(format!("gamma must be positive, got {}", m.gamma)));
        }
        Ok(m)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Loads a problem described by a manifest file.
pub fn load_problem(manifest: impl AsRef<Path>) -> Result<Problem> {
    let path = manifest.as_ref();
    let m = ProblemManifest::read(path)?;
    let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    load_from_manifest(&m, &dir)
}

/// Loads a problem whose file paths are relative to `dir`.
pub fn load_from_manifest(m: &ProblemManifest, dir: &Path) -> Result<Problem> {
    let file = |k: &str| -> Option<PathBuf> { m.files.get(k).map(|f| dir.join(f)) };
    let read = |k: &str| -> Result<MtxData> {
        let p = file(k).ok_or_else(|| Error::InvalidInput(format!("manifest is missing required key 'files.{k}'")))?;
        read_mtx(p)
    };
    let coeff = |d: MtxData| match d {
        MtxData::Sparse(s) => Coeff::Sparse(s),
        MtxData::Dense(d) => Coeff::Dense(d),
    };
    let b1 = read("B1")?.into_dense() / m.gamma;
    let b2 = read("B2")?.into_dense();
    let c = read("C")?.into_dense();
    match m.kind.as_str() {
        "standard" => {
            let a = coeff(read("A")?);
            let e = if m.files.contains_key("E") { Some(coeff(read("E")?)) } else { None };
            let mut p = CareProblem::new(a, e, b1, b2, c)?;
            p.gamma = m.gamma;
            p.unstable = m.unstable;
            Ok(Problem::Standard(p))
        }
        "dae2" => {
            let p = Dae2Problem {
                a: read("A")?.into_sparse(),
                e: read("E")?.into_sparse(),
                j: read("J")?.into_sparse(),
                b1,
                b2,
                c,
                gamma: m.gamma,
                unstable: m.unstable,
            };
            p.validate()?;
            Ok(Problem::Dae2(p))
        }
        other => Err(Error::InvalidInput(format!("unknown problem kind '{other}'"))),
    }
}

fn write_coeff(path: &Path, c: &Coeff) -> Result<()> {
    match c {
        Coeff::Dense(d) => write_dense(path, d),
        Coeff::Sparse(s) => write_sparse(path, s),
    }
}

/// Writes the matrices and a `problem.json` manifest into `dir`.
pub fn save_problem(dir: impl AsRef<Path>, problem: &Problem, notes: &str) -> Result<PathBuf> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let mut files = BTreeMap::new();
    let mut put = |key: &str, f: &dyn Fn(&Path) -> Result<()>| -> Result<()> {
        let name = format!("{key}.mtx");
        f(&dir.join(&name))?;
        files.insert(key.to_string(), name);
        Ok(())
    };
    let (kind, gamma, unstable, b1, b2, c): (&str, f64, Option<usize>, &Mat, &Mat, &Mat) = match problem {
        Problem::Standard(p) => {
            put("A", &|f| write_coeff(f, &p.a))?;
            if let Some(e) = &p.e {
                put("E", &|f| write_coeff(f, e))?;
            }
            ("standard", p.gamma, p.unstable, &p.b1, &p.b2, &p.c)
        }
        Problem::Dae2(p) => {
            put("A", &|f| write_sparse(f, &p.a))?;
            put("E", &|f| write_sparse(f, &p.e))?;
            put("J", &|f| write_sparse(f, &p.j))?;
            ("dae2", p.gamma, p.unstable, &p.b1, &p.b2, &p.c)
        }
    };
    let b1_raw = b1 * gamma;
    put("B1", &|f| write_dense(f, &b1_raw))?;
    put("B2", &|f| write_dense(f, b2))?;
    put("C", &|f| write_dense(f, c))?;
    let manifest = ProblemManifest { kind: kind.into(), files, gamma, notes: notes.into(), unstable };
    let path = dir.join("problem.json");
    std::fs::write(&path, serde_json::to_string_pretty(&manifest)?)?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn missing_b2_is_named() {
        let text = r#"{"kind": "standard", "files": {"A": "A.mtx", "B1": "B1.mtx", "C": "C.mtx"}}"#;
        let err = ProblemManifest::from_json(text).unwrap_err().to_string();
        assert!(err.contains("files.B2"), "{err}");
    }

    #[test]
    fn save_and_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = super::super::gen_heat_fd(30, 1, 2, 3, 2.0).unwrap();
        let path = save_problem(dir.path(), &Problem::Standard(p.clone()), "heat").unwrap();
        let Problem::Standard(q) = load_problem(&path).unwrap() else { panic!("wrong kind") };
        assert_eq!(q.a.to_dense(), p.a.to_dense());
        assert!((q.b1 - &p.b1).norm() <= 1e-15 * p.b1.norm());
        assert_eq!(q.gamma, 2.0);
    }
}
