//! Per-step records of an outer iteration, written as JSON lines or CSV.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::inner::InnerStats;

/// One outer step.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub step: usize,
    /// `‖B1ᵀ Y Yᵀ E‖₂` of the new increment.
    pub guard: f64,
    /// `guard² / ‖CCᵀ‖₂`, equal to `‖R(X_{k+1})‖₂ / ‖CCᵀ‖₂` for exact inner solves.
    pub final_res: f64,
    pub relative_res: Option<f64>,
    pub normalized_res: Option<f64>,
    pub rank: usize,
    pub increment_rank: usize,
    pub seconds: Option<f64>,
    pub inner: InnerStats,
}

#[derive(Serialize)]
struct CsvRow {
    step: usize,
    final_res: f64,
    relative_res: Option<f64>,
    normalized_res: Option<f64>,
    rank: usize,
    seconds: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct IterationTrace {
    pub records: Vec<IterationRecord>,
}

impl IterationTrace {
    pub fn push(&mut self, r: IterationRecord) {
        self.records.push(r);
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn write_jsonl(&self, out: &mut impl Write) -> Result<()> {
        for r in &self.records {
            serde_json::to_writer(&mut *out, r)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for r in &self.records {
            w.serialize(CsvRow {
                step: r.step,
                final_res: r.final_res,
                relative_res: r.relative_res,
                normalized_res: r.normalized_res,
                rank: r.rank,
                seconds: r.seconds,
            })?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_jsonl(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_jsonl(&mut f)?;
        f.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }

    pub fn load_jsonl(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let records = text.lines().filter(|l| !l.trim().is_empty()).map(serde_json::from_str).collect::<std::result::Result<_, _>>()?;
        Ok(Self { records })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_has_fixed_columns_and_blank_missing_values() {
        let mut t = IterationTrace::default();
        t.push(IterationRecord { step: 0, guard: 1.0, final_res: 0.5, rank: 3, ..Default::default() });
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "step,final_res,relative_res,normalized_res,rank,seconds\n0,0.5,,,3,\n");
    }

    #[test]
    fn jsonl_round_trip() {
        let mut t = IterationTrace::default();
        t.push(IterationRecord { step: 2, guard: 1e-3, final_res: 1e-6, relative_res: Some(1e-9), rank: 7, ..Default::default() });
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.jsonl");
        t.save_jsonl(&path).unwrap();
        assert_eq!(IterationTrace::load_jsonl(&path).unwrap(), t);
    }
}
