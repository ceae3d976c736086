//! Result rows, benchmark tables and per-run summaries.

use std::path::Path;

use serde::{Deserialize, Serialize};

use riccati_core::shifted::ShiftedSolveReport;
use riccati_core::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Converged,
    Failed,
}

/// One benchmark row. Unselected metrics and values of failed runs are empty.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub name: String,
    pub status: RunStatus,
    pub steps: Option<usize>,
    /// Wall-clock seconds of the outer solve, excluding I/O.
    pub runtime_s: Option<f64>,
    pub rank: Option<usize>,
    pub final_res: Option<f64>,
    pub relative_res: Option<f64>,
    pub normalized_res: Option<f64>,
    pub solution_norm: Option<f64>,
    pub error: Option<String>,
}

/// Contents of `summary.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    #[serde(flatten)]
    pub row: ResultRow,
    /// Process exit code of `solve` for this run.
    pub exit_code: i32,
    pub n: Option<usize>,
    pub bernoulli_unstable: Option<usize>,
    pub inner_iterations: Option<usize>,
    pub shifted: Option<ShiftedSolveReport>,
}

impl RunSummary {
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

/// Rows of a benchmark suite with a fixed column set.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    pub rows: Vec<ResultRow>,
}

impl ResultTable {
    pub fn write_csv(&self, out: impl std::io::Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for r in &self.rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        self.write_csv(std::fs::File::create(dir.join("results.csv"))?)?;
        std::fs::write(dir.join("results.json"), serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_columns_are_fixed() {
        let row = ResultRow {
            name: "a".into(),
            status: RunStatus::Failed,
            steps: None,
            runtime_s: Some(0.5),
            rank: None,
            final_res: None,
            relative_res: None,
            normalized_res: None,
            solution_norm: None,
            error: Some("boom".into()),
        };
        let mut buf = Vec::new();
        ResultTable { rows: vec![row] }.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "name,status,steps,runtime_s,rank,final_res,relative_res,normalized_res,solution_norm,error\na,failed,,0.5,,,,,,boom\n");
    }
}
