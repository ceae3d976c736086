//! MatrixMarket reading and writing.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::scalar::Mat;
use super::sparse::SparseMatrix;
use crate::error::{Error, Result};

/// Contents of a MatrixMarket file.
#[derive(Clone, Debug)]
pub enum MtxData {
    Sparse(SparseMatrix),
    Dense(Mat),
}

impl MtxData {
    pub fn shape(&self) -> (usize, usize) {
        match self {
            MtxData::Sparse(s) => s.shape(),
            MtxData::Dense(d) => d.shape(),
        }
    }

    pub fn into_dense(self) -> Mat {
        match self {
            MtxData::Sparse(s) => s.to_dense(),
            MtxData::Dense(d) => d,
        }
    }

    pub fn into_sparse(self) -> SparseMatrix {
        match self {
            MtxData::Sparse(s) => s,
            MtxData::Dense(d) => SparseMatrix::from_dense(&d, 0.0),
        }
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Symmetry {
    General,
    Symmetric,
    Skew,
}

/// Reads a real `coordinate` or `array` MatrixMarket file.
pub fn read_mtx(path: impl AsRef<Path>) -> Result<MtxData> {
    let path = path.as_ref();
    let shown = path.display().to_string();
    let fail = |line: usize, msg: &str| Error::Parse { path: shown.clone(), message: format!("line {line}: {msg}") };
    let reader = BufReader::new(File::open(path)?);
    let mut lines = reader.lines().enumerate();

    let (_, header) = lines.next().ok_or_else(|| fail(1, "empty file"))?;
    let header = header?.to_ascii_lowercase();
    let tokens: Vec<&str> = header.split_whitespace().collect();
    if tokens.len() < 5 || tokens[0] != "%%matrixmarket" || tokens[1] != "matrix" {
        return Err(fail(1, "missing %%MatrixMarket matrix header"));
    }
    let coordinate = match tokens[2] {
        "coordinate" => true,
        "array" => false,
        other => return Err(fail(1, &format!("unsupported format '{other}'"))),
    };
    let pattern = match tokens[3] {
        "real" | "integer" | "double" => false,
        "pattern" if coordinate => true,
        other => return Err(fail(1, &format!("unsupported field '{other}'"))),
    };
    let symmetry = match tokens[4] {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        "skew-symmetric" => Symmetry::Skew,
        other => return Err(fail(1, &format!("unsupported symmetry '{other}'"))),
    };

    let mut data = lines.filter_map(|(no, l)| match l {
        Ok(s) if s.trim().is_empty() || s.trim_start().starts_with('%') => None,
        Ok(s) => Some(Ok((no + 1, s))),
        Err(e) => Some(Err(e)),
    });
    let (size_no, size_line) = data.next().ok_or_else(|| fail(2, "missing size line"))??;
    let sizes: Vec<usize> =
        size_line.split_whitespace().map(|t| t.parse::<usize>().map_err(|_| fail(size_no, &format!("bad size '{t}'")))).collect::<Result<_>>()?;
    let parse_f = |no: usize, t: &str| t.parse::<f64>().map_err(|_| fail(no, &format!("bad value '{t}'")));

    if coordinate {
        if sizes.len() != 3 {
            return Err(fail(size_no, "coordinate size line needs rows, cols, nnz"));
        }
        let (nr, nc, nnz) = (sizes[0], sizes[1], sizes[2]);
        let mut trip = Vec::with_capacity(if symmetry == Symmetry::General { nnz } else { 2 * nnz });
        for _ in 0..nnz {
            let (no, line) = data.next().ok_or_else(|| fail(size_no, "fewer entries than declared"))??;
            let t: Vec<&str> = line.split_whitespace().collect();
            if t.len() < if pattern { 2 } else { 3 } {
                return Err(fail(no, "incomplete entry"));
            }
            let i: usize = t[0].parse().map_err(|_| fail(no, "bad row index"))?;
            let j: usize = t[1].parse().map_err(|_| fail(no, "bad column index"))?;
            if i == 0 || j == 0 || i > nr || j > nc {
                return Err(fail(no, &format!("index ({i}, {j}) out of range")));
            }
            let v = if pattern { 1.0 } else { parse_f(no, t[2])? };
            trip.push((i - 1, j - 1, v));
            if i != j {
                match symmetry {
                    Symmetry::Symmetric => trip.push((j - 1, i - 1, v)),
                    Symmetry::Skew => trip.push((j - 1, i - 1, -v)),
                    Symmetry::General => {}
                }
            }
        }
        Ok(MtxData::Sparse(SparseMatrix::from_triplets(nr, nc, &trip)?))
    } else {
        if sizes.len() != 2 {
            return Err(fail(size_no, "array size line needs rows, cols"));
        }
        let (nr, nc) = (sizes[0], sizes[1]);
        let mut m = Mat::zeros(nr, nc);
        let mut slots = Vec::with_capacity(nr * nc);
        for j in 0..nc {
            for i in 0..nr {
                match symmetry {
                    Symmetry::General => slots.push((i, j)),
                    Symmetry::Symmetric if i >= j => slots.push((i, j)),
                    Symmetry::Skew if i > j => slots.push((i, j)),
                    _ => {}
                }
            }
        }
        for (i, j) in slots {
            let (no, line) = data.next().ok_or_else(|| fail(size_no, "fewer values than declared"))??;
            let v = parse_f(no, line.trim())?;
            m[(i, j)] = v;
            match symmetry {
                Symmetry::Symmetric => m[(j, i)] = v,
                Symmetry::Skew => m[(j, i)] = -v,
                Symmetry::General => {}
            }
        }
        Ok(MtxData::Dense(m))
    }
}

/// Writes a sparse matrix in `coordinate real general` format with 17
/// significant digits.
pub fn write_sparse(path: impl AsRef<Path>, a: &SparseMatrix) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
    writeln!(w, "{} {} {}", a.nrows(), a.ncols(), a.nnz())?;
    for (i, j, v) in a.triplets() {
        writeln!(w, "{} {} {:.16e}", i + 1, j + 1, v)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes a dense matrix in `array real general` format with 17
/// significant digits.
pub fn write_dense(path: impl AsRef<Path>, m: &Mat) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "%%MatrixMarket matrix array real general")?;
    writeln!(w, "{} {}", m.nrows(), m.ncols())?;
    for v in m.iter() {
        writeln!(w, "{v:.16e}")?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_coordinate_file_is_expanded() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.mtx");
        std::fs::write(&p, "%%MatrixMarket matrix coordinate real symmetric\n% c\n2 2 2\n1 1 4.0\n2 1 -1.5\n").unwrap();
        let m = read_mtx(&p).unwrap().into_dense();
        assert_eq!(m, Mat::from_row_slice(2, 2, &[4.0, -1.5, -1.5, 0.0]));
    }

    #[test]
    fn round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let m = Mat::from_fn(3, 2, |i, j| (i as f64 + 0.1) / (j as f64 + 3.0) * std::f64::consts::PI);
        let p = dir.path().join("d.mtx");
        write_dense(&p, &m).unwrap();
        assert_eq!(read_mtx(&p).unwrap().into_dense(), m);
        let s = SparseMatrix::from_dense(&m, 0.0);
        let q = dir.path().join("c.mtx");
        write_sparse(&q, &s).unwrap();
        assert_eq!(read_mtx(&q).unwrap().into_sparse(), s);
    }

    #[test]
    fn malformed_entry_names_the_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.mtx");
        std::fs::write(&p, "%%MatrixMarket matrix coordinate real general\n2 2 1\n1 x 1.0\n").unwrap();
        let err = read_mtx(&p).unwrap_err().to_string();
        assert!(err.contains("line 3"), "{err}");
    }
}
