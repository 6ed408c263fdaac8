//! Numeric CSV matrices and simulation-instance export.
//!
//! Matrices are plain row-major CSV with an optional single header row,
//! detected when the first row does not parse as numbers. Values are written
//! with Rust's shortest round-trip formatting, so a written file reloads to
//! the same bits.

use std::fs;
use std::io::Write;
use std::path::Path;

use nsi_core::simulate::SimulationInstance;
use nsi_core::Matrix;

use crate::{Error, Result};

pub fn load_matrix_csv(path: impl AsRef<Path>) -> Result<Matrix> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_matrix_csv(&text, path)
}

pub(crate) fn parse_matrix_csv(text: &str, path: &Path) -> Result<Matrix> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let parse_err = |row: usize, column: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        row,
        column,
        message,
    };

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width: Option<usize> = None;
    for (i, record) in reader.records().enumerate() {
        let line = i + 1;
        let record = record.map_err(|e| parse_err(line, 0, e.to_string()))?;
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        let parsed: Vec<std::result::Result<f64, _>> =
            record.iter().map(|f| f.parse::<f64>()).collect();
        if i == 0 && parsed.iter().any(|v| v.is_err()) {
            // header row
            width = Some(record.len());
            continue;
        }
        if let Some(w) = width {
            if record.len() != w {
                return Err(parse_err(
                    line,
                    record.len().min(w) + 1,
                    format!("ragged row: {} fields, expected {}", record.len(), w),
                ));
            }
        } else {
            width = Some(record.len());
        }
        let mut row = Vec::with_capacity(record.len());
        for (j, v) in parsed.into_iter().enumerate() {
            match v {
                Ok(x) => row.push(x),
                Err(_) => {
                    return Err(parse_err(
                        line,
                        j + 1,
                        format!("non-numeric cell {:?}", &record[j]),
                    ))
                }
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Ok(Matrix::zeros(0, width.unwrap_or(0)));
    }
    Ok(Matrix::from_rows(&rows)?)
}

/// A vector stored either as one column or one row.
pub fn load_vector_csv(path: impl AsRef<Path>) -> Result<Vec<f64>> {
    let path = path.as_ref();
    let m = load_matrix_csv(path)?;
    match (m.rows(), m.cols()) {
        (_, 1) => Ok(m.col(0).to_vec()),
        (1, _) => Ok(m.row(0)),
        (r, c) => Err(Error::Parse {
            path: path.to_path_buf(),
            row: r,
            column: c,
            message: "expected a single row or column".into(),
        }),
    }
}

pub fn write_matrix_csv(path: impl AsRef<Path>, m: &Matrix) -> Result<()> {
    let mut out = String::with_capacity(m.rows() * m.cols() * 20);
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            if j > 0 {
                out.push(',');
            }
            out.push_str(&m[(i, j)].to_string());
        }
        out.push('\n');
    }
    write_file(path, out.as_bytes())
}

pub fn write_vector_csv(path: impl AsRef<Path>, v: &[f64]) -> Result<()> {
    let m = Matrix::from_col_major(v.len(), 1, v.to_vec())?;
    write_matrix_csv(path, &m)
}

pub fn write_file(path: impl AsRef<Path>, bytes: &[u8]) -> Result<()> {
    let path = path.as_ref();
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(bytes).map_err(|e| Error::io(path, e))
}

pub fn ensure_dir(path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

/// Writes `y.csv`, `z.csv`, `w.csv`, `beta.csv` and `gamma.csv` into `dir`.
pub fn export_instance(dir: impl AsRef<Path>, inst: &SimulationInstance) -> Result<()> {
    let dir = dir.as_ref();
    ensure_dir(dir)?;
    write_vector_csv(dir.join("y.csv"), inst.data.y())?;
    write_matrix_csv(dir.join("z.csv"), inst.data.z())?;
    write_matrix_csv(dir.join("w.csv"), inst.data.w())?;
    write_vector_csv(dir.join("beta.csv"), &inst.truth.beta)?;
    write_vector_csv(dir.join("gamma.csv"), &inst.truth.gamma)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Matrix> {
        parse_matrix_csv(text, Path::new("mem.csv"))
    }

    #[test]
    fn plain_and_header() {
        assert_eq!(
            parse("1,2\n3,4").unwrap(),
            Matrix::from_rows(&[[1., 2.], [3., 4.]]).unwrap()
        );
        assert_eq!(parse("a,b\n1,2\n").unwrap(), Matrix::from_rows(&[[1., 2.]]).unwrap());
        assert_eq!(parse(" 1.5e2 , -0.25\n").unwrap()[(0, 0)], 150.0);
    }

    #[test]
    fn ragged_and_non_numeric() {
        match parse("1,2\n3,4\n5\n") {
            Err(Error::Parse { row, .. }) => assert_eq!(row, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
        match parse("1,2\n3,x\n") {
            Err(Error::Parse { row, column, .. }) => assert_eq!((row, column), (2, 2)),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn write_then_reload_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let m = Matrix::from_rows(&[[0.1 + 0.2, -1e-300], [std::f64::consts::PI, 12345.678]]).unwrap();
        let path = dir.path().join("m.csv");
        write_matrix_csv(&path, &m).unwrap();
        assert_eq!(load_matrix_csv(&path).unwrap(), m);

        write_vector_csv(dir.path().join("v.csv"), &[1.0, 2.5]).unwrap();
        assert_eq!(load_vector_csv(dir.path().join("v.csv")).unwrap(), vec![1.0, 2.5]);
    }

    #[test]
    fn missing_file_is_io_error() {
        assert!(matches!(load_matrix_csv("/nonexistent/x.csv"), Err(Error::Io { .. })));
    }
}
