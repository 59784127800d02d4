//! CSV matrix import/export.
//!
//! A matrix CSV is a plain numeric grid: no header row, one matrix row
//! per record. Values are written in Rust's shortest round-trip float
//! notation, so CSV → SMX → CSV preserves values bit-exactly. This is
//! the interoperability path for model-dumping scripts; SMX stays the
//! primary interchange format.

use std::path::Path;

use crate::error::{Error, Result};
use crate::matrix::SimilarityMatrix;

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e
        .position()
        .map(|p| p.line() as usize)
        .unwrap_or_default();
    Error::Parse {
        path: path.into(),
        line,
        detail: match e.kind() {
            csv::ErrorKind::UnequalLengths { expected_len, len, .. } => {
                format!("ragged row: expected {expected_len} fields, found {len}")
            }
            _ => e.to_string(),
        },
    }
}

/// Read a numeric-grid CSV as a similarity matrix.
pub fn read_matrix_csv(path: &Path) -> Result<SimilarityMatrix> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let mut data = Vec::new();
    let mut n_cols = 0usize;
    let mut n_rows = 0usize;
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record
            .position()
            .map(|p| p.line() as usize)
            .unwrap_or(n_rows + 1);
        if n_rows == 0 {
            n_cols = record.len();
        }
        for (col, field) in record.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| Error::Parse {
                path: path.into(),
                line,
                detail: format!("field {} is not a number: {field:?}", col + 1),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    path: path.into(),
                    line,
                    detail: format!("field {} is not finite: {field:?}", col + 1),
                });
            }
            data.push(v);
        }
        n_rows += 1;
    }
    if n_rows == 0 {
        return Err(Error::Parse {
            path: path.into(),
            line: 0,
            detail: "empty CSV matrix".to_string(),
        });
    }
    SimilarityMatrix::new(n_rows, n_cols, data)
}

/// Write a matrix as a numeric-grid CSV.
pub fn write_matrix_csv(a: &SimilarityMatrix, path: &Path) -> Result<()> {
    let mut writer = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    for i in 0..a.n_rows() {
        let fields: Vec<String> = a.row(i).iter().map(|v| format!("{v}")).collect();
        writer
            .write_record(&fields)
            .map_err(|e| csv_error(path, e))?;
    }
    writer
        .flush()
        .map_err(|e| Error::Ingestion(format!("{}: {e}", path.display())))
}
