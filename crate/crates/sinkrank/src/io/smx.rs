//! SMX binary matrix format.
//!
//! Layout: 4 ASCII magic bytes `SMX1`, then `n_rows` and `n_cols` as
//! unsigned 32-bit little-endian integers, then `n_rows * n_cols`
//! IEEE-754 binary64 values, row-major, little-endian. A well-formed
//! file is exactly `12 + 8 * n_rows * n_cols` bytes and its payload is
//! finite. Write-then-read is byte- and bit-exact, which is what makes
//! golden-file tests trustworthy.
//!
//! Optional sidecar files `<path>.rows` and `<path>.cols` carry one
//! identifier per line for the queries and items respectively.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::matrix::SimilarityMatrix;

/// Magic bytes opening every SMX file.
pub const MAGIC: &[u8; 4] = b"SMX1";
/// Header size in bytes: magic + two u32 dimensions.
pub const HEADER_LEN: u64 = 12;

/// Exact file length for a matrix of the given shape.
pub fn file_len(n_rows: usize, n_cols: usize) -> u64 {
    HEADER_LEN + 8 * (n_rows as u64) * (n_cols as u64)
}

/// Path of the row-identifier sidecar: `<path>.rows`.
pub fn rows_sidecar_path(path: &Path) -> PathBuf {
    append_extension(path, ".rows")
}

/// Path of the column-identifier sidecar: `<path>.cols`.
pub fn cols_sidecar_path(path: &Path) -> PathBuf {
    append_extension(path, ".cols")
}

fn append_extension(path: &Path, suffix: &str) -> PathBuf {
    let mut os = path.as_os_str().to_owned();
    os.push(suffix);
    PathBuf::from(os)
}

fn file_err(path: &Path, source: std::io::Error) -> Error {
    Error::Ingestion(format!("{}: {source}", path.display()))
}

/// Write `a` to `path` in SMX format.
pub fn write_matrix(a: &SimilarityMatrix, path: &Path) -> Result<()> {
    if a.n_rows() > u32::MAX as usize || a.n_cols() > u32::MAX as usize {
        return Err(Error::Dimension(format!(
            "matrix {}x{} exceeds the format's 32-bit dimensions",
            a.n_rows(),
            a.n_cols()
        )));
    }
    let mut buf = Vec::with_capacity(file_len(a.n_rows(), a.n_cols()) as usize);
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&(a.n_rows() as u32).to_le_bytes());
    buf.extend_from_slice(&(a.n_cols() as u32).to_le_bytes());
    for &v in a.data() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, buf).map_err(|e| file_err(path, e))
}

/// Read an SMX file, validating magic, length, and finiteness.
pub fn read_matrix(path: &Path) -> Result<SimilarityMatrix> {
    let bytes = fs::read(path).map_err(|e| file_err(path, e))?;
    parse_matrix(&bytes, path)
}

fn parse_matrix(bytes: &[u8], path: &Path) -> Result<SimilarityMatrix> {
    if bytes.len() < HEADER_LEN as usize {
        return Err(Error::BadLength {
            path: path.into(),
            expected: HEADER_LEN,
            actual: bytes.len() as u64,
        });
    }
    if &bytes[..4] != MAGIC {
        return Err(Error::BadMagic {
            path: path.into(),
            found: String::from_utf8_lossy(&bytes[..4]).into_owned(),
        });
    }
    let n_rows = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let n_cols = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let expected = file_len(n_rows, n_cols);
    if bytes.len() as u64 != expected {
        return Err(Error::BadLength {
            path: path.into(),
            expected,
            actual: bytes.len() as u64,
        });
    }
    if n_rows == 0 || n_cols == 0 {
        return Err(Error::Ingestion(format!(
            "{}: matrix dimensions {n_rows}x{n_cols} must both be positive",
            path.display()
        )));
    }
    let mut data = Vec::with_capacity(n_rows * n_cols);
    for (idx, chunk) in bytes[HEADER_LEN as usize..].chunks_exact(8).enumerate() {
        let v = f64::from_le_bytes(chunk.try_into().unwrap());
        if !v.is_finite() {
            return Err(Error::NonFinite {
                path: path.into(),
                offset: HEADER_LEN + 8 * idx as u64,
                row: idx / n_cols,
                col: idx % n_cols,
            });
        }
        data.push(v);
    }
    SimilarityMatrix::new(n_rows, n_cols, data)
}

/// Read an optional identifier sidecar. `expected` is the matching
/// matrix dimension; a present sidecar with the wrong line count is an
/// error, an absent sidecar is `None`.
pub fn read_sidecar(side: &Path, expected: usize) -> Result<Option<Vec<String>>> {
    let text = match fs::read_to_string(side) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
        Err(e) => return Err(file_err(side, e)),
    };
    let ids: Vec<String> = text.lines().map(str::to_owned).collect();
    if ids.len() != expected {
        return Err(Error::SidecarMismatch {
            path: side.into(),
            expected,
            actual: ids.len(),
        });
    }
    Ok(Some(ids))
}

/// Write an identifier sidecar, one id per line.
pub fn write_sidecar(side: &Path, ids: &[String]) -> Result<()> {
    let mut text = ids.join("\n");
    text.push('\n');
    fs::write(side, text).map_err(|e| file_err(side, e))
}

/// A matrix plus its optional row and column id lists.
pub type MatrixWithIds = (SimilarityMatrix, Option<Vec<String>>, Option<Vec<String>>);

/// Read a matrix together with whichever sidecars exist next to it.
pub fn read_matrix_with_ids(path: &Path) -> Result<MatrixWithIds> {
    let m = read_matrix(path)?;
    let rows = read_sidecar(&rows_sidecar_path(path), m.n_rows())?;
    let cols = read_sidecar(&cols_sidecar_path(path), m.n_cols())?;
    Ok((m, rows, cols))
}
