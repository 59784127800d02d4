//! Error types shared across the crate.

use std::path::PathBuf;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// All failure modes of the library and the file formats.
///
/// File-format variants carry the offending path plus a byte offset or
/// line number so CLI error messages can point at the exact spot.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Empty input or mismatched dimensions in a numeric kernel.
    #[error("dimension error: {0}")]
    Dimension(String),

    /// Invalid configuration value (temperature, step count, sizes).
    #[error("config error: {0}")]
    Config(String),

    /// Data rejected at construction: non-finite entries, bad lengths,
    /// duplicate identifiers.
    #[error("ingestion error: {0}")]
    Ingestion(String),

    /// Ground truth inconsistent with the matrix it annotates.
    #[error("ground-truth error: {0}")]
    GroundTruth(String),

    /// Malformed caller input outside the other categories.
    #[error("input error: {0}")]
    Input(String),

    /// Score file does not start with the expected magic bytes.
    #[error("{}: bad magic {found:?} (expected \"SMX1\")", path.display())]
    BadMagic { path: PathBuf, found: String },

    /// Score file shorter or longer than its header declares.
    #[error("{}: expected {expected} bytes, found {actual}", path.display())]
    BadLength {
        path: PathBuf,
        expected: u64,
        actual: u64,
    },

    /// Non-finite value in a score file payload.
    #[error("{}: non-finite value at byte offset {offset} (row {row}, col {col})", path.display())]
    NonFinite {
        path: PathBuf,
        offset: u64,
        row: usize,
        col: usize,
    },

    /// Identifier sidecar has the wrong number of lines.
    #[error("{}: sidecar has {actual} ids, matrix needs {expected}", path.display())]
    SidecarMismatch {
        path: PathBuf,
        expected: usize,
        actual: usize,
    },

    /// Malformed line in a text file (ground truth, CSV, rank dump).
    #[error("{}:{line}: {detail}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        detail: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// CLI exit code for this error: 1 for usage problems (bad flags or
    /// flag values), 2 for data problems (bad files, shape mismatches).
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Input(_) => 1,
            _ => 2,
        }
    }
}
