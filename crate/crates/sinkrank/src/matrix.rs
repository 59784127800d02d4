//! Dense row-major f64 matrix with the small set of numeric kernels the
//! transforms need: per-axis max-shifted log-sum-exp and softmax.
//!
//! Orientation is fixed throughout the crate: rows are queries, columns
//! are gallery items. `entry(i, j)` is the similarity of query `i` to
//! item `j`.

use crate::error::{Error, Result};

/// Axis selector for per-row / per-column reductions.
///
/// `Rows` reduces over the row index (producing one value per column);
/// `Cols` reduces over the column index (one value per row).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    /// Normalize each column over the query axis.
    Rows,
    /// Normalize each row over the item axis.
    Cols,
}

/// Dense row-major similarity matrix. All entries are finite.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    n_rows: usize,
    n_cols: usize,
    data: Vec<f64>,
}

impl SimilarityMatrix {
    /// Build from row-major data, validating shape and finiteness.
    pub fn new(n_rows: usize, n_cols: usize, data: Vec<f64>) -> Result<Self> {
        if n_rows == 0 || n_cols == 0 {
            return Err(Error::Dimension(format!(
                "matrix must be non-empty, got {n_rows}x{n_cols}"
            )));
        }
        let expected = n_rows
            .checked_mul(n_cols)
            .ok_or_else(|| Error::Dimension(format!("matrix {n_rows}x{n_cols} overflows")))?;
        if data.len() != expected {
            return Err(Error::Dimension(format!(
                "matrix {n_rows}x{n_cols} needs {expected} entries, got {}",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Dimension(format!(
                "non-finite entry {} at row {}, column {}",
                data[pos],
                pos / n_cols,
                pos % n_cols
            )));
        }
        Ok(Self { n_rows, n_cols, data })
    }

    /// Build without the finiteness scan, for internal kernels whose
    /// outputs are finite by construction.
    pub(crate) fn from_raw(n_rows: usize, n_cols: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), n_rows * n_cols);
        Self { n_rows, n_cols, data }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn entry(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.n_cols + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.n_cols..(row + 1) * self.n_cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Consume the matrix and return its row-major buffer.
    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    /// Stack rows of `self` selected by `rows` into a new matrix.
    /// Row `k` of the result is row `rows[k]` of `self`.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Self> {
        let mut data = Vec::with_capacity(rows.len() * self.n_cols);
        for &r in rows {
            if r >= self.n_rows {
                return Err(Error::Dimension(format!(
                    "row index {r} out of bounds for {} rows",
                    self.n_rows
                )));
            }
            data.extend_from_slice(self.row(r));
        }
        Self::new(rows.len(), self.n_cols, data)
    }

    /// Elementwise map, preserving shape.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::from_raw(self.n_rows, self.n_cols, self.data.iter().map(|&v| f(v)).collect())
    }

    /// Transposed copy: entry (i, j) of the result is entry (j, i) of self.
    pub fn transpose(&self) -> Self {
        let mut data = vec![0.0; self.data.len()];
        for i in 0..self.n_rows {
            for j in 0..self.n_cols {
                data[j * self.n_rows + i] = self.data[i * self.n_cols + j];
            }
        }
        Self::from_raw(self.n_cols, self.n_rows, data)
    }

    /// Log-sum-exp reduction along `axis`, max-shifted for stability.
    ///
    /// `Axis::Rows` returns one value per column (length `n_cols`);
    /// `Axis::Cols` returns one value per row (length `n_rows`).
    pub fn log_sum_exp(&self, axis: Axis) -> Vec<f64> {
        match axis {
            Axis::Cols => {
                let mut out = Vec::with_capacity(self.n_rows);
                for i in 0..self.n_rows {
                    out.push(log_sum_exp_slice(self.row(i)));
                }
                out
            }
            Axis::Rows => {
                // Column-wise, strided. Two passes over the buffer in
                // row-major order keeps the access pattern sequential.
                let mut maxes = vec![f64::NEG_INFINITY; self.n_cols];
                for i in 0..self.n_rows {
                    for (m, &v) in maxes.iter_mut().zip(self.row(i)) {
                        if v > *m {
                            *m = v;
                        }
                    }
                }
                let mut sums = vec![0.0; self.n_cols];
                for i in 0..self.n_rows {
                    for ((s, &m), &v) in sums.iter_mut().zip(&maxes).zip(self.row(i)) {
                        *s += (v - m).exp();
                    }
                }
                sums.iter()
                    .zip(&maxes)
                    .map(|(&s, &m)| m + s.ln())
                    .collect()
            }
        }
    }

    /// Softmax along `axis`. Each slice along the axis sums to 1.
    pub fn softmax(&self, axis: Axis) -> Self {
        let lse = self.log_sum_exp(axis);
        let mut data = Vec::with_capacity(self.data.len());
        match axis {
            Axis::Cols => {
                for (i, &z) in lse.iter().enumerate() {
                    data.extend(self.row(i).iter().map(|&v| (v - z).exp()));
                }
            }
            Axis::Rows => {
                for i in 0..self.n_rows {
                    data.extend(
                        self.row(i)
                            .iter()
                            .zip(&lse)
                            .map(|(&v, &z)| (v - z).exp()),
                    );
                }
            }
        }
        Self::from_raw(self.n_rows, self.n_cols, data)
    }

    /// Elementwise (Hadamard) product. Shapes must match.
    pub fn hadamard(&self, other: &Self) -> Result<Self> {
        if self.n_rows != other.n_rows || self.n_cols != other.n_cols {
            return Err(Error::Dimension(format!(
                "shape mismatch: {}x{} vs {}x{}",
                self.n_rows, self.n_cols, other.n_rows, other.n_cols
            )));
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| a * b)
            .collect();
        Ok(Self::from_raw(self.n_rows, self.n_cols, data))
    }
}

/// Max-shifted log-sum-exp of one contiguous slice.
pub fn log_sum_exp_slice(xs: &[f64]) -> f64 {
    debug_assert!(!xs.is_empty());
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let s: f64 = xs.iter().map(|&v| (v - m).exp()).sum();
    m + s.ln()
}
