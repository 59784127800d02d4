//! Similarity-matrix postprocessing transforms.
//!
//! Two rescoring transforms operate on a queries-by-items similarity
//! matrix before ranking:
//!
//! * **Dual softmax** multiplies each score by a softmax-over-queries
//!   prior for its column, then softmaxes each row. Items that score
//!   high against *many* queries (hubs) get a small prior and are
//!   pushed down.
//! * **Sinkhorn** iterates alternating log-domain normalizations
//!   (subtract the column log-sum-exp, then the row log-sum-exp) on
//!   `A/T`. The exponentiated result approaches a doubly stochastic
//!   matrix, which in the square case concentrates on a permutation.
//!
//! Sinkhorn outputs stay in the log domain: ranking only needs monotone
//! scores, and exponentiating sharp-temperature outputs would lose
//! precision.

use crate::error::{Error, Result};
use crate::matrix::{Axis, SimilarityMatrix};

/// Default dual-softmax temperature, suited to cosine similarities in
/// [-1, 1] (the tempered scores then span roughly ±100).
pub const DEFAULT_DSL_TEMPERATURE: f64 = 100.0;
/// Default Sinkhorn temperature.
pub const DEFAULT_SINKHORN_TEMPERATURE: f64 = 0.05;
/// Default Sinkhorn step count.
pub const DEFAULT_SINKHORN_STEPS: usize = 20;

/// Which transform to apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Identity,
    DualSoftmax,
    Sinkhorn,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Method::Identity => "identity",
            Method::DualSoftmax => "dual-softmax",
            Method::Sinkhorn => "sinkhorn",
        };
        f.write_str(s)
    }
}

/// Transform selection plus hyperparameters.
///
/// `temperature` is the symbol T; `sinkhorn_steps` is the symbol k and
/// is only consulted when `method` is [`Method::Sinkhorn`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransformConfig {
    pub method: Method,
    pub temperature: f64,
    pub sinkhorn_steps: usize,
}

impl TransformConfig {
    pub fn identity() -> Self {
        Self {
            method: Method::Identity,
            temperature: 1.0,
            sinkhorn_steps: 1,
        }
    }

    pub fn dual_softmax(temperature: f64) -> Self {
        Self {
            method: Method::DualSoftmax,
            temperature,
            sinkhorn_steps: 1,
        }
    }

    pub fn sinkhorn(temperature: f64, steps: usize) -> Self {
        Self {
            method: Method::Sinkhorn,
            temperature,
            sinkhorn_steps: steps,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.temperature.is_finite() || self.temperature <= 0.0 {
            return Err(Error::Config(format!(
                "temperature must be a positive finite number, got {}",
                self.temperature
            )));
        }
        if self.method == Method::Sinkhorn && self.sinkhorn_steps == 0 {
            return Err(Error::Config(
                "sinkhorn requires at least 1 step".to_string(),
            ));
        }
        Ok(())
    }
}

impl Default for TransformConfig {
    fn default() -> Self {
        Self::identity()
    }
}

/// Dual-softmax rescoring.
///
/// `A' = softmax(T * A, dim=0)` (a per-column prior over queries), then
/// the output is `softmax(A .* A', dim=1)`. Note the elementwise
/// product uses the *untempered* scores; the temperature only shapes
/// the prior.
pub fn dual_softmax(a: &SimilarityMatrix, temperature: f64) -> Result<SimilarityMatrix> {
    check_temperature(temperature)?;
    let prior = a.map(|v| temperature * v).softmax(Axis::Rows);
    let product = a.hadamard(&prior)?;
    Ok(product.softmax(Axis::Cols))
}

/// One Sinkhorn step in the log domain:
/// `A' = A - LSE(A, dim=0)`, then `A'' = A' - LSE(A', dim=1)`.
///
/// The row subtraction is applied last, so exp of every output row sums
/// to 1 exactly up to rounding.
pub fn sinkhorn_step(a: &SimilarityMatrix) -> SimilarityMatrix {
    let col_lse = a.log_sum_exp(Axis::Rows);
    let n_cols = a.n_cols();
    let mut data = Vec::with_capacity(a.n_rows() * n_cols);
    for i in 0..a.n_rows() {
        data.extend(a.row(i).iter().zip(&col_lse).map(|(&v, &z)| v - z));
    }
    let half = SimilarityMatrix::from_raw(a.n_rows(), n_cols, data);
    let row_lse = half.log_sum_exp(Axis::Cols);
    let mut data = Vec::with_capacity(half.n_rows() * n_cols);
    for (i, &z) in row_lse.iter().enumerate() {
        data.extend(half.row(i).iter().map(|&v| v - z));
    }
    SimilarityMatrix::from_raw(half.n_rows(), n_cols, data)
}

/// Iterated Sinkhorn normalization: `steps` applications of
/// [`sinkhorn_step`] to `A^(0) = A / T`.
///
/// The returned matrix holds log-scores; consumers rank them directly
/// without exponentiating.
pub fn sinkhorn(a: &SimilarityMatrix, temperature: f64, steps: usize) -> Result<SimilarityMatrix> {
    check_temperature(temperature)?;
    if steps == 0 {
        return Err(Error::Config("sinkhorn requires at least 1 step".to_string()));
    }
    let mut m = a.map(|v| v / temperature);
    for _ in 0..steps {
        m = sinkhorn_step(&m);
    }
    Ok(m)
}

/// Apply the configured transform to `a`.
pub fn apply(cfg: &TransformConfig, a: &SimilarityMatrix) -> Result<SimilarityMatrix> {
    cfg.validate()?;
    match cfg.method {
        Method::Identity => Ok(a.clone()),
        Method::DualSoftmax => dual_softmax(a, cfg.temperature),
        Method::Sinkhorn => sinkhorn(a, cfg.temperature, cfg.sinkhorn_steps),
    }
}

fn check_temperature(temperature: f64) -> Result<()> {
    if !temperature.is_finite() || temperature <= 0.0 {
        return Err(Error::Config(format!(
            "temperature must be a positive finite number, got {temperature}"
        )));
    }
    Ok(())
}
