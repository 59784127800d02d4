//! Postprocessing and evaluation for retrieval similarity matrices.
//!
//! Retrieval systems score every query against every gallery item,
//! producing a similarity matrix whose per-row rankings drive
//! Recall@K. Such matrices often contain *hubs*: items that score well
//! against many queries at once and crowd out correct answers. This
//! crate implements two matrix-level rescoring transforms that suppress
//! hubs — dual softmax and iterated Sinkhorn normalization — together
//! with the machinery to evaluate them honestly:
//!
//! * [`transforms`]: dual softmax and log-domain Sinkhorn steps over a
//!   queries-by-items matrix.
//! * [`metrics`]: Recall@K, median/mean rank, and a paired
//!   randomization significance test.
//! * [`protocols`]: full-test-set evaluation, the single-query
//!   pseudo-test-set protocol (which rescoring methods must pass
//!   without peeking at other test queries), and direction handling.
//! * [`synth`]: a planted-hub benchmark generator so the transforms'
//!   gains are measurable without any model inference.
//! * [`io`] and [`cli`]: SMX binary matrix files, ground-truth text
//!   files, CSV interchange, reports, and the `sinkrank` binary.
//!
//! Everything stochastic is keyed by explicit seeds through
//! [`rng`]; identical seeds give bit-identical matrices, samples, and
//! reports across runs and platforms.

pub mod cli;
pub mod error;
pub mod io;
pub mod matrix;
pub mod metrics;
pub mod protocols;
pub mod rng;
pub mod synth;
pub mod transforms;

pub use error::{Error, Result};
pub use matrix::{Axis, SimilarityMatrix};
pub use metrics::{GroundTruth, MetricsReport};
pub use protocols::PseudoTestConfig;
pub use synth::SynthConfig;
pub use transforms::{Method, TransformConfig};
