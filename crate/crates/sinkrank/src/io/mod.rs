//! File formats (SMX binary matrices, ground-truth text, CSV
//! interchange) and report rendering.

pub mod csvio;
pub mod gtfile;
pub mod report;
pub mod smx;
