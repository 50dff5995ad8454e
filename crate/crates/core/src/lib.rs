//! Robust recurrent auto-encoder toolkit for unsupervised highlight scoring
//! of feature sequences.
//!
//! The crate trains auto-encoders on contaminated, unlabeled collections of
//! per-video feature streams and scores snippets by reconstruction error:
//! well-reconstructed snippets are the common, clustered "highlight" class,
//! poorly reconstructed ones are outliers. Training uses a shrinking
//! exponential loss whose exponent decays across epochs so that high-error
//! outliers progressively lose influence, and the recurrent variant models
//! temporal context with bidirectional peephole-LSTM cells.

pub mod ae;
pub mod data;
pub mod error;
pub mod loss;
pub mod numeric;
pub mod params;
pub mod pipeline;
pub mod rrae;

pub use error::{ErrorClass, Result, RraeError};
