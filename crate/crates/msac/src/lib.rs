//! Compression of a binary source sequence `X` against side-information `Y`
//! that is mis-aligned with the source: the two sequences differ by
//! insertions, deletions and substitutions, and `Y` is available at both the
//! encoder and the decoder.
//!
//! The codec describes edits relative to the *runs* of the reference
//! sequence rather than by exact position, then entropy-codes the per-run
//! edit counts with a separate adaptive context for each run extent.
//!
//! Crate layout:
//! - [`seqcore`]: packed bit sequences, deletion patterns, run decomposition
//! - [`align`]: greedy leftmost alignment and Needleman-Wunsch alignment
//! - [`describe`]: alignments <-> run-based edit descriptions
//! - [`entropy`]: adaptive range coder (KT estimator) and gamma codes
//! - [`container`]: the wire format and the full encode/decode pipelines
//! - [`simulate`]: seeded sampling of correlated (X, Y) pairs
//! - [`analysis`]: baseline codecs, rate formulas, benchmark harness

pub mod align;
pub mod analysis;
pub mod container;
pub mod describe;
pub mod entropy;
pub mod seqcore;
pub mod simulate;

use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("length mismatch: pattern has {pattern} flags but sequence has {sequence} bits")]
    LengthMismatch { pattern: usize, sequence: usize },

    #[error("run index out of range: extent {extent} has {available} runs, requested #{requested}")]
    RunIndexOutOfRange {
        extent: usize,
        available: usize,
        requested: usize,
    },

    #[error("source is not a subsequence of the side-information")]
    NotSubsequence,

    #[error("deletion count {count} exceeds run extent {extent}")]
    CountExceedsExtent { count: usize, extent: usize },

    #[error("corrupt message in section `{section}`: {detail}")]
    Corruption { section: String, detail: String },

    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("internal invariant violated: {0}")]
    Internal(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn corruption(section: &str, detail: impl Into<String>) -> Self {
        Error::Corruption {
            section: section.to_string(),
            detail: detail.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
