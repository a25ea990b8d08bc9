//! Affine index expressions, memlets and the streamability check.

mod affine;
mod memlet;

use thiserror::Error;

pub use affine::{AffineExpr, Binding};
pub use memlet::{
    access_sequence, for_each_iteration, iteration_count, sequences_compatible,
    sequences_compatible_capped, AccessSide, Dim, MapParam, Memlet, Range, StreamReason,
    Streamability, DEFAULT_SEQUENCE_CAP,
};

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum SymbolicError {
    #[error("unbound symbol `{0}`")]
    UnboundSymbol(String),
    #[error("access sequence exceeds cap of {cap} elements")]
    SequenceTooLong { cap: usize },
    #[error("memlet is not affine")]
    NonAffine,
    #[error("stride must be positive, got {0}")]
    NonPositiveStride(i64),
    #[error("cannot parse `{input}`: {msg}")]
    Parse { input: String, msg: String },
}
