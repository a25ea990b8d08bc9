//! Graph rewrites: spatial vectorization, streaming conversion, the temporal
//! vectorization legality check and multi-pumping.

mod legality;
mod multipump;
mod streamify;
mod vectorize;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ir::{EdgeId, IrError, Mhz, NodeId, SubgraphView};
use crate::symbolic::{StreamReason, Streamability};

pub use legality::check_temporal_vectorizable;
pub use multipump::{find_multipump_candidate, multipump, multipump_all};
pub use streamify::{find_streamable_subgraph, streamify, streamify_all, DEFAULT_STREAM_DEPTH};
pub use vectorize::vectorize;

#[derive(Debug, Error)]
pub enum VectorizeError {
    #[error("vector width must be at least 1")]
    ZeroWidth,
    #[error("{0} is not a top-level map")]
    NotAMap(NodeId),
    #[error("map has no parameters to vectorize")]
    NoParams,
    #[error("innermost range of length {len} is not divisible by {v}")]
    Remainder { len: i64, v: u32 },
    #[error("memlet `{0}` is not contiguous in the vectorized dimension")]
    NonContiguous(String),
    #[error("map body carries state across iterations")]
    LoopCarried,
    #[error("map is already vectorized")]
    AlreadyVectorized,
    #[error(transparent)]
    Ir(#[from] IrError),
}

#[derive(Debug, Error)]
pub enum StreamifyError {
    #[error("edge {edge} cannot be streamed: {reason:?}")]
    Unstreamable { edge: EdgeId, reason: StreamReason },
    #[error(transparent)]
    Ir(#[from] IrError),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize, Error)]
pub enum MultipumpReason {
    #[error("empty target")]
    EmptyTarget,
    /// A boundary edge of the target still addresses memory directly.
    #[error("boundary edge {0} is not streamified")]
    NotStreamified(EdgeId),
    #[error("not temporally vectorizable: {}", .0.join("; "))]
    NotTemporallyVectorizable(Vec<String>),
    /// Some target node already runs in the fast domain.
    #[error("node {0} is already multi-pumped")]
    AlreadyPumped(NodeId),
    #[error("clock frequencies differ from the existing fast domain")]
    FrequencyMismatch,
    /// NARROW: lane count not divisible by M (or smaller than M).
    #[error("{node} has {lanes} lanes, not divisible by M")]
    LanesIndivisible { node: NodeId, lanes: u32 },
    /// WIDEN: the widened external access exceeds the memory port.
    #[error("{node} would need a {bits}-bit memory port")]
    PortTooNarrow { node: NodeId, bits: u32 },
    /// WIDEN: a boundary stream is fed or drained by slow compute.
    #[error("boundary neighbour {0} is not a memory reader or writer")]
    SlowNeighbour(NodeId),
    /// Stream volume is not a multiple of the wide word.
    #[error("{node} moves {volume} elements, not a multiple of {wide}")]
    Volume { node: NodeId, volume: i64, wide: u32 },
}

#[derive(Debug, Error)]
pub enum MultipumpError {
    #[error("multi-pumping rejected: {0}")]
    Illegal(MultipumpReason),
    #[error(transparent)]
    Ir(#[from] IrError),
}

impl From<MultipumpReason> for MultipumpError {
    fn from(r: MultipumpReason) -> Self {
        MultipumpError::Illegal(r)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Wider external paths, same compute lanes: M times the throughput.
    Widen,
    /// Same external width, 1/M compute lanes: same throughput.
    Narrow,
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "widen" => Ok(Mode::Widen),
            "narrow" => Ok(Mode::Narrow),
            _ => Err(format!("unknown mode `{s}` (expected widen or narrow)")),
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Widen => "widen",
            Mode::Narrow => "narrow",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MultipumpConfig {
    pub m: u32,
    pub mode: Mode,
    pub target: SubgraphView,
    pub fast_frequency_mhz: Mhz,
    pub slow_frequency_mhz: Mhz,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LegalityReport {
    pub streamable_pairs: Vec<(EdgeId, Streamability)>,
    pub temporal_ok: bool,
    pub reasons: Vec<String>,
    pub largest_candidate: SubgraphView,
}
