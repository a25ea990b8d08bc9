//! Dataflow graph IR: containers, map scopes, tasklets, streams and the
//! multi-pumping plumbing nodes.

mod format;
mod graph;
mod node;
mod types;
mod validate;

use thiserror::Error;

pub use format::{from_json, load, save, to_json};
pub use graph::{
    ClockDomain, DomainId, Edge, EdgeData, EdgeId, Endpoint, Graph, NodeId, SubgraphView,
    DEFAULT_CLOCK_MHZ, FAST_DOMAIN, GRAPH_FORMAT_VERSION, SLOW_DOMAIN,
};
pub use node::{BinOp, CmpOp, Expr, LocalBuffer, Location, Node, Stmt, Tasklet};
pub use types::{ratio_string, ElemType, Mhz, Scalar};
pub use validate::{validate, Rule, Violation};


/// Symbol bound to the lane index while a vectorized scope replays its
/// tasklets.
pub const LANE_SYMBOL: &str = "_lane";

#[derive(Debug, Error)]
pub enum IrError {
    #[error("node {0} not found")]
    NotFound(NodeId),
    #[error("edge {0} not found")]
    EdgeNotFound(EdgeId),
    #[error("empty node selection")]
    EmptySelection,
    #[error("{path}: {msg}")]
    Validation { path: String, msg: String },
    #[error("{path}: unbound symbol `{symbol}`")]
    UnboundSymbol { symbol: String, path: String },
    #[error("invalid graph: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
    #[error("unsupported graph format version {0}")]
    Version(u32),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}
