//! Two-clock cycle-level simulator and the sequential reference executor.

mod engine;
mod exec;
mod memory;
mod plumbing;
mod reference;
mod report;

use thiserror::Error;

use crate::ir::{IrError, Mhz, NodeId, Violation};
use crate::symbolic::SymbolicError;

pub use engine::simulate;
pub use memory::{init_memory, Memory};
pub use plumbing::{
    payload_hash, step_issuer, step_packer, step_synchronizer, Activity, Channel, ChannelStats,
    IssuerState, PackerState, Stall, SyncState, Word,
};
pub use reference::reference_execute;
pub use report::{export_trace, SimReport, TraceEvent, TraceKind, TRACE_HEADER};

pub(crate) use exec::{linear_index, Io, Program};

/// Runtime failures inside a tasklet program.
#[derive(Debug, Error)]
pub enum ExecError {
    #[error(transparent)]
    Symbolic(#[from] SymbolicError),
    #[error(transparent)]
    Ir(#[from] IrError),
    #[error("operand types do not match in tasklet `{0}`")]
    TypeMismatch(String),
    #[error("index {index:?} out of bounds for `{name}`")]
    OutOfBounds { name: String, index: Vec<i64> },
    #[error("connector `{0}` ran out of data")]
    Starved(String),
    #[error("`{0}` is not bound")]
    Unbound(String),
    #[error("node {0} cannot be executed")]
    NotExecutable(NodeId),
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid graph: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
    #[error(transparent)]
    Exec(#[from] ExecError),
    #[error("input `{name}` has {got} elements, expected {expected}")]
    InputShape {
        name: String,
        expected: usize,
        got: usize,
    },
    #[error("unknown container `{0}`")]
    UnknownContainer(String),
    #[error("{node} moved {got} elements, expected {expected}")]
    VolumeMismatch {
        node: NodeId,
        expected: usize,
        got: usize,
    },
    #[error("invalid clock configuration: {0}")]
    Clock(String),
    #[error("deadlock at tick {tick}: {snapshot}")]
    Deadlock { tick: u64, snapshot: String },
    #[error("tick budget of {0} exceeded")]
    BudgetExceeded(u64),
    #[error("trace was not enabled for this simulation")]
    TraceNotEnabled,
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl From<SymbolicError> for SimError {
    fn from(e: SymbolicError) -> Self {
        SimError::Exec(ExecError::Symbolic(e))
    }
}

impl From<IrError> for SimError {
    fn from(e: IrError) -> Self {
        SimError::Exec(ExecError::Ir(e))
    }
}

/// Clock rates for the slow (domain 0) and fast (domain 1) regions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ClockConfig {
    pub clk0_mhz: Mhz,
    pub clk1_mhz: Mhz,
    pub m: u32,
}

impl ClockConfig {
    pub fn new(clk0_mhz: Mhz, clk1_mhz: Mhz, m: u32) -> Self {
        Self {
            clk0_mhz,
            clk1_mhz,
            m,
        }
    }

    /// One clock for both domains, no pumping.
    pub fn single(clk_mhz: i64) -> Self {
        Self::new(Mhz::from_int(clk_mhz), Mhz::from_int(clk_mhz), 1)
    }

    /// Ideal pumping: `clk1 = m * clk0`.
    pub fn ideal(clk0_mhz: i64, m: u32) -> Self {
        Self::new(
            Mhz::from_int(clk0_mhz),
            Mhz::from_int(clk0_mhz * m as i64),
            m,
        )
    }

    pub fn effective_clock(&self) -> Mhz {
        effective_clock(self.clk0_mhz, self.clk1_mhz, self.m)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SimLimits {
    /// Hard cap on evaluated ticks (slow and fast combined).
    pub max_ticks: u64,
    /// Ticks without any progress before reporting a deadlock.
    pub watchdog: u64,
    /// Synchronizer latency in destination-domain ticks.
    pub sync_latency: u32,
    pub trace: bool,
}

impl Default for SimLimits {
    fn default() -> Self {
        Self {
            max_ticks: 50_000_000,
            watchdog: 10_000,
            sync_latency: 2,
            trace: false,
        }
    }
}

/// `min(clk0, clk1 / m)`: the rate at which a pumped pipeline progresses.
pub fn effective_clock(clk0: Mhz, clk1: Mhz, m: u32) -> Mhz {
    let m = m.max(1) as i64;
    let pumped = Mhz(clk1.ratio() / m);
    if pumped < clk0 {
        pumped
    } else {
        clk0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn effective_clock_examples() {
        let f = |s: &str| s.parse::<Mhz>().unwrap();
        assert_eq!(effective_clock(f("527.9"), f("674.7"), 2), f("337.35"));
        assert_eq!(effective_clock(f("300"), f("600"), 2), f("300"));
        assert_eq!(effective_clock(f("340"), f("668.4"), 2), f("334.2"));
    }
}
