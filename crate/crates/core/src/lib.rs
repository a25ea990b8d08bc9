//! Multi-pumping toolkit: a dataflow IR, symbolic access analysis, the
//! streaming and multi-pumping transforms, a cycle-level simulator and a
//! resource model.

pub mod benchmarks;
pub mod ir;
pub mod pipeline;
pub mod report;
pub mod resources;
pub mod sim;
pub mod symbolic;
pub mod transforms;

pub use ir::{Graph, Mhz, Node, NodeId, SubgraphView};
pub use pipeline::{run_pipeline, PipelineConfig, PipelineError, PipelineRun};
pub use resources::{Budget, CostTable, ResourceVector};
pub use sim::{ClockConfig, Memory, SimLimits, SimReport};
pub use transforms::Mode;
