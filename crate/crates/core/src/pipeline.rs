//! End-to-end flow: streamify, multi-pump, estimate and simulate, keeping
//! the original and pumped variants side by side.

use thiserror::Error;

use crate::ir::{Graph, Mhz, Node};
use crate::resources::{compare, estimate, Budget, CostTable, DiffReport, ResourceError, ResourceVector};
use crate::sim::{simulate, ClockConfig, Memory, SimError, SimLimits, SimReport};
use crate::transforms::{
    multipump_all, streamify_all, Mode, MultipumpError, MultipumpReason, StreamifyError,
    DEFAULT_STREAM_DEPTH,
};
use crate::ir::SubgraphView;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Streamify(#[from] StreamifyError),
    #[error("multi-pumping rejected: {0}")]
    Rejected(MultipumpReason),
    #[error(transparent)]
    Multipump(MultipumpError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Resource(#[from] ResourceError),
}

impl From<MultipumpError> for PipelineError {
    fn from(e: MultipumpError) -> Self {
        match e {
            MultipumpError::Illegal(r) => PipelineError::Rejected(r),
            other => PipelineError::Multipump(other),
        }
    }
}

#[derive(Clone, Debug)]
pub struct PipelineConfig {
    pub m: u32,
    pub mode: Mode,
    pub clk0: Mhz,
    pub clk1: Mhz,
    pub fifo_depth: u32,
    pub limits: SimLimits,
    /// Skip simulation and only transform and estimate.
    pub estimate_only: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            m: 1,
            mode: Mode::Widen,
            clk0: Mhz::from_int(300),
            clk1: Mhz::from_int(600),
            fifo_depth: DEFAULT_STREAM_DEPTH,
            limits: SimLimits::default(),
            estimate_only: false,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Variant {
    pub graph: Graph,
    pub clocks: ClockConfig,
    pub resources: ResourceVector,
    pub sim: Option<SimReport>,
}

#[derive(Clone, Debug)]
pub struct PipelineRun {
    /// Streamified, single clock.
    pub original: Variant,
    /// Streamified and multi-pumped.
    pub pumped: Variant,
    pub targets: Vec<SubgraphView>,
    pub diff: DiffReport,
}

/// Sets the depth of every stream.
pub fn set_fifo_depth(graph: &Graph, depth: u32) -> Graph {
    let mut g = graph.clone();
    let ids: Vec<_> = g.nodes().map(|(id, _)| id).collect();
    for id in ids {
        if let Ok(Node::Stream { depth: d, .. }) = g.node_mut(id) {
            *d = depth;
        }
    }
    g
}

/// The pumped graph only: streamify everything, then multi-pump every
/// candidate. `m == 1` returns the streamified graph.
pub fn transform(graph: &Graph, cfg: &PipelineConfig) -> Result<(Graph, Vec<SubgraphView>), PipelineError> {
    let streamed = set_fifo_depth(&streamify_all(graph)?, cfg.fifo_depth);
    if cfg.m <= 1 {
        return Ok((streamed, Vec::new()));
    }
    let (pumped, targets) = multipump_all(&streamed, cfg.m, cfg.mode, cfg.clk0, cfg.clk1)?;
    if targets.is_empty() {
        return Err(PipelineError::Rejected(MultipumpReason::EmptyTarget));
    }
    Ok((set_fifo_depth(&pumped, cfg.fifo_depth), targets))
}

fn variant(
    graph: Graph,
    clocks: ClockConfig,
    inputs: &Memory,
    cfg: &PipelineConfig,
    costs: &CostTable,
) -> Result<Variant, PipelineError> {
    let resources = estimate(&graph, costs)?;
    let sim = if cfg.estimate_only {
        None
    } else {
        Some(simulate(&graph, inputs, &clocks, &cfg.limits)?)
    };
    Ok(Variant {
        graph,
        clocks,
        resources,
        sim,
    })
}

pub fn run_pipeline(
    graph: &Graph,
    inputs: &Memory,
    cfg: &PipelineConfig,
    costs: &CostTable,
    budget: &Budget,
) -> Result<PipelineRun, PipelineError> {
    let base = PipelineConfig { m: 1, ..cfg.clone() };
    let (streamed, _) = transform(graph, &base)?;
    let (pumped, targets) = transform(graph, cfg)?;
    let original = variant(
        streamed,
        ClockConfig::new(cfg.clk0, cfg.clk0, 1),
        inputs,
        cfg,
        costs,
    )?;
    let pumped = if cfg.m <= 1 {
        original.clone()
    } else {
        variant(
            pumped,
            ClockConfig::new(cfg.clk0, cfg.clk1, cfg.m),
            inputs,
            cfg,
            costs,
        )?
    };
    let diff = compare(&original.resources, &pumped.resources, budget);
    Ok(PipelineRun {
        original,
        pumped,
        targets,
        diff,
    })
}
