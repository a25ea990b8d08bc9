//! Deterministic generators for the four benchmark programs and their inputs.

mod floyd;
mod gemm;
mod stencil;
mod vecadd;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use floyd::{floyd_warshall, INF};
pub use gemm::gemm_systolic;
pub use stencil::stencil_chain;
pub use vecadd::vecadd;

use crate::ir::{ElemType, Graph, IrError, Scalar};
use crate::sim::Memory;
use crate::transforms::VectorizeError;

#[derive(Debug, Error)]
pub enum SpecError {
    #[error("invalid benchmark size: {0}")]
    Invalid(String),
    #[error(transparent)]
    Ir(#[from] IrError),
    #[error(transparent)]
    Vectorize(#[from] VectorizeError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StencilKind {
    Jacobi3d,
    Diffusion3d,
}

impl StencilKind {
    /// Floating-point operations per output point.
    pub fn ops_per_point(self) -> u64 {
        match self {
            StencilKind::Jacobi3d => 7,
            StencilKind::Diffusion3d => 10,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            StencilKind::Jacobi3d => "jacobi3d",
            StencilKind::Diffusion3d => "diffusion3d",
        }
    }
}

impl FromStr for StencilKind {
    type Err = SpecError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "jacobi3d" | "jacobi" => Ok(StencilKind::Jacobi3d),
            "diffusion3d" | "diffusion" => Ok(StencilKind::Diffusion3d),
            _ => Err(SpecError::Invalid(format!("unknown stencil `{s}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BenchmarkSpec {
    Vecadd {
        n: i64,
        v: u32,
    },
    /// `C[n×m] = A[n×k] · B[k×m]` on a chain of `pes` processing elements,
    /// each owning `n / pes` rows of A.
    GemmSystolic {
        n: i64,
        k: i64,
        m: i64,
        pes: u32,
        v: u32,
    },
    StencilChain {
        stencil: StencilKind,
        dims: [i64; 3],
        stages: u32,
        v: u32,
    },
    FloydWarshall {
        n: i64,
    },
}

impl BenchmarkSpec {
    pub fn name(&self) -> String {
        match self {
            BenchmarkSpec::Vecadd { .. } => "vecadd".into(),
            BenchmarkSpec::GemmSystolic { .. } => "gemm_systolic".into(),
            BenchmarkSpec::StencilChain { stencil, .. } => {
                format!("stencil_chain_{}", stencil.name())
            }
            BenchmarkSpec::FloydWarshall { .. } => "floyd_warshall".into(),
        }
    }

    pub fn generate(&self) -> Result<Graph, SpecError> {
        match *self {
            BenchmarkSpec::Vecadd { n, v } => vecadd(n, v),
            BenchmarkSpec::GemmSystolic { n, k, m, pes, v } => gemm_systolic(n, k, m, pes, v),
            BenchmarkSpec::StencilChain {
                stencil,
                dims,
                stages,
                v,
            } => stencil_chain(stencil, dims, stages, v),
            BenchmarkSpec::FloydWarshall { n } => floyd_warshall(n),
        }
    }

    /// Arithmetic operations performed by one run. GEMM counts `2·n·m·k`.
    pub fn op_count(&self) -> u64 {
        match *self {
            BenchmarkSpec::Vecadd { n, .. } => n as u64,
            BenchmarkSpec::GemmSystolic { n, k, m, .. } => 2 * (n * k * m) as u64,
            BenchmarkSpec::StencilChain {
                stencil,
                dims,
                stages,
                ..
            } => stencil.ops_per_point() * stages as u64 * dims.iter().product::<i64>() as u64,
            BenchmarkSpec::FloydWarshall { n } => 2 * (n * n * n) as u64,
        }
    }

    /// The same benchmark with its replicable unit repeated `r` times: PEs
    /// for GEMM (rows per PE fixed), stages for stencils. `None` for the
    /// benchmarks without one.
    pub fn replicated(&self, r: u32) -> Option<BenchmarkSpec> {
        match *self {
            BenchmarkSpec::GemmSystolic { n, k, m, pes, v } => Some(BenchmarkSpec::GemmSystolic {
                n: n / pes as i64 * r as i64,
                k,
                m,
                pes: r,
                v,
            }),
            BenchmarkSpec::StencilChain {
                stencil, dims, v, ..
            } => Some(BenchmarkSpec::StencilChain {
                stencil,
                dims,
                stages: r,
                v,
            }),
            _ => None,
        }
    }

    /// Deterministic input data for every container the benchmark reads.
    pub fn inputs(&self) -> Memory {
        let mut mem = Memory::new();
        match *self {
            BenchmarkSpec::Vecadd { n, .. } => {
                mem.insert("x".into(), pattern(n, 7, 3));
                mem.insert("y".into(), pattern(n, 5, 11));
            }
            BenchmarkSpec::GemmSystolic { n, k, m, .. } => {
                mem.insert("A".into(), pattern(n * k, 3, 1));
                mem.insert("B".into(), pattern(k * m, 11, 4));
            }
            BenchmarkSpec::StencilChain { dims, .. } => {
                mem.insert("u0".into(), pattern(dims.iter().product(), 13, 2));
            }
            BenchmarkSpec::FloydWarshall { n } => {
                mem.insert("dist_in".into(), floyd::adjacency(n));
            }
        }
        mem
    }

    /// Containers holding the results.
    pub fn outputs(&self) -> Vec<String> {
        match *self {
            BenchmarkSpec::Vecadd { .. } => vec!["z".into()],
            BenchmarkSpec::GemmSystolic { .. } => vec!["C".into()],
            BenchmarkSpec::StencilChain { stages, .. } => vec![format!("u{stages}")],
            BenchmarkSpec::FloydWarshall { .. } => vec!["dist".into()],
        }
    }
}

impl fmt::Display for BenchmarkSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BenchmarkSpec::Vecadd { n, v } => write!(f, "vecadd N={n} V={v}"),
            BenchmarkSpec::GemmSystolic { n, k, m, pes, v } => {
                write!(f, "gemm_systolic {n}x{k}x{m} PEs={pes} V={v}")
            }
            BenchmarkSpec::StencilChain {
                stencil,
                dims,
                stages,
                v,
            } => write!(
                f,
                "{} {}x{}x{} S={stages} V={v}",
                stencil.name(),
                dims[0],
                dims[1],
                dims[2]
            ),
            BenchmarkSpec::FloydWarshall { n } => write!(f, "floyd_warshall N={n}"),
        }
    }
}

/// Small integers in `[-8, 8)` stored as f32, so sums stay exact.
fn pattern(len: i64, mul: i64, add: i64) -> Vec<Scalar> {
    (0..len)
        .map(|i| ElemType::F32.from_i64((i * mul + add) % 16 - 8))
        .collect()
}

pub(crate) fn positive(name: &str, v: i64) -> Result<(), SpecError> {
    if v <= 0 {
        return Err(SpecError::Invalid(format!("{name} must be positive, got {v}")));
    }
    Ok(())
}
