use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pumpkin_core::benchmarks::{BenchmarkSpec, StencilKind};
use pumpkin_core::ir::{self, Graph, Mhz};
use pumpkin_core::pipeline::{run_pipeline, transform, PipelineConfig, PipelineError};
use pumpkin_core::report::{render, RunSummary};
use pumpkin_core::resources::{Budget, CostTable};
use pumpkin_core::sim::{export_trace, Memory, SimLimits};
use pumpkin_core::transforms::{
    check_temporal_vectorizable, find_streamable_subgraph, Mode, DEFAULT_STREAM_DEPTH,
};

#[derive(Parser)]
#[command(name = "pumpkin", version, about = "Multi-pumping toolkit for streaming dataflow graphs")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Emit a benchmark graph as JSON.
    Generate {
        #[command(flatten)]
        bench: BenchArgs,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Streamify, multi-pump, estimate and simulate.
    Run(RunArgs),
    /// Render two run summaries as a comparison table.
    Report {
        before: PathBuf,
        after: PathBuf,
        #[arg(long)]
        budget: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
#[value(rename_all = "snake_case")]
enum BenchKind {
    Vecadd,
    GemmSystolic,
    StencilChain,
    Jacobi3d,
    Diffusion3d,
    FloydWarshall,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, value_enum)]
    bench: Option<BenchKind>,
    /// Problem size: vector length, matrix edge, domain edge or node count.
    #[arg(short = 'N', long = "size")]
    size: Option<i64>,
    #[arg(short = 'V', long = "vector", default_value_t = 1)]
    vector: u32,
    #[arg(long, default_value_t = 4)]
    pes: u32,
    #[arg(long, default_value_t = 4)]
    stages: u32,
    /// Stencil used by `stencil_chain`.
    #[arg(long, default_value = "jacobi3d")]
    stencil: String,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    bench: BenchArgs,
    /// Graph file to use instead of a generated benchmark.
    #[arg(long, conflicts_with = "bench")]
    graph: Option<PathBuf>,
    #[arg(long = "multipump", default_value_t = 1)]
    m: u32,
    #[arg(long, default_value = "widen")]
    mode: Mode,
    #[arg(long, default_value = "300")]
    clk0: Mhz,
    #[arg(long, default_value = "600")]
    clk1: Mhz,
    #[arg(long, default_value_t = DEFAULT_STREAM_DEPTH)]
    fifo_depth: u32,
    /// Write the pumped variant's event trace as CSV.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long)]
    budget: Option<PathBuf>,
    #[arg(long)]
    costs: Option<PathBuf>,
    #[arg(long, default_value = "pumpkin-out")]
    out: PathBuf,
}

enum Failure {
    Rejected(String),
    Error(String),
}

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Error(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

impl BenchArgs {
    fn spec(&self) -> Result<BenchmarkSpec, Failure> {
        let kind = self
            .bench
            .ok_or_else(|| Failure::Error("one of --bench or --graph is required".into()))?;
        let v = self.vector;
        let stencil = |s: StencilKind| BenchmarkSpec::StencilChain {
            stencil: s,
            dims: [self.size.unwrap_or(8); 3],
            stages: self.stages,
            v,
        };
        Ok(match kind {
            BenchKind::Vecadd => BenchmarkSpec::Vecadd {
                n: self.size.unwrap_or(1024),
                v,
            },
            BenchKind::GemmSystolic => {
                let n = self.size.unwrap_or(16);
                BenchmarkSpec::GemmSystolic {
                    n,
                    k: n,
                    m: n,
                    pes: self.pes,
                    v,
                }
            }
            BenchKind::StencilChain => stencil(self.stencil.parse()?),
            BenchKind::Jacobi3d => stencil(StencilKind::Jacobi3d),
            BenchKind::Diffusion3d => stencil(StencilKind::Diffusion3d),
            BenchKind::FloydWarshall => BenchmarkSpec::FloydWarshall {
                n: self.size.unwrap_or(32),
            },
        })
    }
}

fn write(path: &Path, text: &str) -> Outcome {
    fs::write(path, text).map_err(|e| Failure::Error(format!("{}: {e}", path.display())))
}

fn generate(bench: &BenchArgs, out: Option<&Path>) -> Outcome {
    let json = ir::to_json(&bench.spec()?.generate()?)?;
    match out {
        Some(p) => write(p, &json),
        None => {
            print!("{json}");
            Ok(())
        }
    }
}

/// Explains why nothing could be pumped.
fn legality_text(graph: &Graph, cfg: &PipelineConfig, reason: &str) -> String {
    let mut s = format!("rejected: {reason}\n");
    if let Ok((streamed, _)) = transform(graph, &PipelineConfig { m: 1, ..cfg.clone() }) {
        let view = find_streamable_subgraph(&streamed);
        let report = check_temporal_vectorizable(&streamed, &view);
        s.push_str(&serde_json::to_string_pretty(&report).unwrap_or_default());
        s.push('\n');
    }
    s
}

fn run(args: &RunArgs) -> Outcome {
    let (graph, inputs, benchmark, config, ops) = match &args.graph {
        Some(p) => {
            let g = ir::load(p)?;
            let name = p.display().to_string();
            (g, Memory::new(), "graph".to_string(), name, 0)
        }
        None => {
            let spec = args.bench.spec()?;
            (spec.generate()?, spec.inputs(), spec.name(), spec.to_string(), spec.op_count())
        }
    };
    let costs = match &args.costs {
        Some(p) => CostTable::load(p)?,
        None => CostTable::default(),
    };
    let budget = match &args.budget {
        Some(p) => Budget::load(p)?,
        None => Budget::default(),
    };
    let cfg = PipelineConfig {
        m: args.m,
        mode: args.mode,
        clk0: args.clk0,
        clk1: args.clk1,
        fifo_depth: args.fifo_depth,
        limits: SimLimits {
            trace: args.trace.is_some(),
            ..SimLimits::default()
        },
        estimate_only: false,
    };
    let run = match run_pipeline(&graph, &inputs, &cfg, &costs, &budget) {
        Ok(r) => r,
        Err(PipelineError::Rejected(reason)) => {
            return Err(Failure::Rejected(legality_text(&graph, &cfg, &reason.to_string())))
        }
        Err(e) => return Err(e.into()),
    };

    fs::create_dir_all(&args.out)?;
    let out = |f: &str| args.out.join(f);
    write(&out("graph.json"), &ir::to_json(&run.pumped.graph)?)?;
    write(&out("graph_original.json"), &ir::to_json(&run.original.graph)?)?;
    for (tag, v) in [("original", &run.original), ("pumped", &run.pumped)] {
        if let Some(sim) = &v.sim {
            write(&out(&format!("sim_{tag}.json")), &sim.to_json()?)?;
        }
    }
    let mut diff = serde_json::to_string_pretty(&run.diff)?;
    diff.push('\n');
    write(&out("diff.json"), &diff)?;
    let before = RunSummary::new(&benchmark, &config, ops, None, &run.original);
    let after = RunSummary::new(&benchmark, &config, ops, Some(args.mode), &run.pumped);
    write(&out("summary_original.json"), &before.to_json()?)?;
    write(&out("summary_pumped.json"), &after.to_json()?)?;
    let table = render(&before, &after, &budget)?;
    write(&out("report.txt"), &table)?;
    if let (Some(path), Some(sim)) = (&args.trace, &run.pumped.sim) {
        export_trace(sim, path)?;
    }
    print!("{table}");
    for c in &run.diff.over_budget {
        println!("warning: {c} exceeds the budget");
    }
    Ok(())
}

fn report(before: &Path, after: &Path, budget: Option<&Path>) -> Outcome {
    let read = |p: &Path| -> Result<RunSummary, Failure> {
        let text = fs::read_to_string(p).map_err(|e| Failure::Error(format!("{}: {e}", p.display())))?;
        Ok(RunSummary::from_json(&text)?)
    };
    let budget = match budget {
        Some(p) => Budget::load(p)?,
        None => Budget::default(),
    };
    print!("{}", render(&read(before)?, &read(after)?, &budget)?);
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            println!("status=ok");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprint!("{e}");
            println!("status=error");
            return ExitCode::from(1);
        }
    };
    let outcome = match &cli.cmd {
        Cmd::Generate { bench, out } => generate(bench, out.as_deref()),
        Cmd::Run(args) => run(args),
        Cmd::Report {
            before,
            after,
            budget,
        } => report(before, after, budget.as_deref()),
    };
    match outcome {
        Ok(()) => {
            println!("status=ok");
            ExitCode::SUCCESS
        }
        Err(Failure::Rejected(text)) => {
            print!("{text}");
            println!("status=rejected");
            ExitCode::from(2)
        }
        Err(Failure::Error(msg)) => {
            eprintln!("error: {msg}");
            println!("status=error");
            ExitCode::from(1)
        }
    }
}
