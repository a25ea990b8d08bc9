use std::collections::{BTreeMap, BTreeSet, VecDeque};

use num_integer::Integer;
use num_rational::Ratio;

use super::memory::{init_memory, offsets, Memory};
use super::plumbing::{
    payload_hash, step_issuer, step_packer, step_synchronizer, Activity, Channel, IssuerState,
    PackerState, Stall, SyncState,
};
use super::reference::{gather_from, read_memlet, write_memlet};
use super::report::{SimReport, TraceEvent, TraceKind};
use super::{ClockConfig, ExecError, Io, Program, SimError, SimLimits};
use crate::ir::{validate, DomainId, EdgeData, Graph, Node, NodeId, Scalar, FAST_DOMAIN};
use crate::symbolic::{MapParam, Memlet};

enum InPort {
    Chan {
        ch: usize,
        buf: VecDeque<Scalar>,
        popped: bool,
    },
    Mem {
        memlet: Memlet,
        buf: VecDeque<Scalar>,
    },
    Gather(String),
}

enum OutPort {
    Chan { ch: usize, pending: Vec<Scalar> },
    Mem { memlet: Memlet, values: Vec<Scalar> },
}

struct Compute {
    prog: Program,
    params: Vec<MapParam>,
    lanes: usize,
    latency: u64,
    ins: BTreeMap<String, InPort>,
    outs: BTreeMap<String, OutPort>,
    loaded: bool,
}

enum Kind {
    Compute(Box<Compute>),
    Reader {
        memlet: Memlet,
        params: Vec<MapParam>,
        lanes: usize,
        out: usize,
        queue: Option<VecDeque<Scalar>>,
    },
    Writer {
        memlet: Memlet,
        params: Vec<MapParam>,
        inp: usize,
        offsets: Option<Vec<usize>>,
        committed: usize,
    },
    Sync {
        inp: usize,
        out: usize,
        dst: DomainId,
    },
    Issuer {
        inp: usize,
        out: usize,
        state: IssuerState,
    },
    Packer {
        inp: usize,
        out: usize,
        state: PackerState,
    },
}

struct Agent {
    id: NodeId,
    label: String,
    domain: DomainId,
    kind: Kind,
    /// Agents that must finish before this one may touch memory.
    deps: Vec<usize>,
    outputs: Vec<usize>,
    done: bool,
}

struct Clock {
    slow: u64,
    fast: u64,
}

impl Clock {
    fn new(cfg: &ClockConfig) -> Result<Clock, SimError> {
        let (f0, f1) = (cfg.clk0_mhz.ratio(), cfg.clk1_mhz.ratio());
        if !cfg.clk0_mhz.is_positive() || !cfg.clk1_mhz.is_positive() {
            return Err(SimError::Clock("frequencies must be positive".into()));
        }
        if f1 < f0 {
            return Err(SimError::Clock("clk1 must not be slower than clk0".into()));
        }
        let base = Ratio::new(
            f0.numer().lcm(f1.numer()),
            f0.denom().gcd(f1.denom()),
        );
        let p0 = base / f0;
        let p1 = base / f1;
        if !p0.is_integer() || !p1.is_integer() {
            return Err(SimError::Clock("no common base tick".into()));
        }
        Ok(Clock {
            slow: *p0.numer() as u64,
            fast: *p1.numer() as u64,
        })
    }

    fn period(&self, d: DomainId) -> u64 {
        if d == FAST_DOMAIN {
            self.fast
        } else {
            self.slow
        }
    }

    fn next_after(&self, t: u64) -> u64 {
        let n0 = (t / self.slow + 1) * self.slow;
        let n1 = (t / self.fast + 1) * self.fast;
        n0.min(n1)
    }
}

struct Tracer {
    on: bool,
    events: Vec<TraceEvent>,
}

impl Tracer {
    fn emit(&mut self, tick: u64, a: &Agent, port: &str, event: TraceKind, hash: u64) {
        if self.on {
            self.events.push(TraceEvent {
                tick,
                domain: a.domain.0,
                node: format!("{}:{}", a.id, a.label),
                port: port.to_string(),
                event,
                payload_hash: hash,
            });
        }
    }

    fn activity(&mut self, tick: u64, a: &Agent, act: &Activity) {
        if let Some(h) = act.popped {
            self.emit(tick, a, "in", TraceKind::Pop, h);
        }
        if let Some(h) = act.pushed {
            self.emit(tick, a, "out", TraceKind::Push, h);
        }
        match act.stall {
            Some(Stall::Full) => self.emit(tick, a, "out", TraceKind::StallFull, 0),
            Some(Stall::Empty) => self.emit(tick, a, "in", TraceKind::StallEmpty, 0),
            None => {}
        }
    }
}

fn two_mut(v: &mut [Channel], a: usize, b: usize) -> (&mut Channel, &mut Channel) {
    assert_ne!(a, b, "plumbing node reads and writes the same stream");
    if a < b {
        let (l, r) = v.split_at_mut(b);
        (&mut l[a], &mut r[0])
    } else {
        let (l, r) = v.split_at_mut(a);
        (&mut r[0], &mut l[b])
    }
}

struct Setup {
    agents: Vec<Agent>,
    channels: Vec<Channel>,
}

fn single_stream(graph: &Graph, id: NodeId, incoming: bool, chan: &BTreeMap<NodeId, usize>) -> Result<usize, SimError> {
    let found = if incoming {
        graph.in_edges(id).find_map(|e| chan.get(&e.src.node).copied())
    } else {
        graph.out_edges(id).find_map(|e| chan.get(&e.dst.node).copied())
    };
    found.ok_or(SimError::Exec(ExecError::NotExecutable(id)))
}

fn single_memlet(graph: &Graph, id: NodeId, incoming: bool) -> Result<Memlet, SimError> {
    let mut edges: Box<dyn Iterator<Item = _>> = if incoming {
        Box::new(graph.in_edges(id))
    } else {
        Box::new(graph.out_edges(id))
    };
    edges
        .find_map(|e| e.data.memlet().cloned())
        .ok_or(SimError::Exec(ExecError::NotExecutable(id)))
}

fn build(graph: &Graph) -> Result<Setup, SimError> {
    let mut channels = Vec::new();
    let mut chan = BTreeMap::new();
    for (id, n) in graph.nodes() {
        if let Node::Stream { name, depth, .. } = n {
            chan.insert(id, channels.len());
            channels.push(Channel::new(name.clone(), *depth as usize));
        }
    }
    let mut order = graph
        .topological_order()
        .map_err(ExecError::NotExecutable)?;
    order.reverse();
    let mut agents = Vec::new();
    let mut reads: Vec<BTreeSet<String>> = Vec::new();
    let mut writes: Vec<BTreeSet<String>> = Vec::new();
    for id in order {
        let node = graph.node(id)?;
        if !node.is_active() {
            continue;
        }
        let mut r = BTreeSet::new();
        let mut w = BTreeSet::new();
        for e in graph.in_edges(id) {
            if let Some(m) = e.data.memlet() {
                r.insert(m.data.clone());
            }
        }
        for e in graph.out_edges(id) {
            if let Some(m) = e.data.memlet() {
                w.insert(m.data.clone());
            }
        }
        let kind = match node {
            Node::Map {
                params,
                lanes,
                latency,
                ..
            } => {
                let mut ins = BTreeMap::new();
                for e in graph.in_edges(id) {
                    let port = match &e.data {
                        EdgeData::Stream => InPort::Chan {
                            ch: chan[&e.src.node],
                            buf: VecDeque::new(),
                            popped: false,
                        },
                        EdgeData::Memlet(m) if !m.is_affine() => InPort::Gather(m.data.clone()),
                        EdgeData::Memlet(m) => InPort::Mem {
                            memlet: m.clone(),
                            buf: VecDeque::new(),
                        },
                    };
                    ins.insert(e.dst.port.clone(), port);
                }
                let mut outs = BTreeMap::new();
                for e in graph.out_edges(id) {
                    let port = match &e.data {
                        EdgeData::Stream => OutPort::Chan {
                            ch: chan[&e.dst.node],
                            pending: Vec::new(),
                        },
                        EdgeData::Memlet(m) => OutPort::Mem {
                            memlet: m.clone(),
                            values: Vec::new(),
                        },
                    };
                    outs.insert(e.src.port.clone(), port);
                }
                Kind::Compute(Box::new(Compute {
                    prog: Program::build(graph, id)?,
                    params: params.clone(),
                    lanes: (*lanes).max(1) as usize,
                    latency: (*latency).max(1) as u64,
                    ins,
                    outs,
                    loaded: false,
                }))
            }
            Node::Reader { params, lanes } => Kind::Reader {
                memlet: single_memlet(graph, id, true)?,
                params: params.clone(),
                lanes: (*lanes).max(1) as usize,
                out: single_stream(graph, id, false, &chan)?,
                queue: None,
            },
            Node::Writer { params, .. } => Kind::Writer {
                memlet: single_memlet(graph, id, false)?,
                params: params.clone(),
                inp: single_stream(graph, id, true, &chan)?,
                offsets: None,
                committed: 0,
            },
            Node::Synchronizer { dst, .. } => Kind::Sync {
                inp: single_stream(graph, id, true, &chan)?,
                out: single_stream(graph, id, false, &chan)?,
                dst: *dst,
            },
            Node::Issuer { narrow, .. } => Kind::Issuer {
                inp: single_stream(graph, id, true, &chan)?,
                out: single_stream(graph, id, false, &chan)?,
                state: IssuerState::new(*narrow),
            },
            Node::Packer { wide, .. } => Kind::Packer {
                inp: single_stream(graph, id, true, &chan)?,
                out: single_stream(graph, id, false, &chan)?,
                state: PackerState::new(*wide),
            },
            _ => continue,
        };
        let domain = match node {
            Node::Synchronizer { src, .. } => *src,
            _ => graph.domain_of(id).unwrap_or(graph.default_domain()),
        };
        let outputs = graph
            .out_edges(id)
            .filter_map(|e| chan.get(&e.dst.node).copied())
            .collect();
        agents.push(Agent {
            id,
            label: node.label(),
            domain,
            kind,
            deps: Vec::new(),
            outputs,
            done: false,
        });
        reads.push(r);
        writes.push(w);
    }
    for i in 0..agents.len() {
        agents[i].deps = (0..agents.len())
            .filter(|&j| j != i && !writes[j].is_disjoint(&reads[i]))
            .collect();
    }
    Ok(Setup { agents, channels })
}

struct ComputeIo<'a> {
    ins: &'a mut BTreeMap<String, InPort>,
    outs: &'a mut BTreeMap<String, OutPort>,
    mem: &'a Memory,
}

impl Io for ComputeIo<'_> {
    fn pop(&mut self, conn: &str) -> Result<Scalar, ExecError> {
        match self.ins.get_mut(conn) {
            Some(InPort::Chan { buf, .. } | InPort::Mem { buf, .. }) => buf.pop_front(),
            _ => None,
        }
        .ok_or_else(|| ExecError::Starved(conn.to_string()))
    }

    fn push(&mut self, conn: &str, value: Scalar) -> Result<(), ExecError> {
        match self.outs.get_mut(conn) {
            Some(OutPort::Chan { pending, .. }) => pending.push(value),
            Some(OutPort::Mem { values, .. }) => values.push(value),
            None => return Err(ExecError::Unbound(conn.to_string())),
        }
        Ok(())
    }

    fn gather(&mut self, conn: &str, index: i64) -> Result<Scalar, ExecError> {
        match self.ins.get(conn) {
            Some(InPort::Gather(name)) => gather_from(self.mem, name, index),
            _ => Err(ExecError::Unbound(conn.to_string())),
        }
    }
}

struct Commit {
    tick: u64,
    elements: u64,
}

struct Sim<'g> {
    graph: &'g Graph,
    clock: Clock,
    limits: SimLimits,
    mem: Memory,
    channels: Vec<Channel>,
    tracer: Tracer,
    commits: Vec<Commit>,
}

impl Sim<'_> {
    fn deps_done(&self, agents: &[Agent], i: usize) -> bool {
        agents[i].deps.iter().all(|&d| agents[d].done)
    }

    /// Returns whether the agent made progress.
    fn step(&mut self, a: &mut Agent, now: u64) -> Result<bool, SimError> {
        let graph = self.graph;
        match &mut a.kind {
            Kind::Reader {
                memlet,
                params,
                lanes,
                out,
                queue,
            } => {
                let q = match queue {
                    Some(q) => q,
                    None => queue.insert(read_memlet(graph, &self.mem, memlet, params)?.into()),
                };
                if q.is_empty() {
                    a.done = true;
                    return Ok(true);
                }
                let ch = &mut self.channels[*out];
                if !ch.can_push() {
                    ch.stats.full_stalls += 1;
                    self.tracer.emit(now, a, "out", TraceKind::StallFull, 0);
                    return Ok(false);
                }
                let n = (*lanes).min(q.len());
                let word: Vec<Scalar> = q.drain(..n).collect();
                let h = payload_hash(&word);
                ch.push(word, now + 1);
                if q.is_empty() {
                    a.done = true;
                }
                self.tracer.emit(now, a, "out", TraceKind::Push, h);
                Ok(true)
            }
            Kind::Writer {
                memlet,
                params,
                inp,
                offsets: offs,
                committed,
            } => {
                let offs = match offs {
                    Some(o) => o,
                    None => offs.insert(offsets(graph, memlet, params)?),
                };
                let ch = &mut self.channels[*inp];
                let Some(word) = ch.pop(now) else {
                    if ch.drained() {
                        return Err(SimError::VolumeMismatch {
                            node: a.id,
                            expected: offs.len(),
                            got: *committed,
                        });
                    }
                    ch.stats.empty_stalls += 1;
                    self.tracer.emit(now, a, "in", TraceKind::StallEmpty, 0);
                    return Ok(false);
                };
                if *committed + word.len() > offs.len() {
                    return Err(SimError::VolumeMismatch {
                        node: a.id,
                        expected: offs.len(),
                        got: *committed + word.len(),
                    });
                }
                let h = payload_hash(&word);
                let data = self.mem.get_mut(&memlet.data).expect("container allocated");
                for v in &word {
                    data[offs[*committed]] = *v;
                    *committed += 1;
                }
                self.commits.push(Commit {
                    tick: now,
                    elements: word.len() as u64,
                });
                if *committed == offs.len() {
                    a.done = true;
                }
                self.tracer.emit(now, a, "in", TraceKind::Pop, h);
                Ok(true)
            }
            Kind::Sync { inp, out, dst } => {
                let vis = now + self.limits.sync_latency as u64 * self.clock.period(*dst);
                let (i, o) = two_mut(&mut self.channels, *inp, *out);
                let act = step_synchronizer(&mut SyncState, i, o, now, vis);
                a.done = i.drained();
                let progressed = act.progressed();
                self.tracer.activity(now, a, &act);
                Ok(progressed)
            }
            Kind::Issuer { inp, out, state } => {
                let (i, o) = two_mut(&mut self.channels, *inp, *out);
                let act = step_issuer(state, i, o, now, now + 1);
                a.done = state.done(i);
                let progressed = act.progressed();
                self.tracer.activity(now, a, &act);
                Ok(progressed)
            }
            Kind::Packer { inp, out, state } => {
                let (i, o) = two_mut(&mut self.channels, *inp, *out);
                let act = step_packer(state, i, o, now, now + 1);
                a.done = state.done(i);
                let progressed = act.progressed();
                self.tracer.activity(now, a, &act);
                Ok(progressed)
            }
            Kind::Compute(_) => self.step_compute(a, now),
        }
    }

    fn step_compute(&mut self, a: &mut Agent, now: u64) -> Result<bool, SimError> {
        let period = self.clock.period(a.domain);
        let Kind::Compute(c) = &mut a.kind else {
            unreachable!()
        };
        let mut progressed = false;
        let mut events: Vec<(String, TraceKind, u64)> = Vec::new();
        if !c.loaded {
            for port in c.ins.values_mut() {
                if let InPort::Mem { memlet, buf } = port {
                    *buf = read_memlet(self.graph, &self.mem, memlet, &c.params)?.into();
                }
            }
            c.loaded = true;
        }
        for port in c.ins.values_mut() {
            if let InPort::Chan { popped, .. } = port {
                *popped = false;
            }
        }
        let mut stalled_empty = BTreeSet::new();
        'steps: for _ in 0..c.lanes {
            let Some(needs) = c.prog.next_inputs() else {
                break;
            };
            for conn in needs {
                let Some(port) = c.ins.get_mut(conn) else {
                    return Err(ExecError::Unbound(conn.clone()).into());
                };
                match port {
                    InPort::Chan { ch, buf, popped } if buf.is_empty() => {
                        let chan = &mut self.channels[*ch];
                        if *popped {
                            break 'steps;
                        }
                        match chan.pop(now) {
                            Some(w) => {
                                events.push((conn.clone(), TraceKind::Pop, payload_hash(&w)));
                                buf.extend(w);
                                *popped = true;
                                progressed = true;
                            }
                            None => {
                                if chan.drained() {
                                    return Err(ExecError::Starved(conn.clone()).into());
                                }
                                if stalled_empty.insert(*ch) {
                                    chan.stats.empty_stalls += 1;
                                    events.push((conn.clone(), TraceKind::StallEmpty, 0));
                                }
                                break 'steps;
                            }
                        }
                    }
                    InPort::Mem { buf, .. } if buf.is_empty() => {
                        return Err(ExecError::Starved(conn.clone()).into());
                    }
                    _ => {}
                }
            }
            for conn in c.prog.next_outputs().unwrap_or(&[]) {
                if let Some(OutPort::Chan { pending, .. }) = c.outs.get(conn) {
                    if pending.len() >= c.lanes {
                        break 'steps;
                    }
                }
            }
            let mut io = ComputeIo {
                ins: &mut c.ins,
                outs: &mut c.outs,
                mem: &self.mem,
            };
            c.prog.step(&mut io)?;
            progressed = true;
        }
        let visible = now + (c.latency - 1) * period + 1;
        for (conn, port) in c.outs.iter_mut() {
            if let OutPort::Chan { ch, pending } = port {
                if pending.is_empty() {
                    continue;
                }
                let chan = &mut self.channels[*ch];
                if chan.can_push() {
                    let word = std::mem::take(pending);
                    events.push((conn.clone(), TraceKind::Push, payload_hash(&word)));
                    chan.push(word, visible);
                    progressed = true;
                } else {
                    chan.stats.full_stalls += 1;
                    events.push((conn.clone(), TraceKind::StallFull, 0));
                }
            }
        }
        let flushed = c
            .outs
            .values()
            .all(|p| !matches!(p, OutPort::Chan { pending, .. } if !pending.is_empty()));
        if c.prog.done() && flushed {
            let mut total = 0;
            for port in c.outs.values() {
                if let OutPort::Mem { memlet, values } = port {
                    write_memlet(self.graph, &mut self.mem, a.id, memlet, &c.params, values)?;
                    total += values.len() as u64;
                }
            }
            if total > 0 {
                self.commits.push(Commit {
                    tick: now,
                    elements: total,
                });
            }
            a.done = true;
            progressed = true;
        }
        for (port, kind, h) in events {
            self.tracer.emit(now, a, &port, kind, h);
        }
        Ok(progressed)
    }
}

/// Runs the graph on a two-clock tick loop until every node has finished.
///
/// Time advances in base ticks, the finest common subdivision of both clock
/// periods. Within a tick, nodes are evaluated consumers first so that a word
/// pushed in one tick is poppable no earlier than the next.
pub fn simulate(
    graph: &Graph,
    inputs: &Memory,
    clocks: &ClockConfig,
    limits: &SimLimits,
) -> Result<SimReport, SimError> {
    let violations = validate(graph);
    if !violations.is_empty() {
        return Err(SimError::Invalid(violations));
    }
    let clock = Clock::new(clocks)?;
    let Setup {
        mut agents,
        channels,
    } = build(graph)?;
    let mut sim = Sim {
        graph,
        clock,
        limits: *limits,
        mem: init_memory(graph, inputs)?,
        channels,
        tracer: Tracer {
            on: limits.trace,
            events: Vec::new(),
        },
        commits: Vec::new(),
    };
    let mut now = 0u64;
    let mut evaluated = 0u64;
    let mut idle = 0u64;
    let mut last_progress = 0u64;
    while agents.iter().any(|a| !a.done) {
        evaluated += 1;
        if evaluated > limits.max_ticks {
            return Err(SimError::BudgetExceeded(limits.max_ticks));
        }
        let mut progressed = false;
        for i in 0..agents.len() {
            let a = &agents[i];
            if a.done || !now.is_multiple_of(sim.clock.period(a.domain)) || !sim.deps_done(&agents, i) {
                continue;
            }
            let agent = &mut agents[i];
            progressed |= sim.step(agent, now)?;
            if agent.done {
                for &ch in &agent.outputs {
                    sim.channels[ch].closed = true;
                }
            }
        }
        if progressed {
            idle = 0;
            last_progress = now;
        } else {
            idle += 1;
            if idle > limits.watchdog {
                return Err(SimError::Deadlock {
                    tick: now,
                    snapshot: snapshot(&agents, &sim.channels),
                });
            }
        }
        now = sim.clock.next_after(now);
    }
    let p0 = sim.clock.slow;
    let p1 = sim.clock.fast;
    let elements_out: u64 = sim.commits.iter().map(|c| c.elements).sum();
    let per_slow = match (sim.commits.first(), sim.commits.last()) {
        (Some(f), Some(l)) => {
            let span = l.tick / p0 - f.tick / p0 + 1;
            Ratio::new(elements_out as i64, span as i64)
        }
        _ => Ratio::from_integer(0),
    };
    let channels = sim
        .channels
        .iter()
        .map(|c| {
            let mut s = c.stats.clone();
            s.final_occupancy = c.occupancy();
            (c.name.clone(), s)
        })
        .collect();
    Ok(SimReport {
        outputs: sim.mem,
        slow_cycles: last_progress / p0 + 1,
        fast_cycles: last_progress / p1 + 1,
        slow_period: p0,
        fast_period: p1,
        elements_out,
        elements_out_per_slow_cycle: per_slow,
        elements_per_us: per_slow * clocks.clk0_mhz.ratio(),
        effective_clock_mhz: clocks.effective_clock(),
        channels,
        trace: limits.trace.then_some(sim.tracer.events),
    })
}

fn snapshot(agents: &[Agent], channels: &[Channel]) -> String {
    let waiting: Vec<String> = agents
        .iter()
        .filter(|a| !a.done)
        .map(|a| format!("{}:{}", a.id, a.label))
        .collect();
    let occ: Vec<String> = channels
        .iter()
        .map(|c| format!("{}={}/{}", c.name, c.occupancy(), c.depth))
        .collect();
    format!("waiting [{}]; channels [{}]", waiting.join(", "), occ.join(", "))
}
