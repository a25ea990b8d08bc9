use std::collections::BTreeSet;

use super::legality::check_temporal_vectorizable;
use super::streamify::{streamable_groups, DEFAULT_STREAM_DEPTH};
use super::{Mode, MultipumpConfig, MultipumpError, MultipumpReason};
use crate::ir::{
    DomainId, Edge, EdgeData, Graph, Mhz, Node, NodeId, SubgraphView, FAST_DOMAIN, SLOW_DOMAIN,
};
use crate::symbolic::for_each_iteration;

/// Widest external memory port, in bits.
pub const MAX_PORT_BITS: u32 = 512;

struct Boundary {
    /// The stream node outside the target.
    stream: NodeId,
    /// The edge joining it to a target map.
    edge: Edge,
    inbound: bool,
    /// Reader or Writer at the far end, if any.
    io_node: Option<NodeId>,
}

fn stream_lanes(g: &Graph, s: NodeId) -> u32 {
    match g.node(s) {
        Ok(Node::Stream { lanes, .. }) => *lanes,
        _ => 1,
    }
}

fn set_lanes(g: &mut Graph, id: NodeId, new: u32) {
    if let Ok(Node::Stream { lanes, .. } | Node::Reader { lanes, .. } | Node::Writer { lanes, .. }) =
        g.node_mut(id)
    {
        *lanes = new;
    }
}

/// Element count and bit width moved by a Reader or Writer.
fn io_volume(g: &Graph, id: NodeId) -> Result<(i64, u32), MultipumpError> {
    let (params, memlet) = match g.node(id)? {
        Node::Reader { params, .. } => (params, g.in_edges(id).find_map(|e| e.data.memlet())),
        Node::Writer { params, .. } => (params, g.out_edges(id).find_map(|e| e.data.memlet())),
        _ => return Ok((0, 32)),
    };
    let Some(memlet) = memlet else {
        return Ok((0, 32));
    };
    let bits = g
        .find_container(&memlet.data)
        .and_then(|c| match g.node(c) {
            Ok(Node::Container { elem, .. }) => Some(elem.bits()),
            _ => None,
        })
        .unwrap_or(32);
    let mut total = 0i64;
    for_each_iteration(params, &g.binding(), &mut |b| {
        total += memlet.volume(b)?;
        Ok(())
    })
    .map_err(|_| MultipumpReason::NotStreamified(g.in_edges(id).next().map_or(crate::ir::EdgeId(0), |e| e.id)))?;
    Ok((total, bits))
}

fn boundaries(g: &Graph, maps: &BTreeSet<NodeId>, view: &SubgraphView) -> Vec<Boundary> {
    let mut out = Vec::new();
    for m in maps {
        for e in g.in_edges(*m) {
            if matches!(e.data, EdgeData::Stream) && !view.contains(e.src.node) {
                let far = g.in_edges(e.src.node).next().map(|x| x.src.node);
                out.push(Boundary {
                    stream: e.src.node,
                    edge: e.clone(),
                    inbound: true,
                    io_node: far.filter(|f| matches!(g.node(*f), Ok(Node::Reader { .. }))),
                });
            }
        }
        for e in g.out_edges(*m) {
            if matches!(e.data, EdgeData::Stream) && !view.contains(e.dst.node) {
                let far = g.out_edges(e.dst.node).next().map(|x| x.dst.node);
                out.push(Boundary {
                    stream: e.dst.node,
                    edge: e.clone(),
                    inbound: false,
                    io_node: far.filter(|f| matches!(g.node(*f), Ok(Node::Writer { .. }))),
                });
            }
        }
    }
    out
}

fn check_domains(g: &Graph, cfg: &MultipumpConfig) -> Result<(), MultipumpReason> {
    if let Some(fast) = g.clock_domain(FAST_DOMAIN) {
        if fast.frequency_mhz != cfg.fast_frequency_mhz {
            return Err(MultipumpReason::FrequencyMismatch);
        }
        let slow = g.clock_domain(SLOW_DOMAIN).map(|d| d.frequency_mhz);
        if slow != Some(cfg.slow_frequency_mhz) {
            return Err(MultipumpReason::FrequencyMismatch);
        }
    }
    if cfg.fast_frequency_mhz < cfg.slow_frequency_mhz || !cfg.slow_frequency_mhz.is_positive() {
        return Err(MultipumpReason::FrequencyMismatch);
    }
    for id in &cfg.target.nodes {
        if g.domain_of(*id) == Some(FAST_DOMAIN) {
            return Err(MultipumpReason::AlreadyPumped(*id));
        }
    }
    Ok(())
}

fn new_stream(g: &mut Graph, base: &str, lanes: u32, domain: DomainId) -> NodeId {
    let mut name = base.to_string();
    let mut i = 1;
    while g
        .nodes()
        .any(|(_, n)| matches!(n, Node::Stream { name: s, .. } if *s == name))
    {
        name = format!("{base}_{i}");
        i += 1;
    }
    g.insert(Node::stream(&name, lanes, DEFAULT_STREAM_DEPTH), domain)
}

/// Moves `cfg.target` into a second, faster clock domain and injects the
/// plumbing at its border: Synchronizer then Issuer on every inbound stream,
/// Packer then Synchronizer on every outbound stream.
pub fn multipump(graph: &Graph, cfg: &MultipumpConfig) -> Result<Graph, MultipumpError> {
    let m = cfg.m;
    if m <= 1 {
        return Ok(graph.clone());
    }
    if cfg.target.is_empty() {
        return Err(MultipumpReason::EmptyTarget.into());
    }
    let view = graph.extract_subgraph(&cfg.target.nodes)?;
    for eid in &view.boundary {
        if graph.edge(*eid)?.data.memlet().is_some() {
            return Err(MultipumpReason::NotStreamified(*eid).into());
        }
    }
    let legality = check_temporal_vectorizable(graph, &view);
    if !legality.temporal_ok {
        return Err(MultipumpReason::NotTemporallyVectorizable(legality.reasons).into());
    }
    check_domains(graph, cfg)?;

    let parents = graph.scope_parents();
    let maps: BTreeSet<NodeId> = view
        .nodes
        .iter()
        .copied()
        .filter(|id| !parents.contains_key(id) && graph.node(*id).is_ok_and(Node::is_map))
        .collect();

    let mut g = graph.clone();
    let mut narrowed = false;
    if cfg.mode == Mode::Narrow {
        for id in &maps {
            if let Node::Map { lanes, .. } = g.node_mut(*id)? {
                if *lanes == 1 {
                    continue;
                }
                if *lanes % m != 0 {
                    return Err(MultipumpReason::LanesIndivisible {
                        node: *id,
                        lanes: *lanes,
                    }
                    .into());
                }
                *lanes /= m;
                narrowed = true;
            }
        }
        if !narrowed {
            let first = *maps.iter().next().expect("non-empty target");
            return Err(MultipumpReason::LanesIndivisible {
                node: first,
                lanes: 1,
            }
            .into());
        }
        for id in &view.nodes {
            if let Ok(Node::Stream { lanes, .. }) = g.node_mut(*id) {
                *lanes = (*lanes / m).max(1);
            }
        }
    }

    let bounds = boundaries(graph, &maps, &view);
    for b in &bounds {
        let w = stream_lanes(graph, b.stream);
        let (wide, narrow, factor) = match cfg.mode {
            Mode::Widen => {
                let Some(io) = b.io_node else {
                    let far = if b.inbound { b.edge.src.node } else { b.edge.dst.node };
                    return Err(MultipumpReason::SlowNeighbour(far).into());
                };
                let (volume, bits) = io_volume(graph, io)?;
                let wide = w * m;
                if wide * bits > MAX_PORT_BITS {
                    return Err(MultipumpReason::PortTooNarrow {
                        node: io,
                        bits: wide * bits,
                    }
                    .into());
                }
                if volume % wide as i64 != 0 {
                    return Err(MultipumpReason::Volume {
                        node: io,
                        volume,
                        wide,
                    }
                    .into());
                }
                set_lanes(&mut g, io, wide);
                set_lanes(&mut g, b.stream, wide);
                (wide, w, m)
            }
            Mode::Narrow if w == 1 => (1, 1, 1),
            Mode::Narrow => {
                if !w.is_multiple_of(m) {
                    return Err(MultipumpReason::LanesIndivisible {
                        node: b.stream,
                        lanes: w,
                    }
                    .into());
                }
                (w, w / m, m)
            }
        };
        g.remove_edge(b.edge.id)?;
        let tag = g.node(b.stream)?.label();
        let wide_s = new_stream(&mut g, &format!("{tag}_wide"), wide, FAST_DOMAIN);
        let narrow_s = new_stream(&mut g, &format!("{tag}_narrow"), narrow, FAST_DOMAIN);
        if b.inbound {
            let sync = g.insert(
                Node::Synchronizer {
                    src: SLOW_DOMAIN,
                    dst: FAST_DOMAIN,
                },
                SLOW_DOMAIN,
            );
            let issuer = g.insert(
                Node::Issuer {
                    wide,
                    narrow,
                    factor,
                },
                FAST_DOMAIN,
            );
            g.connect(b.stream, "out", sync, "in", EdgeData::Stream)?;
            g.connect(sync, "out", wide_s, "in", EdgeData::Stream)?;
            g.connect(wide_s, "out", issuer, "in", EdgeData::Stream)?;
            g.connect(issuer, "out", narrow_s, "in", EdgeData::Stream)?;
            g.connect(narrow_s, "out", b.edge.dst.node, &b.edge.dst.port, EdgeData::Stream)?;
        } else {
            let packer = g.insert(
                Node::Packer {
                    narrow,
                    wide,
                    factor,
                },
                FAST_DOMAIN,
            );
            let sync = g.insert(
                Node::Synchronizer {
                    src: FAST_DOMAIN,
                    dst: SLOW_DOMAIN,
                },
                FAST_DOMAIN,
            );
            g.connect(b.edge.src.node, &b.edge.src.port, narrow_s, "in", EdgeData::Stream)?;
            g.connect(narrow_s, "out", packer, "in", EdgeData::Stream)?;
            g.connect(packer, "out", wide_s, "in", EdgeData::Stream)?;
            g.connect(wide_s, "out", sync, "in", EdgeData::Stream)?;
            g.connect(sync, "out", b.stream, "in", EdgeData::Stream)?;
        }
    }

    g.set_domain_frequency(SLOW_DOMAIN, cfg.slow_frequency_mhz);
    g.set_domain_frequency(FAST_DOMAIN, cfg.fast_frequency_mhz);
    for id in &view.nodes {
        for d in g.descendants(*id) {
            g.set_domain(d, FAST_DOMAIN);
        }
    }
    Ok(g)
}

/// Largest streamable group outside the fast domain that passes the
/// temporal vectorization check; empty if none qualifies.
pub fn find_multipump_candidate(graph: &Graph) -> SubgraphView {
    streamable_groups(graph, &|id| graph.domain_of(id) != Some(FAST_DOMAIN))
        .into_iter()
        .find(|v| check_temporal_vectorizable(graph, v).temporal_ok)
        .unwrap_or_default()
}

/// Applies [`multipump`] to successive disjoint candidates until none is
/// left, all sharing one fast domain. Returns the rewritten graph and the
/// targets in application order.
pub fn multipump_all(
    graph: &Graph,
    m: u32,
    mode: Mode,
    slow: Mhz,
    fast: Mhz,
) -> Result<(Graph, Vec<SubgraphView>), MultipumpError> {
    let mut g = graph.clone();
    let mut targets = Vec::new();
    if m <= 1 {
        return Ok((g, targets));
    }
    loop {
        let target = find_multipump_candidate(&g);
        if target.is_empty() {
            return Ok((g, targets));
        }
        let cfg = MultipumpConfig {
            m,
            mode,
            target: target.clone(),
            fast_frequency_mhz: fast,
            slow_frequency_mhz: slow,
        };
        g = multipump(&g, &cfg)?;
        targets.push(target);
    }
}
