use std::collections::{BTreeMap, BTreeSet};

use super::StreamifyError;
use crate::ir::{EdgeData, Graph, Location, Node, NodeId, SubgraphView};
use crate::symbolic::{sequences_compatible, AccessSide, MapParam, StreamReason, Streamability};

pub const DEFAULT_STREAM_DEPTH: u32 = 16;

pub(crate) fn map_params(graph: &Graph, id: NodeId) -> &[MapParam] {
    match graph.node(id) {
        Ok(Node::Map { params, .. }) => params,
        _ => &[],
    }
}

fn vector_width(graph: &Graph, id: NodeId) -> u32 {
    match graph.node(id) {
        Ok(Node::Map { vector_width, .. }) => *vector_width,
        _ => 1,
    }
}

fn is_top_map(graph: &Graph, parents: &BTreeMap<NodeId, NodeId>, id: NodeId) -> bool {
    !parents.contains_key(&id) && matches!(graph.node(id), Ok(Node::Map { .. }))
}

/// Verdict for replacing a local container by a FIFO: exactly one producing
/// and one consuming map, with equal access sequences.
pub(crate) fn local_link(graph: &Graph, c: NodeId) -> Option<(NodeId, NodeId, Streamability)> {
    let Ok(Node::Container {
        location: Location::Local,
        ..
    }) = graph.node(c)
    else {
        return None;
    };
    let ins: Vec<_> = graph.in_edges(c).collect();
    let outs: Vec<_> = graph.out_edges(c).collect();
    let ([w], [r]) = (ins.as_slice(), outs.as_slice()) else {
        return None;
    };
    let (Some(wm), Some(rm)) = (w.data.memlet(), r.data.memlet()) else {
        return None;
    };
    let verdict = sequences_compatible(
        AccessSide {
            memlet: wm,
            params: map_params(graph, w.src.node),
        },
        AccessSide {
            memlet: rm,
            params: map_params(graph, r.dst.node),
        },
        &graph.binding(),
    );
    Some((w.src.node, r.dst.node, verdict))
}

fn all_affine(graph: &Graph, id: NodeId) -> bool {
    graph
        .in_edges(id)
        .chain(graph.out_edges(id))
        .all(|e| e.data.memlet().is_none_or(|m| m.is_affine()))
}

/// Connected groups of maps joined by streams or by streamable local
/// containers, restricted to maps accepted by `allow`. Sorted largest first,
/// ties broken by the smallest node id.
pub(crate) fn streamable_groups(
    graph: &Graph,
    allow: &dyn Fn(NodeId) -> bool,
) -> Vec<SubgraphView> {
    let parents = graph.scope_parents();
    let maps: BTreeSet<NodeId> = graph
        .top_level()
        .into_iter()
        .filter(|id| is_top_map(graph, &parents, *id) && all_affine(graph, *id) && allow(*id))
        .collect();
    let mut parent: BTreeMap<NodeId, NodeId> = maps.iter().map(|m| (*m, *m)).collect();
    fn find(p: &mut BTreeMap<NodeId, NodeId>, x: NodeId) -> NodeId {
        let mut r = x;
        while p[&r] != r {
            r = p[&r];
        }
        p.insert(x, r);
        r
    }
    let mut links: Vec<(NodeId, NodeId, NodeId)> = Vec::new();
    for (id, n) in graph.nodes() {
        let link = match n {
            Node::Stream { .. } => {
                let src = graph.in_edges(id).map(|e| e.src.node).next();
                let dst = graph.out_edges(id).map(|e| e.dst.node).next();
                src.zip(dst)
            }
            Node::Container { .. } => match local_link(graph, id) {
                Some((w, r, v)) if v.is_streamable() => Some((w, r)),
                _ => None,
            },
            _ => None,
        };
        if let Some((a, b)) = link {
            if maps.contains(&a) && maps.contains(&b) && a != b {
                links.push((a, b, id));
            }
        }
    }
    for (a, b, _) in &links {
        let (ra, rb) = (find(&mut parent, *a), find(&mut parent, *b));
        if ra != rb {
            parent.insert(ra.max(rb), ra.min(rb));
        }
    }
    let mut groups: BTreeMap<NodeId, BTreeSet<NodeId>> = BTreeMap::new();
    for m in &maps {
        let r = find(&mut parent, *m);
        groups.entry(r).or_default().insert(*m);
    }
    for (a, _, via) in &links {
        let r = find(&mut parent, *a);
        groups.entry(r).or_default().insert(*via);
    }
    let mut groups: Vec<BTreeSet<NodeId>> = groups.into_values().collect();
    groups.sort_by(|x, y| {
        graph
            .weight(y)
            .cmp(&graph.weight(x))
            .then_with(|| x.first().cmp(&y.first()))
    });
    groups
        .iter()
        .filter_map(|g| graph.extract_subgraph(g).ok())
        .collect()
}

pub(crate) fn largest_streamable(graph: &Graph, allow: &dyn Fn(NodeId) -> bool) -> SubgraphView {
    streamable_groups(graph, allow)
        .into_iter()
        .next()
        .unwrap_or_default()
}

/// Largest group of maps that can run as one streaming pipeline. Ties go to
/// the group containing the smallest node id.
pub fn find_streamable_subgraph(graph: &Graph) -> SubgraphView {
    largest_streamable(graph, &|_| true)
}

fn unique_stream_name(graph: &Graph, base: String) -> String {
    let taken: BTreeSet<String> = graph
        .nodes()
        .filter_map(|(_, n)| match n {
            Node::Stream { name, .. } | Node::Container { name, .. } => Some(name.clone()),
            _ => None,
        })
        .collect();
    if !taken.contains(&base) {
        return base;
    }
    (1..)
        .map(|i| format!("{base}_{i}"))
        .find(|n| !taken.contains(n))
        .expect("unbounded suffixes")
}

/// Replaces the memory accesses of `sub` by FIFOs: each boundary read gets a
/// Reader feeding a stream, each boundary write a Writer draining one, and
/// streamable local containers between members become plain streams.
pub fn streamify(graph: &Graph, sub: &SubgraphView) -> Result<Graph, StreamifyError> {
    let mut g = graph.clone();
    let parents = graph.scope_parents();
    let members: BTreeSet<NodeId> = sub
        .nodes
        .iter()
        .copied()
        .filter(|id| is_top_map(graph, &parents, *id))
        .collect();

    for c in sub.nodes.iter().copied() {
        if !matches!(graph.node(c)?, Node::Container { .. }) {
            continue;
        }
        let Some((w, r, verdict)) = local_link(graph, c) else {
            continue;
        };
        if !members.contains(&w) || !members.contains(&r) {
            continue;
        }
        let in_edge = graph.in_edges(c).next().expect("local link").clone();
        let out_edge = graph.out_edges(c).next().expect("local link").clone();
        if let Streamability::NotStreamable(reason) = verdict {
            return Err(StreamifyError::Unstreamable {
                edge: out_edge.id,
                reason,
            });
        }
        let Node::Container { name, .. } = g.remove_node(c)? else {
            unreachable!()
        };
        g.remove_edge(in_edge.id)?;
        g.remove_edge(out_edge.id)?;
        let domain = g.domain_of(w).unwrap_or(g.default_domain());
        let s = g.insert(
            Node::stream(&name, vector_width(graph, w), DEFAULT_STREAM_DEPTH),
            domain,
        );
        g.connect(w, &in_edge.src.port, s, "in", EdgeData::Stream)?;
        g.connect(s, "out", r, &out_edge.dst.port, EdgeData::Stream)?;
    }

    for m in members.iter().copied() {
        let domain = g.domain_of(m).unwrap_or(g.default_domain());
        let params = map_params(graph, m).to_vec();
        let lanes = vector_width(graph, m);
        let inbound: Vec<_> = g
            .in_edges(m)
            .filter(|e| e.data.memlet().is_some() && !members.contains(&e.src.node))
            .cloned()
            .collect();
        for e in inbound {
            let mem = e.data.memlet().expect("filtered").clone();
            if !mem.is_affine() {
                return Err(StreamifyError::Unstreamable {
                    edge: e.id,
                    reason: StreamReason::NonAffine,
                });
            }
            g.remove_edge(e.id)?;
            let name = unique_stream_name(&g, format!("{}_{}", mem.data, e.dst.port));
            let reader = g.insert(
                Node::Reader {
                    params: params.clone(),
                    lanes,
                },
                domain,
            );
            let s = g.insert(Node::stream(&name, lanes, DEFAULT_STREAM_DEPTH), domain);
            g.connect(e.src.node, &e.src.port, reader, "in", EdgeData::Memlet(mem))?;
            g.connect(reader, "out", s, "in", EdgeData::Stream)?;
            g.connect(s, "out", m, &e.dst.port, EdgeData::Stream)?;
        }
        let outbound: Vec<_> = g
            .out_edges(m)
            .filter(|e| e.data.memlet().is_some() && !members.contains(&e.dst.node))
            .cloned()
            .collect();
        for e in outbound {
            let mem = e.data.memlet().expect("filtered").clone();
            if !mem.is_affine() {
                return Err(StreamifyError::Unstreamable {
                    edge: e.id,
                    reason: StreamReason::NonAffine,
                });
            }
            g.remove_edge(e.id)?;
            let name = unique_stream_name(&g, format!("{}_{}", mem.data, e.src.port));
            let s = g.insert(Node::stream(&name, lanes, DEFAULT_STREAM_DEPTH), domain);
            let writer = g.insert(
                Node::Writer {
                    params: params.clone(),
                    lanes,
                },
                domain,
            );
            g.connect(m, &e.src.port, s, "in", EdgeData::Stream)?;
            g.connect(s, "out", writer, "in", EdgeData::Stream)?;
            g.connect(writer, "out", e.dst.node, &e.dst.port, EdgeData::Memlet(mem))?;
        }
    }
    Ok(g)
}

/// Streamifies every streamable group, largest first, until none is left
/// with direct memory accesses.
pub fn streamify_all(graph: &Graph) -> Result<Graph, StreamifyError> {
    let mut g = graph.clone();
    loop {
        let has_memory = |g: &Graph, id: NodeId| {
            g.in_edges(id)
                .chain(g.out_edges(id))
                .any(|e| e.data.memlet().is_some())
        };
        let snapshot = g.clone();
        let view = largest_streamable(&snapshot, &|id| has_memory(&snapshot, id));
        if view.is_empty() {
            return Ok(g);
        }
        g = streamify(&g, &view)?;
    }
}
