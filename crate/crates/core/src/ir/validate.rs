use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::graph::{EdgeData, EdgeId, Graph, NodeId};
use super::node::{Expr, Node, Stmt};
use super::{IrError, LANE_SYMBOL};
use crate::symbolic::{AffineExpr, MapParam};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Rule {
    DanglingEdge,
    Cycle,
    MissingDomain,
    UnknownDomain,
    TooManyDomains,
    BadFrequency,
    FastSlowerThanSlow,
    StreamFanIn,
    StreamFanOut,
    MemletEndpoint,
    MemletContainerMismatch,
    StreamEdgeEndpoint,
    NestedEdge,
    IssuerWidthMismatch,
    PackerWidthMismatch,
    BadLanes,
    UnboundSymbol,
    BodyStructure,
    UnknownConnector,
    UnknownBuffer,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub rule: Rule,
    pub node: Option<NodeId>,
    pub edge: Option<EdgeId>,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.rule)?;
        if let Some(n) = self.node {
            write!(f, " at {n}")?;
        }
        if let Some(e) = self.edge {
            write!(f, " at {e}")?;
        }
        write!(f, ": {}", self.detail)
    }
}

/// Symbols visible inside scope `parent`: graph symbols plus the params of
/// every enclosing map.
pub(crate) fn scope_symbols(graph: &Graph, parent: Option<NodeId>) -> BTreeSet<String> {
    let mut out: BTreeSet<String> = graph.symbols.keys().cloned().collect();
    out.insert(LANE_SYMBOL.to_string());
    let parents = graph.scope_parents();
    let mut cur = parent;
    while let Some(id) = cur {
        if let Ok(Node::Map { params, .. }) = graph.node(id) {
            out.extend(params.iter().map(|p| p.name.clone()));
        }
        cur = parents.get(&id).copied();
    }
    out
}

fn check_expr_symbols(
    e: &AffineExpr,
    scope: &BTreeSet<String>,
    path: &str,
) -> Result<(), IrError> {
    for s in e.symbols() {
        if !scope.contains(s) {
            return Err(IrError::UnboundSymbol {
                symbol: s.to_string(),
                path: path.to_string(),
            });
        }
    }
    Ok(())
}

fn check_params(
    params: &[MapParam],
    mut scope: BTreeSet<String>,
    path: &str,
) -> Result<(), IrError> {
    for (i, p) in params.iter().enumerate() {
        let here = format!("{path}.params[{i}]");
        check_expr_symbols(&p.range.begin, &scope, &here)?;
        check_expr_symbols(&p.range.end, &scope, &here)?;
        if p.range.stride <= 0 {
            return Err(IrError::Validation {
                path: here,
                msg: "stride must be positive".into(),
            });
        }
        scope.insert(p.name.clone());
    }
    Ok(())
}

fn positive(v: u32, path: &str, what: &str) -> Result<(), IrError> {
    if v == 0 {
        Err(IrError::Validation {
            path: format!("{path}.{what}"),
            msg: format!("{what} must be >= 1"),
        })
    } else {
        Ok(())
    }
}

/// Build-time well-formedness of a single node.
pub(crate) fn check_node_spec(
    graph: &Graph,
    node: &Node,
    parent: Option<NodeId>,
) -> Result<(), IrError> {
    let path = "node";
    let scope = scope_symbols(graph, parent);
    match node {
        Node::Container { shape, .. } => {
            for (i, e) in shape.iter().enumerate() {
                check_expr_symbols(e, &scope, &format!("{path}.shape[{i}]"))?;
            }
        }
        Node::Stream { lanes, depth, .. } => {
            positive(*lanes, path, "lanes")?;
            positive(*depth, path, "depth")?;
        }
        Node::Map {
            params,
            vector_width,
            lanes,
            locals,
            ..
        } => {
            positive(*vector_width, path, "vector_width")?;
            positive(*lanes, path, "lanes")?;
            check_params(params, scope, path)?;
            for (i, l) in locals.iter().enumerate() {
                if l.shape.iter().any(|d| *d <= 0) {
                    return Err(IrError::Validation {
                        path: format!("{path}.locals[{i}]"),
                        msg: "local buffer extents must be positive".into(),
                    });
                }
            }
        }
        Node::Tasklet(_) => {
            if parent.is_none() {
                return Err(IrError::Validation {
                    path: path.into(),
                    msg: "tasklets must be placed inside a map scope".into(),
                });
            }
        }
        Node::Reader { params, lanes } | Node::Writer { params, lanes } => {
            positive(*lanes, path, "lanes")?;
            check_params(params, scope, path)?;
        }
        Node::Synchronizer { .. } => {}
        Node::Issuer {
            wide,
            narrow,
            factor,
        }
        | Node::Packer {
            wide,
            narrow,
            factor,
        } => {
            positive(*narrow, path, "narrow")?;
            positive(*factor, path, "factor")?;
            if *wide != factor * narrow {
                return Err(IrError::Validation {
                    path: format!("{path}.wide"),
                    msg: format!("wide ({wide}) must equal factor ({factor}) x narrow ({narrow})"),
                });
            }
        }
    }
    Ok(())
}

struct Checker<'a> {
    g: &'a Graph,
    out: Vec<Violation>,
}

impl Checker<'_> {
    fn push(&mut self, rule: Rule, node: Option<NodeId>, edge: Option<EdgeId>, detail: String) {
        self.out.push(Violation {
            rule,
            node,
            edge,
            detail,
        });
    }
}

/// Checks every structural invariant; an empty list means the graph is valid.
pub fn validate(graph: &Graph) -> Vec<Violation> {
    let mut c = Checker {
        g: graph,
        out: Vec::new(),
    };
    check_domains(&mut c);
    check_edges(&mut c);
    check_nodes(&mut c);
    check_scopes(&mut c);
    if c.out.iter().all(|v| v.rule != Rule::DanglingEdge) {
        if let Err(n) = graph.topological_order() {
            c.push(Rule::Cycle, Some(n), None, "cycle between top-level nodes".into());
        }
    }
    c.out
}

fn check_domains(c: &mut Checker<'_>) {
    let g = c.g;
    if g.clock_domains.len() > 2 {
        c.push(
            Rule::TooManyDomains,
            None,
            None,
            format!("{} clock domains, at most 2 allowed", g.clock_domains.len()),
        );
    }
    for d in g.clock_domains.values() {
        if !d.frequency_mhz.is_positive() {
            c.push(
                Rule::BadFrequency,
                None,
                None,
                format!("domain {} has non-positive frequency", d.id),
            );
        }
    }
    let freqs: Vec<_> = g.clock_domains.values().map(|d| d.frequency_mhz).collect();
    if freqs.windows(2).any(|w| w[1] < w[0]) {
        c.push(
            Rule::FastSlowerThanSlow,
            None,
            None,
            "fast domain must not be slower than the slow domain".into(),
        );
    }
    for id in g.nodes.keys() {
        match g.node_domain.get(id) {
            None => c.push(Rule::MissingDomain, Some(*id), None, "no clock domain".into()),
            Some(d) if !g.clock_domains.contains_key(d) => c.push(
                Rule::UnknownDomain,
                Some(*id),
                None,
                format!("unknown domain {d}"),
            ),
            _ => {}
        }
    }
}

fn check_edges(c: &mut Checker<'_>) {
    let g = c.g;
    let parents = g.scope_parents();
    let mut stream_in: BTreeMap<NodeId, usize> = BTreeMap::new();
    let mut stream_out: BTreeMap<NodeId, usize> = BTreeMap::new();
    for e in &g.edges {
        let (Some(src), Some(dst)) = (g.nodes.get(&e.src.node), g.nodes.get(&e.dst.node)) else {
            c.push(
                Rule::DanglingEdge,
                None,
                Some(e.id),
                format!("{} -> {} references a missing node", e.src.node, e.dst.node),
            );
            continue;
        };
        if parents.contains_key(&e.src.node) || parents.contains_key(&e.dst.node) {
            c.push(
                Rule::NestedEdge,
                None,
                Some(e.id),
                "edges must connect top-level nodes".into(),
            );
        }
        let is_container = |n: &Node| matches!(n, Node::Container { .. });
        match &e.data {
            EdgeData::Memlet(m) => {
                if !is_container(src) && !is_container(dst) {
                    c.push(
                        Rule::MemletEndpoint,
                        None,
                        Some(e.id),
                        "memlet edge touches no container".into(),
                    );
                }
                for n in [src, dst] {
                    if let Node::Container { name, .. } = n {
                        if *name != m.data {
                            c.push(
                                Rule::MemletContainerMismatch,
                                None,
                                Some(e.id),
                                format!("memlet on `{}` attached to container `{name}`", m.data),
                            );
                        }
                    }
                }
            }
            EdgeData::Stream => {
                if is_container(src) || is_container(dst) {
                    c.push(
                        Rule::StreamEdgeEndpoint,
                        None,
                        Some(e.id),
                        "stream edge touches a container".into(),
                    );
                }
                if matches!(dst, Node::Stream { .. }) {
                    *stream_in.entry(e.dst.node).or_default() += 1;
                }
                if matches!(src, Node::Stream { .. }) {
                    *stream_out.entry(e.src.node).or_default() += 1;
                }
                if !matches!(src, Node::Stream { .. }) && !matches!(dst, Node::Stream { .. }) {
                    c.push(
                        Rule::StreamEdgeEndpoint,
                        None,
                        Some(e.id),
                        "stream edge must pass through a stream node".into(),
                    );
                }
            }
        }
    }
    for (id, n) in &g.nodes {
        if matches!(n, Node::Stream { .. }) {
            let i = stream_in.get(id).copied().unwrap_or(0);
            let o = stream_out.get(id).copied().unwrap_or(0);
            if i != 1 {
                c.push(Rule::StreamFanIn, Some(*id), None, format!("{i} producers"));
            }
            if o != 1 {
                c.push(Rule::StreamFanOut, Some(*id), None, format!("{o} consumers"));
            }
        }
    }
}

fn check_nodes(c: &mut Checker<'_>) {
    let g = c.g;
    let parents = g.scope_parents();
    for (id, n) in &g.nodes {
        let parent = parents.get(id).copied();
        match n {
            Node::Issuer {
                wide,
                narrow,
                factor,
            } => {
                if *wide != factor * narrow || *narrow == 0 {
                    c.push(
                        Rule::IssuerWidthMismatch,
                        Some(*id),
                        None,
                        format!("wide {wide} != {factor} x narrow {narrow}"),
                    );
                }
            }
            Node::Packer {
                wide,
                narrow,
                factor,
            } => {
                if *wide != factor * narrow || *narrow == 0 {
                    c.push(
                        Rule::PackerWidthMismatch,
                        Some(*id),
                        None,
                        format!("wide {wide} != {factor} x narrow {narrow}"),
                    );
                }
            }
            Node::Tasklet(_) if parent.is_none() => c.push(
                Rule::BodyStructure,
                Some(*id),
                None,
                "tasklet outside any map scope".into(),
            ),
            _ => match check_node_spec(g, n, parent) {
                Err(IrError::UnboundSymbol { symbol, path }) => c.push(
                    Rule::UnboundSymbol,
                    Some(*id),
                    None,
                    format!("`{symbol}` at {path}"),
                ),
                Err(e) => c.push(Rule::BadLanes, Some(*id), None, e.to_string()),
                Ok(()) => {}
            },
        }
    }
}

/// Tasklet connectors must be bound on the root map; buffers must exist.
fn check_scopes(c: &mut Checker<'_>) {
    let g = c.g;
    let parents = g.scope_parents();
    let mut seen_child: BTreeSet<NodeId> = BTreeSet::new();
    for (id, n) in &g.nodes {
        let Node::Map { body, .. } = n else { continue };
        for child in body {
            match g.nodes.get(child) {
                Some(Node::Map { .. } | Node::Tasklet(_)) => {}
                _ => c.push(
                    Rule::BodyStructure,
                    Some(*id),
                    None,
                    format!("body entry {child} is not a map or tasklet"),
                ),
            }
            if !seen_child.insert(*child) {
                c.push(
                    Rule::BodyStructure,
                    Some(*child),
                    None,
                    "node appears in more than one body".into(),
                );
            }
        }
    }
    for root in g.top_level() {
        let Ok(Node::Map { locals, .. }) = g.node(root) else { continue };
        let ins: BTreeSet<&str> = g.in_edges(root).map(|e| e.dst.port.as_str()).collect();
        let outs: BTreeSet<&str> = g.out_edges(root).map(|e| e.src.port.as_str()).collect();
        let bufs: BTreeSet<&str> = locals.iter().map(|l| l.name.as_str()).collect();
        for d in g.descendants(root) {
            let Ok(Node::Tasklet(t)) = g.node(d) else { continue };
            let scope = scope_symbols(g, parents.get(&d).copied());
            for conn in t.inputs().iter().chain(t.gathers().iter()) {
                if !ins.contains(conn.as_str()) {
                    c.push(
                        Rule::UnknownConnector,
                        Some(d),
                        None,
                        format!("input connector `{conn}` not bound on {root}"),
                    );
                }
            }
            for conn in t.outputs() {
                if !outs.contains(conn.as_str()) {
                    c.push(
                        Rule::UnknownConnector,
                        Some(d),
                        None,
                        format!("output connector `{conn}` not bound on {root}"),
                    );
                }
            }
            let check_buf = |c: &mut Checker<'_>, name: &str, index: &[AffineExpr]| {
                if !bufs.contains(name) {
                    c.push(
                        Rule::UnknownBuffer,
                        Some(d),
                        None,
                        format!("local buffer `{name}` not declared on {root}"),
                    );
                }
                for e in index {
                    for s in e.symbols() {
                        if !scope.contains(s) {
                            c.push(Rule::UnboundSymbol, Some(d), None, format!("`{s}`"));
                        }
                    }
                }
            };
            for s in &t.stmts {
                if let Stmt::Store { buffer, index, .. } = s {
                    check_buf(c, buffer, index);
                }
            }
            let mut loads = Vec::new();
            t.walk(&mut |e| match e {
                Expr::Load { buffer, index } => loads.push((buffer.clone(), index.clone())),
                Expr::Index { expr } => loads.push((String::new(), vec![expr.clone()])),
                _ => {}
            });
            for (b, idx) in loads {
                if b.is_empty() {
                    for s in idx[0].symbols() {
                        if !scope.contains(s) {
                            c.push(Rule::UnboundSymbol, Some(d), None, format!("`{s}`"));
                        }
                    }
                } else {
                    check_buf(c, &b, &idx);
                }
            }
        }
    }
}
