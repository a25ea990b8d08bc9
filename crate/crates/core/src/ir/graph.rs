use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use petgraph::algo::toposort;
use petgraph::graph::DiGraph;
use serde::{Deserialize, Serialize};

use super::node::Node;
use super::types::Mhz;
use super::IrError;
use crate::symbolic::{Binding, Memlet};

macro_rules! id_type {
    ($name:ident, $prefix:literal) => {
        #[derive(
            Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize,
        )]
        #[serde(transparent)]
        pub struct $name(pub u32);

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, concat!($prefix, "{}"), self.0)
            }
        }
    };
}

id_type!(NodeId, "n");
id_type!(EdgeId, "e");
id_type!(DomainId, "d");

pub const SLOW_DOMAIN: DomainId = DomainId(0);
pub const FAST_DOMAIN: DomainId = DomainId(1);
pub const DEFAULT_CLOCK_MHZ: i64 = 300;
pub const GRAPH_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClockDomain {
    pub id: DomainId,
    pub frequency_mhz: Mhz,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Endpoint {
    pub node: NodeId,
    pub port: String,
}

impl Endpoint {
    pub fn new(node: NodeId, port: impl Into<String>) -> Self {
        Self {
            node,
            port: port.into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeData {
    Memlet(Memlet),
    Stream,
}

impl EdgeData {
    pub fn memlet(&self) -> Option<&Memlet> {
        match self {
            EdgeData::Memlet(m) => Some(m),
            EdgeData::Stream => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub id: EdgeId,
    pub src: Endpoint,
    pub dst: Endpoint,
    pub data: EdgeData,
}

/// Data-centric dataflow graph.
///
/// Node and edge ids are dense and assigned in insertion order; removing a
/// node never renumbers the others.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Graph {
    pub version: u32,
    pub symbols: BTreeMap<String, i64>,
    pub(crate) nodes: BTreeMap<NodeId, Node>,
    pub(crate) edges: Vec<Edge>,
    pub(crate) clock_domains: BTreeMap<DomainId, ClockDomain>,
    pub(crate) node_domain: BTreeMap<NodeId, DomainId>,
}

impl Default for Graph {
    fn default() -> Self {
        Self::new()
    }
}

/// A selection of nodes plus the edges inside it and crossing its border.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubgraphView {
    pub nodes: BTreeSet<NodeId>,
    pub internal: Vec<EdgeId>,
    pub boundary: Vec<EdgeId>,
}

impl SubgraphView {
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn contains(&self, id: NodeId) -> bool {
        self.nodes.contains(&id)
    }
}

impl Graph {
    /// Empty graph with a single clock domain at the default frequency.
    pub fn new() -> Self {
        let mut clock_domains = BTreeMap::new();
        clock_domains.insert(
            SLOW_DOMAIN,
            ClockDomain {
                id: SLOW_DOMAIN,
                frequency_mhz: Mhz::from_int(DEFAULT_CLOCK_MHZ),
            },
        );
        Self {
            version: GRAPH_FORMAT_VERSION,
            symbols: BTreeMap::new(),
            nodes: BTreeMap::new(),
            edges: Vec::new(),
            clock_domains,
            node_domain: BTreeMap::new(),
        }
    }

    pub fn with_symbol(mut self, name: &str, value: i64) -> Self {
        self.symbols.insert(name.into(), value);
        self
    }

    pub fn binding(&self) -> Binding {
        self.symbols.clone()
    }

    pub fn node(&self, id: NodeId) -> Result<&Node, IrError> {
        self.nodes.get(&id).ok_or(IrError::NotFound(id))
    }

    pub fn node_mut(&mut self, id: NodeId) -> Result<&mut Node, IrError> {
        self.nodes.get_mut(&id).ok_or(IrError::NotFound(id))
    }

    pub fn nodes(&self) -> impl Iterator<Item = (NodeId, &Node)> {
        self.nodes.iter().map(|(k, v)| (*k, v))
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, id: EdgeId) -> Result<&Edge, IrError> {
        self.edges
            .iter()
            .find(|e| e.id == id)
            .ok_or(IrError::EdgeNotFound(id))
    }

    pub fn edge_mut(&mut self, id: EdgeId) -> Result<&mut Edge, IrError> {
        self.edges
            .iter_mut()
            .find(|e| e.id == id)
            .ok_or(IrError::EdgeNotFound(id))
    }

    pub fn in_edges(&self, id: NodeId) -> impl Iterator<Item = &Edge> {
        self.edges.iter().filter(move |e| e.dst.node == id)
    }

    pub fn out_edges(&self, id: NodeId) -> impl Iterator<Item = &Edge> {
        self.edges.iter().filter(move |e| e.src.node == id)
    }

    pub fn clock_domains(&self) -> impl Iterator<Item = &ClockDomain> {
        self.clock_domains.values()
    }

    pub fn domain_count(&self) -> usize {
        self.clock_domains.len()
    }

    pub fn clock_domain(&self, id: DomainId) -> Option<&ClockDomain> {
        self.clock_domains.get(&id)
    }

    pub fn set_domain_frequency(&mut self, id: DomainId, f: Mhz) {
        self.clock_domains.insert(
            id,
            ClockDomain {
                id,
                frequency_mhz: f,
            },
        );
    }

    pub fn remove_domain(&mut self, id: DomainId) {
        self.clock_domains.remove(&id);
    }

    pub fn domain_of(&self, id: NodeId) -> Option<DomainId> {
        self.node_domain.get(&id).copied()
    }

    pub fn set_domain(&mut self, id: NodeId, d: DomainId) {
        self.node_domain.insert(id, d);
    }

    pub fn default_domain(&self) -> DomainId {
        self.clock_domains
            .keys()
            .next()
            .copied()
            .unwrap_or(SLOW_DOMAIN)
    }

    fn fresh_node_id(&self) -> NodeId {
        NodeId(self.nodes.keys().next_back().map_or(0, |n| n.0 + 1))
    }

    fn fresh_edge_id(&self) -> EdgeId {
        EdgeId(self.edges.iter().map(|e| e.id.0 + 1).max().unwrap_or(0))
    }

    /// Inserts a top-level node in the default domain.
    pub fn add_node(&mut self, node: Node) -> Result<NodeId, IrError> {
        super::validate::check_node_spec(self, &node, None)?;
        Ok(self.insert(node, self.default_domain()))
    }

    /// Inserts a node into the body of scope `parent`, after existing children.
    pub fn add_child(&mut self, parent: NodeId, node: Node) -> Result<NodeId, IrError> {
        if !self.node(parent)?.is_map() {
            return Err(IrError::Validation {
                path: format!("nodes.{}", parent.0),
                msg: "parent is not a map scope".into(),
            });
        }
        super::validate::check_node_spec(self, &node, Some(parent))?;
        let domain = self.domain_of(parent).unwrap_or(self.default_domain());
        let id = self.insert(node, domain);
        if let Node::Map { body, .. } = self.node_mut(parent)? {
            body.push(id);
        }
        Ok(id)
    }

    /// Inserts without checks. Used by transforms that build known-good nodes.
    pub(crate) fn insert(&mut self, node: Node, domain: DomainId) -> NodeId {
        let id = self.fresh_node_id();
        self.nodes.insert(id, node);
        self.node_domain.insert(id, domain);
        id
    }

    pub fn connect(
        &mut self,
        src: NodeId,
        src_port: &str,
        dst: NodeId,
        dst_port: &str,
        data: EdgeData,
    ) -> Result<EdgeId, IrError> {
        self.node(src)?;
        self.node(dst)?;
        let id = self.fresh_edge_id();
        self.edges.push(Edge {
            id,
            src: Endpoint::new(src, src_port),
            dst: Endpoint::new(dst, dst_port),
            data,
        });
        Ok(id)
    }

    pub fn remove_edge(&mut self, id: EdgeId) -> Result<Edge, IrError> {
        let pos = self
            .edges
            .iter()
            .position(|e| e.id == id)
            .ok_or(IrError::EdgeNotFound(id))?;
        Ok(self.edges.remove(pos))
    }

    /// Removes a node (and, for scopes, its whole body). Edges are left in
    /// place so callers can rewire; `validate` reports leftovers as dangling.
    pub fn remove_node(&mut self, id: NodeId) -> Result<Node, IrError> {
        let node = self.nodes.remove(&id).ok_or(IrError::NotFound(id))?;
        self.node_domain.remove(&id);
        if let Node::Map { body, .. } = &node {
            for child in body.clone() {
                self.remove_node(child)?;
            }
        }
        for n in self.nodes.values_mut() {
            if let Node::Map { body, .. } = n {
                body.retain(|c| *c != id);
            }
        }
        Ok(node)
    }

    /// Child → enclosing scope.
    pub fn scope_parents(&self) -> BTreeMap<NodeId, NodeId> {
        let mut out = BTreeMap::new();
        for (id, n) in &self.nodes {
            if let Node::Map { body, .. } = n {
                for c in body {
                    out.insert(*c, *id);
                }
            }
        }
        out
    }

    pub fn top_level(&self) -> Vec<NodeId> {
        let parents = self.scope_parents();
        self.nodes
            .keys()
            .filter(|k| !parents.contains_key(k))
            .copied()
            .collect()
    }

    /// The node and every node nested inside it.
    pub fn descendants(&self, id: NodeId) -> Vec<NodeId> {
        let mut out = vec![id];
        let mut i = 0;
        while i < out.len() {
            if let Some(Node::Map { body, .. }) = self.nodes.get(&out[i]) {
                out.extend(body.iter().copied());
            }
            i += 1;
        }
        out
    }

    pub fn find_container(&self, name: &str) -> Option<NodeId> {
        self.nodes.iter().find_map(|(id, n)| match n {
            Node::Container { name: cn, .. } if cn == name => Some(*id),
            _ => None,
        })
    }

    /// Top-level nodes in dependency order; `Err` names a node on a cycle.
    pub fn topological_order(&self) -> Result<Vec<NodeId>, NodeId> {
        let top = self.top_level();
        let mut g = DiGraph::<NodeId, ()>::new();
        let idx: BTreeMap<NodeId, _> = top.iter().map(|id| (*id, g.add_node(*id))).collect();
        for e in &self.edges {
            if let (Some(a), Some(b)) = (idx.get(&e.src.node), idx.get(&e.dst.node)) {
                g.add_edge(*a, *b, ());
            }
        }
        toposort(&g, None)
            .map(|order| order.into_iter().map(|i| g[i]).collect())
            .map_err(|cyc| g[cyc.node_id()])
    }

    /// Internal/boundary edge split for a node selection.
    pub fn extract_subgraph(&self, ids: &BTreeSet<NodeId>) -> Result<SubgraphView, IrError> {
        if ids.is_empty() {
            return Err(IrError::EmptySelection);
        }
        for id in ids {
            self.node(*id)?;
        }
        let mut view = SubgraphView {
            nodes: ids.clone(),
            ..Default::default()
        };
        for e in &self.edges {
            match (ids.contains(&e.src.node), ids.contains(&e.dst.node)) {
                (true, true) => view.internal.push(e.id),
                (true, false) | (false, true) => view.boundary.push(e.id),
                _ => {}
            }
        }
        Ok(view)
    }

    /// Counts the node and everything nested inside it.
    pub fn weight(&self, ids: &BTreeSet<NodeId>) -> usize {
        ids.iter().map(|id| self.descendants(*id).len()).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::{ElemType, Location};

    #[test]
    fn first_insertion_gets_id_zero() {
        let mut g = Graph::new().with_symbol("N", 8);
        let id = g
            .add_node(Node::container("x", ElemType::F32, &["N"], Location::External))
            .unwrap();
        assert_eq!(id, NodeId(0));
        assert_eq!(g.node_count(), 1);
        assert_eq!(g.domain_of(id), Some(SLOW_DOMAIN));
    }

    #[test]
    fn removal_keeps_other_ids() {
        let mut g = Graph::new();
        let a = g.add_node(Node::stream("a", 1, 4)).unwrap();
        let b = g.add_node(Node::stream("b", 1, 4)).unwrap();
        g.remove_node(a).unwrap();
        let c = g.add_node(Node::stream("c", 1, 4)).unwrap();
        assert_eq!(b, NodeId(1));
        assert_eq!(c, NodeId(2));
    }

    #[test]
    fn empty_and_unknown_selection() {
        let mut g = Graph::new();
        g.add_node(Node::stream("a", 1, 4)).unwrap();
        assert!(matches!(
            g.extract_subgraph(&BTreeSet::new()),
            Err(IrError::EmptySelection)
        ));
        assert!(matches!(
            g.extract_subgraph(&[NodeId(9)].into()),
            Err(IrError::NotFound(NodeId(9)))
        ));
    }
}
