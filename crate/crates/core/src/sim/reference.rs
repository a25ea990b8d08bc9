use std::collections::{BTreeMap, VecDeque};

use super::memory::{init_memory, offsets, Memory};
use super::{ExecError, Io, Program, SimError};
use crate::ir::{validate, EdgeData, Graph, Node, NodeId, Scalar};
use crate::symbolic::Memlet;

enum Source {
    Queue(VecDeque<Scalar>),
    Gather(String),
}

enum Sink {
    Stream(NodeId),
    Memory(Memlet, Vec<Scalar>),
}

struct RefIo<'a> {
    mem: &'a Memory,
    queues: &'a mut BTreeMap<NodeId, VecDeque<Scalar>>,
    sources: BTreeMap<String, Source>,
    sinks: BTreeMap<String, Sink>,
}

impl Io for RefIo<'_> {
    fn pop(&mut self, conn: &str) -> Result<Scalar, ExecError> {
        match self.sources.get_mut(conn) {
            Some(Source::Queue(q)) => q.pop_front(),
            _ => None,
        }
        .ok_or_else(|| ExecError::Starved(conn.to_string()))
    }

    fn push(&mut self, conn: &str, value: Scalar) -> Result<(), ExecError> {
        match self.sinks.get_mut(conn) {
            Some(Sink::Stream(s)) => self.queues.entry(*s).or_default().push_back(value),
            Some(Sink::Memory(_, buf)) => buf.push(value),
            None => return Err(ExecError::Unbound(conn.to_string())),
        }
        Ok(())
    }

    fn gather(&mut self, conn: &str, index: i64) -> Result<Scalar, ExecError> {
        let Some(Source::Gather(name)) = self.sources.get(conn) else {
            return Err(ExecError::Unbound(conn.to_string()));
        };
        gather_from(self.mem, name, index)
    }
}

pub(crate) fn gather_from(mem: &Memory, name: &str, index: i64) -> Result<Scalar, ExecError> {
    let data = mem
        .get(name)
        .ok_or_else(|| ExecError::Unbound(name.to_string()))?;
    usize::try_from(index)
        .ok()
        .and_then(|i| data.get(i).copied())
        .ok_or_else(|| ExecError::OutOfBounds {
            name: name.to_string(),
            index: vec![index],
        })
}

pub(crate) fn read_memlet(
    graph: &Graph,
    mem: &Memory,
    memlet: &Memlet,
    params: &[crate::symbolic::MapParam],
) -> Result<Vec<Scalar>, SimError> {
    let data = mem
        .get(&memlet.data)
        .ok_or_else(|| SimError::UnknownContainer(memlet.data.clone()))?;
    Ok(offsets(graph, memlet, params)?
        .into_iter()
        .map(|o| data[o])
        .collect())
}

pub(crate) fn write_memlet(
    graph: &Graph,
    mem: &mut Memory,
    node: NodeId,
    memlet: &Memlet,
    params: &[crate::symbolic::MapParam],
    values: &[Scalar],
) -> Result<(), SimError> {
    let offs = offsets(graph, memlet, params)?;
    if offs.len() != values.len() {
        return Err(SimError::VolumeMismatch {
            node,
            expected: offs.len(),
            got: values.len(),
        });
    }
    let data = mem
        .get_mut(&memlet.data)
        .ok_or_else(|| SimError::UnknownContainer(memlet.data.clone()))?;
    for (o, v) in offs.into_iter().zip(values) {
        data[o] = *v;
    }
    Ok(())
}

fn map_params(graph: &Graph, id: NodeId) -> Vec<crate::symbolic::MapParam> {
    match graph.node(id) {
        Ok(Node::Map { params, .. } | Node::Reader { params, .. } | Node::Writer { params, .. }) => {
            params.clone()
        }
        _ => Vec::new(),
    }
}

/// Sequential interpretation: every top-level node runs to completion in
/// topological order, with streams acting as unbounded queues.
pub fn reference_execute(graph: &Graph, inputs: &Memory) -> Result<Memory, SimError> {
    let violations = validate(graph);
    if !violations.is_empty() {
        return Err(SimError::Invalid(violations));
    }
    let mut mem = init_memory(graph, inputs)?;
    let mut queues: BTreeMap<NodeId, VecDeque<Scalar>> = BTreeMap::new();
    let order = graph
        .topological_order()
        .map_err(ExecError::NotExecutable)?;
    for id in order {
        let params = map_params(graph, id);
        match graph.node(id)? {
            Node::Container { .. } | Node::Stream { .. } | Node::Tasklet(_) => {}
            Node::Map { .. } => {
                let mut sources = BTreeMap::new();
                for e in graph.in_edges(id) {
                    let src = match &e.data {
                        EdgeData::Stream => {
                            Source::Queue(queues.remove(&e.src.node).unwrap_or_default())
                        }
                        EdgeData::Memlet(m) if !m.is_affine() => Source::Gather(m.data.clone()),
                        EdgeData::Memlet(m) => {
                            Source::Queue(read_memlet(graph, &mem, m, &params)?.into())
                        }
                    };
                    sources.insert(e.dst.port.clone(), src);
                }
                let sinks = graph
                    .out_edges(id)
                    .map(|e| {
                        let sink = match &e.data {
                            EdgeData::Stream => Sink::Stream(e.dst.node),
                            EdgeData::Memlet(m) => Sink::Memory(m.clone(), Vec::new()),
                        };
                        (e.src.port.clone(), sink)
                    })
                    .collect();
                let mut prog = Program::build(graph, id)?;
                let mut io = RefIo {
                    mem: &mem,
                    queues: &mut queues,
                    sources,
                    sinks,
                };
                while !prog.done() {
                    prog.step(&mut io)?;
                }
                let sinks = std::mem::take(&mut io.sinks);
                for sink in sinks.into_values() {
                    if let Sink::Memory(m, values) = sink {
                        write_memlet(graph, &mut mem, id, &m, &params, &values)?;
                    }
                }
            }
            Node::Reader { .. } => {
                for e in graph.in_edges(id) {
                    if let EdgeData::Memlet(m) = &e.data {
                        let values = read_memlet(graph, &mem, m, &params)?;
                        for o in graph.out_edges(id) {
                            queues
                                .entry(o.dst.node)
                                .or_default()
                                .extend(values.iter().copied());
                        }
                    }
                }
            }
            Node::Writer { .. } => {
                let values: Vec<Scalar> = graph
                    .in_edges(id)
                    .flat_map(|e| queues.remove(&e.src.node).unwrap_or_default())
                    .collect();
                for e in graph.out_edges(id) {
                    if let EdgeData::Memlet(m) = &e.data {
                        write_memlet(graph, &mut mem, id, m, &params, &values)?;
                    }
                }
            }
            Node::Synchronizer { .. } | Node::Issuer { .. } | Node::Packer { .. } => {
                let values: VecDeque<Scalar> = graph
                    .in_edges(id)
                    .flat_map(|e| queues.remove(&e.src.node).unwrap_or_default())
                    .collect();
                for o in graph.out_edges(id) {
                    queues
                        .entry(o.dst.node)
                        .or_default()
                        .extend(values.iter().copied());
                }
            }
        }
    }
    Ok(mem)
}
