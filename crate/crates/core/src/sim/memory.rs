use std::collections::BTreeMap;

use super::{linear_index, SimError};
use crate::ir::{Graph, Node, Scalar};
use crate::symbolic::{access_sequence, MapParam, Memlet};

/// Container contents by name, flattened row-major.
pub type Memory = BTreeMap<String, Vec<Scalar>>;

pub(crate) fn container_shape(graph: &Graph, name: &str) -> Result<Vec<i64>, SimError> {
    let id = graph
        .find_container(name)
        .ok_or_else(|| SimError::UnknownContainer(name.to_string()))?;
    let Node::Container { shape, .. } = graph.node(id)? else {
        return Err(SimError::UnknownContainer(name.to_string()));
    };
    let b = graph.binding();
    Ok(shape
        .iter()
        .map(|e| e.eval(&b))
        .collect::<Result<Vec<_>, _>>()?)
}

/// Zero-filled storage for every container, overlaid with `inputs`.
pub fn init_memory(graph: &Graph, inputs: &Memory) -> Result<Memory, SimError> {
    let mut mem = Memory::new();
    for (_, n) in graph.nodes() {
        if let Node::Container { name, elem, .. } = n {
            let len: i64 = container_shape(graph, name)?.iter().product();
            mem.insert(name.clone(), vec![elem.zero(); len.max(0) as usize]);
        }
    }
    for (name, values) in inputs {
        let slot = mem
            .get_mut(name)
            .ok_or_else(|| SimError::UnknownContainer(name.clone()))?;
        if slot.len() != values.len() {
            return Err(SimError::InputShape {
                name: name.clone(),
                expected: slot.len(),
                got: values.len(),
            });
        }
        slot.clone_from(values);
    }
    Ok(mem)
}

/// Flat offsets of `memlet` replayed over `params`, in access order.
pub(crate) fn offsets(
    graph: &Graph,
    memlet: &Memlet,
    params: &[MapParam],
) -> Result<Vec<usize>, SimError> {
    let shape = container_shape(graph, &memlet.data)?;
    let seq = access_sequence(memlet, params, &graph.binding(), usize::MAX)?;
    seq.iter()
        .map(|pt| {
            linear_index(&shape, pt).ok_or_else(|| {
                SimError::Exec(super::ExecError::OutOfBounds {
                    name: memlet.data.clone(),
                    index: pt.clone(),
                })
            })
        })
        .collect()
}
