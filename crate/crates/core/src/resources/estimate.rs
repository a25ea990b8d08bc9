use std::collections::BTreeMap;

use super::{CostTable, ResourceError, ResourceVector};
use crate::ir::{ElemType, Expr, Graph, Location, Node, NodeId, Tasklet};

fn expr_type(e: &Expr, default: ElemType) -> ElemType {
    match e {
        Expr::Const { value } => value.ty(),
        Expr::Index { .. } => ElemType::I64,
        Expr::In { .. } | Expr::Load { .. } | Expr::Gather { .. } => default,
        Expr::Delay { value, .. } => expr_type(value, default),
        Expr::Bin { lhs, .. } => expr_type(lhs, default),
        Expr::Cmp { .. } => ElemType::Bool,
        Expr::Select { then, .. } => expr_type(then, default),
    }
}

fn op_key(e: &Expr, default: ElemType) -> Option<String> {
    let (ty, op) = match e {
        Expr::Bin { kind, lhs, .. } => (expr_type(lhs, default), kind.name()),
        Expr::Cmp { kind, lhs, .. } => (expr_type(lhs, default), kind.name()),
        Expr::Select { then, .. } => (expr_type(then, default), "select"),
        _ => return None,
    };
    Some(format!("{}.{op}", ty.name()))
}

/// Storage for `bits` split into one bank per lane.
fn banked(costs: &CostTable, bits: u64, lanes: u64) -> u64 {
    if bits == 0 {
        return 0;
    }
    lanes * costs.bram_blocks(bits.div_ceil(lanes))
}

fn tasklet_cost(t: &Tasklet, lanes: u64, costs: &CostTable) -> Result<ResourceVector, ResourceError> {
    let mut ops = ResourceVector::ZERO;
    let mut err = None;
    // Delay lines on the same value share one line buffer of the largest depth.
    let mut lines: Vec<(&Expr, u64)> = Vec::new();
    t.walk(&mut |e| {
        if let Some(key) = op_key(e, t.ty) {
            match costs.op(&key) {
                Ok(c) => ops += c,
                Err(x) => err = Some(x),
            }
        }
        if let Expr::Delay { value, depth } = e {
            match lines.iter_mut().find(|(v, _)| *v == value.as_ref()) {
                Some((_, d)) => *d = (*d).max(*depth as u64),
                None => lines.push((value.as_ref(), *depth as u64)),
            }
        }
    });
    if let Some(e) = err {
        return Err(e);
    }
    let mut total = ops * lanes;
    for (value, depth) in lines {
        let bits = depth * expr_type(value, t.ty).bits() as u64;
        if bits <= costs.buffers.delay_register_max_bits {
            total.registers += bits;
        } else {
            total.bram += banked(costs, bits, lanes);
        }
    }
    Ok(total)
}

fn lanes_of(graph: &Graph, id: NodeId) -> u64 {
    match graph.node(id) {
        Ok(Node::Map { lanes, .. }) => *lanes as u64,
        _ => 1,
    }
}

/// Stream lanes feeding a plumbing node.
fn input_stream(graph: &Graph, id: NodeId) -> (u64, u64) {
    graph
        .in_edges(id)
        .find_map(|e| match graph.node(e.src.node) {
            Ok(Node::Stream { lanes, depth, .. }) => Some((*lanes as u64, *depth as u64)),
            _ => None,
        })
        .unwrap_or((1, 1))
}

/// Sums the cost of every node. Tasklets are charged once per hardware lane
/// of their outermost map.
pub fn estimate(graph: &Graph, costs: &CostTable) -> Result<ResourceVector, ResourceError> {
    let parents = graph.scope_parents();
    let root_of = |mut id: NodeId| {
        while let Some(p) = parents.get(&id) {
            id = *p;
        }
        id
    };
    let binding = graph.binding();
    let p = &costs.plumbing;
    let mut per_node: BTreeMap<NodeId, ResourceVector> = BTreeMap::new();
    for (id, node) in graph.nodes() {
        let cost = match node {
            Node::Container {
                elem,
                shape,
                location: Location::Local,
                ..
            } => {
                let mut n = 1u64;
                for s in shape {
                    n *= s.eval(&binding).map_err(|e| ResourceError::Build(e.to_string()))?.max(0) as u64;
                }
                ResourceVector {
                    bram: costs.bram_blocks(n * elem.bits() as u64),
                    ..ResourceVector::ZERO
                }
            }
            Node::Container { .. } => ResourceVector::ZERO,
            Node::Stream { lanes, depth, .. } => {
                let slots = *lanes as u64 * *depth as u64;
                ResourceVector {
                    lut_memory: slots * p.stream_lut_memory_per_slot,
                    registers: slots * p.stream_registers_per_slot,
                    ..ResourceVector::ZERO
                }
            }
            Node::Map { locals, .. } => {
                let lanes = lanes_of(graph, root_of(id));
                let mut v = p.map_fixed;
                for l in locals {
                    let bits = l.len().max(0) as u64 * l.elem.bits() as u64;
                    v.bram += if l.per_lane {
                        banked(costs, bits, lanes)
                    } else {
                        costs.bram_blocks(bits)
                    };
                }
                v
            }
            Node::Tasklet(t) => tasklet_cost(t, lanes_of(graph, root_of(id)), costs)?,
            Node::Reader { lanes, .. } => p.reader_fixed + p.reader_per_lane * *lanes as u64,
            Node::Writer { lanes, .. } => p.writer_fixed + p.writer_per_lane * *lanes as u64,
            Node::Synchronizer { .. } => {
                let (lanes, depth) = input_stream(graph, id);
                ResourceVector {
                    registers: p.sync_registers_per_lane * lanes + p.sync_registers_per_depth * depth,
                    ..ResourceVector::ZERO
                }
            }
            Node::Issuer { wide, .. } | Node::Packer { wide, .. } => ResourceVector {
                lut_logic: p.convert_lut_per_lane * *wide as u64,
                ..ResourceVector::ZERO
            },
        };
        per_node.insert(id, cost);
    }
    Ok(per_node.into_values().sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::{BinOp, Stmt};

    fn mac() -> Tasklet {
        Tasklet::new(
            "mac",
            ElemType::F32,
            vec![Stmt::Out {
                conn: "c".into(),
                value: Expr::bin(
                    BinOp::Add,
                    Expr::input("acc"),
                    Expr::bin(BinOp::Mul, Expr::input("a"), Expr::input("b")),
                ),
            }],
        )
    }

    #[test]
    fn tasklet_cost_scales_with_lanes() {
        let c = CostTable::default();
        let one = tasklet_cost(&mac(), 1, &c).unwrap();
        let eight = tasklet_cost(&mac(), 8, &c).unwrap();
        assert_eq!(one.dsp, 5);
        assert_eq!(eight, one * 8);
    }

    #[test]
    fn shared_delay_line_takes_largest_depth() {
        let v = Expr::input("x");
        let t = Tasklet::new(
            "d",
            ElemType::F32,
            vec![Stmt::Out {
                conn: "y".into(),
                value: Expr::bin(
                    BinOp::Add,
                    Expr::delay(v.clone(), 4),
                    Expr::delay(v, 10),
                ),
            }],
        );
        let r = tasklet_cost(&t, 1, &CostTable::default()).unwrap();
        assert_eq!(r.registers, 350 + 10 * 32);
        assert_eq!(r.bram, 0);
    }

    #[test]
    fn long_delay_goes_to_bram_per_lane() {
        let t = Tasklet::new(
            "d",
            ElemType::F32,
            vec![Stmt::Out {
                conn: "y".into(),
                value: Expr::delay(Expr::input("x"), 1000),
            }],
        );
        let c = CostTable::default();
        assert_eq!(tasklet_cost(&t, 1, &c).unwrap().bram, 2);
        assert_eq!(tasklet_cost(&t, 4, &c).unwrap().bram, 4);
    }

    #[test]
    fn unknown_op_is_reported() {
        let mut c = CostTable::default();
        c.ops.remove("f32.mul");
        assert!(matches!(
            tasklet_cost(&mac(), 1, &c),
            Err(ResourceError::UnknownOpCost(k)) if k == "f32.mul"
        ));
    }
}
