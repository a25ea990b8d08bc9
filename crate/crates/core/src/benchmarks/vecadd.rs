use super::{positive, SpecError};
use crate::ir::{BinOp, EdgeData, ElemType, Expr, Graph, Location, Node, Stmt, Tasklet};
use crate::symbolic::{MapParam, Memlet, Range};
use crate::transforms::vectorize;

/// `z = x + y` over `N` elements, vectorized by `v`.
pub fn vecadd(n: i64, v: u32) -> Result<Graph, SpecError> {
    positive("N", n)?;
    positive("V", v as i64)?;
    if n % v as i64 != 0 {
        return Err(SpecError::Invalid(format!("N={n} is not a multiple of V={v}")));
    }
    let mut g = Graph::new().with_symbol("N", n);
    let x = g.add_node(Node::container("x", ElemType::F32, &["N"], Location::External))?;
    let y = g.add_node(Node::container("y", ElemType::F32, &["N"], Location::External))?;
    let map = g.add_node(Node::map(
        "vadd",
        vec![MapParam::new("i", Range::new(0, "N"))],
    ))?;
    g.add_child(
        map,
        Node::Tasklet(Tasklet::new(
            "add",
            ElemType::F32,
            vec![Stmt::Out {
                conn: "z".into(),
                value: Expr::bin(BinOp::Add, Expr::input("x"), Expr::input("y")),
            }],
        )),
    )?;
    let z = g.add_node(Node::container("z", ElemType::F32, &["N"], Location::External))?;
    g.connect(x, "out", map, "x", EdgeData::Memlet(Memlet::indexed("x", &["i"])))?;
    g.connect(y, "out", map, "y", EdgeData::Memlet(Memlet::indexed("y", &["i"])))?;
    g.connect(map, "z", z, "in", EdgeData::Memlet(Memlet::indexed("z", &["i"])))?;
    Ok(vectorize(&g, map, v)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::reference_execute;
    use crate::ir::Scalar;

    #[test]
    fn five_nodes_three_edges() {
        let g = vecadd(1024, 2).unwrap();
        assert_eq!(g.node_count(), 5);
        assert_eq!(g.edges().len(), 3);
    }

    #[test]
    fn reference_sums() {
        let g = vecadd(8, 2).unwrap();
        let v: Vec<Scalar> = (1..=8).map(|i| Scalar::F32(i as f32)).collect();
        let mem = [("x".to_string(), v.clone()), ("y".to_string(), v)].into();
        let out = reference_execute(&g, &mem).unwrap();
        let want: Vec<Scalar> = (1..=8).map(|i| Scalar::F32(2.0 * i as f32)).collect();
        assert_eq!(out["z"], want);
    }
}
