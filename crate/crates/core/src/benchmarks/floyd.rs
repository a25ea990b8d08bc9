use super::{positive, SpecError};
use crate::ir::{
    BinOp, EdgeData, ElemType, Expr, Graph, LocalBuffer, Location, Node, Scalar, Stmt, Tasklet,
};
use crate::symbolic::{AffineExpr, Dim, MapParam, Memlet, Range};

/// Distance used for missing edges; large enough that sums never overflow.
pub const INF: i64 = 1 << 40;

fn full(name: &str) -> Memlet {
    Memlet::new(
        name,
        vec![Dim::Range(Range::new(0, "N")), Dim::Range(Range::new(0, "N"))],
    )
}

fn params(names: &[&str]) -> Vec<MapParam> {
    names
        .iter()
        .map(|p| MapParam::new(*p, Range::new(0, "N")))
        .collect()
}

fn idx(s: &[&str]) -> Vec<AffineExpr> {
    s.iter().map(|e| AffineExpr::from(*e)).collect()
}

/// All-pairs shortest paths: the matrix is loaded into an on-chip buffer,
/// relaxed in place by the `k, i, j` triple loop and written back.
pub fn floyd_warshall(n: i64) -> Result<Graph, SpecError> {
    positive("N", n)?;
    let mut g = Graph::new().with_symbol("N", n);
    let din = g.add_node(Node::container(
        "dist_in",
        ElemType::I64,
        &["N", "N"],
        Location::External,
    ))?;
    let mut root = Node::map("fw", Vec::new());
    if let Node::Map { locals, .. } = &mut root {
        locals.push(LocalBuffer {
            name: "D".into(),
            elem: ElemType::I64,
            shape: vec![n, n],
            per_lane: false,
        });
    }
    let fw = g.add_node(root)?;
    let dout = g.add_node(Node::container(
        "dist",
        ElemType::I64,
        &["N", "N"],
        Location::External,
    ))?;
    g.connect(din, "out", fw, "din", EdgeData::Memlet(full("dist_in")))?;
    g.connect(fw, "dout", dout, "in", EdgeData::Memlet(full("dist")))?;

    let load = g.add_child(fw, Node::map("load", params(&["i", "j"])))?;
    g.add_child(
        load,
        Node::Tasklet(Tasklet::new(
            "load",
            ElemType::I64,
            vec![Stmt::Store {
                buffer: "D".into(),
                index: idx(&["i", "j"]),
                value: Expr::input("din"),
            }],
        )),
    )?;
    let relax = g.add_child(fw, Node::map("relax", params(&["k", "i", "j"])))?;
    g.add_child(
        relax,
        Node::Tasklet(Tasklet::new(
            "relax",
            ElemType::I64,
            vec![Stmt::Store {
                buffer: "D".into(),
                index: idx(&["i", "j"]),
                value: Expr::bin(
                    BinOp::Min,
                    Expr::load("D", &["i", "j"]),
                    Expr::bin(BinOp::Add, Expr::load("D", &["i", "k"]), Expr::load("D", &["k", "j"])),
                ),
            }],
        )),
    )?;
    let store = g.add_child(fw, Node::map("store", params(&["i", "j"])))?;
    g.add_child(
        store,
        Node::Tasklet(Tasklet::new(
            "store",
            ElemType::I64,
            vec![Stmt::Out {
                conn: "dout".into(),
                value: Expr::load("D", &["i", "j"]),
            }],
        )),
    )?;
    Ok(g)
}

/// Sparse directed graph: zero diagonal, some weighted edges, `INF` elsewhere.
pub(super) fn adjacency(n: i64) -> Vec<Scalar> {
    let mut out = Vec::with_capacity((n * n) as usize);
    for i in 0..n {
        for j in 0..n {
            let w = if i == j {
                0
            } else if (i * 31 + j * 17) % 5 == 0 || j == (i + 1) % n {
                1 + (i * 7 + j * 3) % 9
            } else {
                INF
            };
            out.push(Scalar::I64(w));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::reference_execute;

    #[test]
    fn chain_of_unit_edges() {
        let g = floyd_warshall(4).unwrap();
        let mut d = vec![Scalar::I64(INF); 16];
        for i in 0..4 {
            d[i * 4 + i] = Scalar::I64(0);
        }
        for (a, b) in [(0, 1), (1, 2), (2, 3)] {
            d[a * 4 + b] = Scalar::I64(1);
        }
        let out = reference_execute(&g, &[("dist_in".to_string(), d)].into()).unwrap();
        assert_eq!(out["dist"][3], Scalar::I64(3));
        assert_eq!(out["dist"][4 + 3], Scalar::I64(2));
        assert_eq!(out["dist"][3 * 4], Scalar::I64(INF));
    }
}
