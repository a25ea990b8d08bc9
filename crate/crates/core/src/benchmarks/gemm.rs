use super::{positive, SpecError};
use crate::ir::{
    BinOp, EdgeData, ElemType, Expr, Graph, LocalBuffer, Location, Node, NodeId, Stmt, Tasklet,
};
use crate::symbolic::{AffineExpr, MapParam, Memlet, Range};
use crate::transforms::DEFAULT_STREAM_DEPTH;

fn params(p: &[(&str, i64)]) -> Vec<MapParam> {
    p.iter()
        .map(|(name, n)| MapParam::new(*name, Range::new(0, *n)))
        .collect()
}

fn idx(s: &[&str]) -> Vec<AffineExpr> {
    s.iter().map(|e| AffineExpr::from(*e)).collect()
}

fn tasklet(label: &str, stmts: Vec<Stmt>) -> Node {
    Node::Tasklet(Tasklet::new(label, ElemType::F32, stmts))
}

fn out(conn: &str, value: Expr) -> Stmt {
    Stmt::Out {
        conn: conn.into(),
        value,
    }
}

fn store(buffer: &str, index: &[&str], value: Expr) -> Stmt {
    Stmt::Store {
        buffer: buffer.into(),
        index: idx(index),
        value,
    }
}

/// Adds a nested map with a single tasklet.
fn simple_loop(
    g: &mut Graph,
    parent: NodeId,
    label: &str,
    p: &[(&str, i64)],
    stmts: Vec<Stmt>,
) -> Result<NodeId, SpecError> {
    let m = g.add_child(parent, Node::map(label, params(p)))?;
    g.add_child(m, tasklet(label, stmts))?;
    Ok(m)
}

fn link(g: &mut Graph, from: (NodeId, &str), to: (NodeId, &str), name: &str) -> Result<(), SpecError> {
    let s = g.add_node(Node::stream(name, 1, DEFAULT_STREAM_DEPTH))?;
    g.connect(from.0, from.1, s, "in", EdgeData::Stream)?;
    g.connect(s, "out", to.0, to.1, EdgeData::Stream)?;
    Ok(())
}

struct Dims {
    rows: i64,
    k: i64,
    m: i64,
    pes: u32,
    v: u32,
}

/// One processing element: keeps its rows of A, forwards the rest, consumes
/// B column by column while accumulating its rows of C, then forwards the
/// C rows of its predecessors followed by its own.
fn pe(g: &mut Graph, p: u32, d: &Dims) -> Result<NodeId, SpecError> {
    let (first, last) = (p == 0, p + 1 == d.pes);
    let mut node = Node::map(&format!("pe{p}"), Vec::new());
    if let Node::Map { lanes, locals, .. } = &mut node {
        *lanes = d.v;
        locals.extend([
            LocalBuffer {
                name: "Aloc".into(),
                elem: ElemType::F32,
                shape: vec![d.rows, d.k],
                per_lane: false,
            },
            LocalBuffer {
                name: "Bcur".into(),
                elem: ElemType::F32,
                shape: vec![1],
                per_lane: false,
            },
            LocalBuffer {
                name: "Cloc".into(),
                elem: ElemType::F32,
                shape: vec![d.rows, d.m],
                per_lane: true,
            },
        ]);
    }
    let id = g.add_node(node)?;
    simple_loop(
        g,
        id,
        "keep_a",
        &[("r", d.rows), ("k", d.k)],
        vec![store("Aloc", &["r", "k"], Expr::input("a"))],
    )?;
    if !last {
        let rest = (d.pes - p - 1) as i64 * d.rows * d.k;
        simple_loop(g, id, "pass_a", &[("t", rest)], vec![out("a_out", Expr::input("a"))])?;
    }
    let compute = g.add_child(id, Node::map("compute", params(&[("j", d.m), ("k", d.k)])))?;
    let mut take = vec![store("Bcur", &["0"], Expr::input("b"))];
    if !last {
        take.push(out("b_out", Expr::load("Bcur", &["0"])));
    }
    g.add_child(compute, tasklet("take_b", take))?;
    simple_loop(
        g,
        compute,
        "mac",
        &[("r", d.rows)],
        vec![store(
            "Cloc",
            &["r", "j"],
            Expr::bin(
                BinOp::Add,
                Expr::load("Cloc", &["r", "j"]),
                Expr::bin(BinOp::Mul, Expr::load("Aloc", &["r", "k"]), Expr::load("Bcur", &["0"])),
            ),
        )],
    )?;
    if !first {
        let before = p as i64 * d.rows * d.m;
        simple_loop(g, id, "pass_c", &[("t", before)], vec![out("c_out", Expr::input("c_in"))])?;
    }
    simple_loop(
        g,
        id,
        "emit_c",
        &[("r", d.rows), ("j", d.m)],
        vec![out("c_out", Expr::load("Cloc", &["r", "j"]))],
    )?;
    Ok(id)
}

/// One-dimensional systolic matrix multiply. Feeders stream A row-major and
/// B column-major into the first PE; PEs talk only to their successor; a
/// drainer writes C row-major. Each PE has `v` compute lanes.
pub fn gemm_systolic(n: i64, k: i64, m: i64, pes: u32, v: u32) -> Result<Graph, SpecError> {
    for (name, x) in [("N", n), ("K", k), ("M", m), ("PEs", pes as i64), ("V", v as i64)] {
        positive(name, x)?;
    }
    if n % pes as i64 != 0 {
        return Err(SpecError::Invalid(format!("N={n} is not a multiple of PEs={pes}")));
    }
    let d = Dims {
        rows: n / pes as i64,
        k,
        m,
        pes,
        v,
    };
    let mut g = Graph::new().with_symbol("N", n).with_symbol("K", k).with_symbol("M", m);
    let a = g.add_node(Node::container("A", ElemType::F32, &["N", "K"], Location::External))?;
    let b = g.add_node(Node::container("B", ElemType::F32, &["K", "M"], Location::External))?;
    let c = g.add_node(Node::container("C", ElemType::F32, &["N", "M"], Location::External))?;

    let feed_a = g.add_node(Node::map("feed_a", params(&[("i", n), ("k", k)])))?;
    g.add_child(feed_a, tasklet("feed_a", vec![out("a", Expr::input("A"))]))?;
    g.connect(a, "out", feed_a, "A", EdgeData::Memlet(Memlet::indexed("A", &["i", "k"])))?;

    let feed_b = g.add_node(Node::map("feed_b", params(&[("j", m), ("k", k)])))?;
    g.add_child(feed_b, tasklet("feed_b", vec![out("b", Expr::input("B"))]))?;
    g.connect(b, "out", feed_b, "B", EdgeData::Memlet(Memlet::indexed("B", &["k", "j"])))?;

    let mut prev: Option<NodeId> = None;
    for p in 0..pes {
        let id = pe(&mut g, p, &d)?;
        match prev {
            None => {
                link(&mut g, (feed_a, "a"), (id, "a"), "a_0")?;
                link(&mut g, (feed_b, "b"), (id, "b"), "b_0")?;
            }
            Some(q) => {
                link(&mut g, (q, "a_out"), (id, "a"), &format!("a_{p}"))?;
                link(&mut g, (q, "b_out"), (id, "b"), &format!("b_{p}"))?;
                link(&mut g, (q, "c_out"), (id, "c_in"), &format!("c_{}", p - 1))?;
            }
        }
        prev = Some(id);
    }

    let drain = g.add_node(Node::map("drain", params(&[("i", n), ("j", m)])))?;
    g.add_child(drain, tasklet("drain", vec![out("C", Expr::input("c"))]))?;
    let last = prev.expect("at least one PE");
    link(&mut g, (last, "c_out"), (drain, "c"), &format!("c_{}", pes - 1))?;
    g.connect(drain, "C", c, "in", EdgeData::Memlet(Memlet::indexed("C", &["i", "j"])))?;
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::Scalar;
    use crate::sim::reference_execute;

    #[test]
    fn identity_times_a_is_a() {
        let g = gemm_systolic(2, 2, 2, 2, 1).unwrap();
        let id = vec![1.0, 0.0, 0.0, 1.0];
        let a = vec![3.0, -2.0, 5.0, 7.0];
        let f = |v: &[f32]| v.iter().map(|x| Scalar::F32(*x)).collect::<Vec<_>>();
        let mem = [("A".to_string(), f(&id)), ("B".to_string(), f(&a))].into();
        let out = reference_execute(&g, &mem).unwrap();
        assert_eq!(out["C"], f(&a));
    }

    #[test]
    fn matches_naive_product() {
        let (n, k, m) = (6, 5, 4);
        let g = gemm_systolic(n, k, m, 3, 2).unwrap();
        let av: Vec<f32> = (0..n * k).map(|i| ((i * 3) % 7) as f32 - 3.0).collect();
        let bv: Vec<f32> = (0..k * m).map(|i| ((i * 5) % 11) as f32 - 5.0).collect();
        let f = |v: &[f32]| v.iter().map(|x| Scalar::F32(*x)).collect::<Vec<_>>();
        let mem = [("A".to_string(), f(&av)), ("B".to_string(), f(&bv))].into();
        let out = reference_execute(&g, &mem).unwrap();
        for i in 0..n {
            for j in 0..m {
                let mut acc = 0.0f32;
                for kk in 0..k {
                    acc += av[(i * k + kk) as usize] * bv[(kk * m + j) as usize];
                }
                assert_eq!(out["C"][(i * m + j) as usize], Scalar::F32(acc), "C[{i},{j}]");
            }
        }
    }

    #[test]
    fn pes_only_talk_to_neighbours() {
        let g = gemm_systolic(16, 16, 16, 4, 4).unwrap();
        let pe_ids: Vec<NodeId> = g
            .nodes()
            .filter(|(_, n)| n.label().starts_with("pe"))
            .map(|(id, _)| id)
            .collect();
        assert_eq!(pe_ids.len(), 4);
        for (p, id) in pe_ids.iter().enumerate() {
            for e in g.out_edges(*id) {
                let next = g.out_edges(e.dst.node).next().unwrap().dst.node;
                if p + 1 < pe_ids.len() {
                    assert_eq!(next, pe_ids[p + 1]);
                }
            }
        }
    }
}
