use super::{positive, SpecError, StencilKind};
use crate::ir::{BinOp, EdgeData, ElemType, Expr, Graph, Location, Node, Scalar, Stmt, Tasklet};
use crate::symbolic::{MapParam, Memlet, Range};
use crate::transforms::vectorize;

fn c(v: f32) -> Expr {
    Expr::constant(Scalar::F32(v))
}

fn add(a: Expr, b: Expr) -> Expr {
    Expr::bin(BinOp::Add, a, b)
}

fn mul(a: Expr, b: Expr) -> Expr {
    Expr::bin(BinOp::Mul, a, b)
}

/// Stage body. The input arrives in linear order, so the point centred at
/// `i - plane` is computed when element `i` arrives; its neighbours come
/// from one shared line buffer. Out-of-domain neighbours read zero.
fn body(kind: StencilKind, row: i64, plane: i64) -> Expr {
    let at = |off: i64| {
        let d = plane - off;
        if d == 0 {
            Expr::input("u")
        } else {
            Expr::delay(Expr::input("u"), d as u32)
        }
    };
    match kind {
        StencilKind::Jacobi3d => {
            let sum = [-plane, -row, -1, 1, row, plane]
                .into_iter()
                .fold(at(0), |acc, off| add(acc, at(off)));
            mul(sum, c(1.0 / 7.0))
        }
        StencilKind::Diffusion3d => {
            let pair = |off: i64| add(at(-off), at(off));
            add(
                add(mul(at(0), c(0.5)), mul(pair(1), c(0.125))),
                add(mul(pair(row), c(0.0625)), mul(pair(plane), c(0.0625))),
            )
        }
    }
}

/// `stages` applications of a 7-point 3D stencil, each its own map reading
/// `u{s}` and writing `u{s+1}` over the flattened domain, vectorized by `v`.
pub fn stencil_chain(
    kind: StencilKind,
    dims: [i64; 3],
    stages: u32,
    v: u32,
) -> Result<Graph, SpecError> {
    for (name, d) in ["X", "Y", "Z"].into_iter().zip(dims) {
        positive(name, d)?;
    }
    positive("S", stages as i64)?;
    positive("V", v as i64)?;
    let total = dims.iter().product::<i64>();
    if total % v as i64 != 0 {
        return Err(SpecError::Invalid(format!(
            "domain of {total} points is not a multiple of V={v}"
        )));
    }
    let (row, plane) = (dims[0], dims[0] * dims[1]);
    let mut g = Graph::new().with_symbol("T", total);
    let mut prev = g.add_node(Node::container("u0", ElemType::F32, &["T"], Location::External))?;
    let mut maps = Vec::new();
    for s in 0..stages {
        let map = g.add_node(Node::map(
            &format!("stage{s}"),
            vec![MapParam::new("i", Range::new(0, "T"))],
        ))?;
        g.add_child(
            map,
            Node::Tasklet(Tasklet::new(
                format!("{}_{s}", kind.name()),
                ElemType::F32,
                vec![Stmt::Out {
                    conn: "v".into(),
                    value: body(kind, row, plane),
                }],
            )),
        )?;
        let src = format!("u{s}");
        let dst = format!("u{}", s + 1);
        let next = g.add_node(Node::container(&dst, ElemType::F32, &["T"], Location::External))?;
        g.connect(prev, "out", map, "u", EdgeData::Memlet(Memlet::indexed(&src, &["i"])))?;
        g.connect(map, "v", next, "in", EdgeData::Memlet(Memlet::indexed(&dst, &["i"])))?;
        maps.push(map);
        prev = next;
    }
    for map in maps {
        g = vectorize(&g, map, v)?;
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::reference_execute;

    fn impulse(n: usize, at: usize) -> Vec<Scalar> {
        let mut v = vec![Scalar::F32(0.0); n];
        v[at] = Scalar::F32(7.0);
        v
    }

    #[test]
    fn jacobi_spreads_an_impulse_one_plane_late() {
        let g = stencil_chain(StencilKind::Jacobi3d, [4, 4, 4], 1, 1).unwrap();
        // Centre point (1,1,1) at linear index 21; plane = 16.
        let out = reference_execute(&g, &[("u0".to_string(), impulse(64, 21))].into()).unwrap();
        let nonzero: Vec<usize> = out["u1"]
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != Scalar::F32(0.0))
            .map(|(i, _)| i)
            .collect();
        let centre = 21 + 16;
        let want = vec![centre - 16, centre - 4, centre - 1, centre, centre + 1, centre + 4, centre + 16];
        assert_eq!(nonzero, want);
        assert_eq!(out["u1"][centre], Scalar::F32(7.0 * (1.0 / 7.0)));
    }

    #[test]
    fn vector_width_does_not_change_results() {
        let u0: Vec<Scalar> = (0..64).map(|i| Scalar::F32((i % 5) as f32)).collect();
        let mem = [("u0".to_string(), u0)].into();
        for kind in [StencilKind::Jacobi3d, StencilKind::Diffusion3d] {
            let a = reference_execute(&stencil_chain(kind, [4, 4, 4], 2, 1).unwrap(), &mem).unwrap();
            let b = reference_execute(&stencil_chain(kind, [4, 4, 4], 2, 4).unwrap(), &mem).unwrap();
            assert_eq!(a["u2"], b["u2"]);
        }
    }
}
