use super::VectorizeError;
use crate::ir::{EdgeData, Expr, Graph, Node, NodeId, Stmt, LANE_SYMBOL};
use crate::symbolic::{AffineExpr, Dim, Memlet, Range};

/// Rewrites `i` to `V*i + lane` in the last dimension of a memlet:
/// `x[i]` becomes `x[V*i : V*i+V]`.
fn widen_memlet(m: &Memlet, p: &str, v: i64) -> Result<Memlet, VectorizeError> {
    let bad = || VectorizeError::NonContiguous(m.to_string());
    let last = m.subset.len().checked_sub(1).ok_or_else(bad)?;
    let mut out = m.clone();
    for (d, dim) in m.subset.iter().enumerate() {
        match dim {
            Dim::Index(e) if e.coeff(p) != 0 => {
                if d != last || e.coeff(p) != 1 {
                    return Err(bad());
                }
                let begin = e.substitute(p, &AffineExpr::term(p, v));
                out.subset[d] = Dim::Range(Range::new(begin.clone(), begin + v));
            }
            Dim::Index(_) if d == last => return Err(bad()),
            Dim::Index(_) => {}
            Dim::Range(r) => {
                if r.begin.coeff(p) != 0 || r.end.coeff(p) != 0 || d == last {
                    return Err(bad());
                }
            }
            Dim::Dynamic => return Err(bad()),
        }
    }
    Ok(out)
}

fn lane_expr(p: &str, v: i64) -> AffineExpr {
    AffineExpr::term(p, v) + AffineExpr::symbol(LANE_SYMBOL)
}

fn rewrite_expr(e: &mut Expr, p: &str, v: i64) {
    match e {
        Expr::Index { expr } => *expr = expr.substitute(p, &lane_expr(p, v)),
        Expr::Load { index, .. } => {
            for i in index.iter_mut() {
                *i = i.substitute(p, &lane_expr(p, v));
            }
        }
        Expr::Const { .. } | Expr::In { .. } => {}
        Expr::Gather { index, .. } => rewrite_expr(index, p, v),
        Expr::Delay { value, .. } => rewrite_expr(value, p, v),
        Expr::Bin { lhs, rhs, .. } | Expr::Cmp { lhs, rhs, .. } => {
            rewrite_expr(lhs, p, v);
            rewrite_expr(rhs, p, v);
        }
        Expr::Select {
            cond,
            then,
            otherwise,
        } => {
            rewrite_expr(cond, p, v);
            rewrite_expr(then, p, v);
            rewrite_expr(otherwise, p, v);
        }
    }
}

/// Spatial vectorization of the innermost parameter of a top-level map.
///
/// The range shrinks by `v`, each boundary memlet moves `v` contiguous
/// elements per iteration and every tasklet executes once per lane.
pub fn vectorize(graph: &Graph, map: NodeId, v: u32) -> Result<Graph, VectorizeError> {
    if v == 0 {
        return Err(VectorizeError::ZeroWidth);
    }
    if graph.scope_parents().contains_key(&map) {
        return Err(VectorizeError::NotAMap(map));
    }
    let Node::Map {
        params,
        vector_width,
        body,
        locals,
        ..
    } = graph.node(map)?
    else {
        return Err(VectorizeError::NotAMap(map));
    };
    let nested = body
        .iter()
        .any(|c| !matches!(graph.node(*c), Ok(Node::Tasklet(_))));
    if nested || !locals.is_empty() {
        return Err(VectorizeError::LoopCarried);
    }
    if *vector_width != 1 {
        return Err(VectorizeError::AlreadyVectorized);
    }
    let last = params.last().ok_or(VectorizeError::NoParams)?;
    if v == 1 {
        return Ok(graph.clone());
    }
    let binding = graph.binding();
    let begin = last.range.begin.partial_eval(&binding).as_constant();
    let end = last.range.end.partial_eval(&binding).as_constant();
    let (Some(begin), Some(end)) = (begin, end) else {
        return Err(VectorizeError::NonContiguous(last.range.to_string()));
    };
    let vi = v as i64;
    let len = end - begin;
    if last.range.stride != 1 || len % vi != 0 || begin % vi != 0 {
        return Err(VectorizeError::Remainder { len, v });
    }
    let p = last.name.clone();
    let mut out = graph.clone();
    let edge_ids: Vec<_> = graph
        .in_edges(map)
        .chain(graph.out_edges(map))
        .map(|e| e.id)
        .collect();
    for id in edge_ids {
        let e = out.edge_mut(id)?;
        if let EdgeData::Memlet(m) = &e.data {
            e.data = EdgeData::Memlet(widen_memlet(m, &p, vi)?);
        }
    }
    let body = body.clone();
    for child in body {
        if let Node::Tasklet(t) = out.node_mut(child)? {
            for s in t.stmts.iter_mut() {
                match s {
                    Stmt::Out { value, .. } => rewrite_expr(value, &p, vi),
                    Stmt::Store { index, value, .. } => {
                        for i in index.iter_mut() {
                            *i = i.substitute(&p, &lane_expr(&p, vi));
                        }
                        rewrite_expr(value, &p, vi);
                    }
                }
            }
        }
    }
    if let Node::Map {
        params,
        vector_width,
        lanes,
        ..
    } = out.node_mut(map)?
    {
        let last = params.last_mut().expect("checked above");
        last.range = Range::new(begin / vi, begin / vi + len / vi);
        *vector_width = v;
        *lanes = v;
    }
    Ok(out)
}
