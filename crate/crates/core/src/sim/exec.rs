//! Element-sequential interpreter for map scopes, shared by the reference
//! executor and the cycle simulator.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::sync::Arc;

use super::ExecError;
use crate::ir::{Expr, Graph, Node, NodeId, Scalar, Stmt, Tasklet, LANE_SYMBOL};
use crate::symbolic::{for_each_iteration, Binding, SymbolicError};

/// Connector-level I/O used by a running program.
pub(crate) trait Io {
    fn pop(&mut self, conn: &str) -> Result<Scalar, ExecError>;
    fn push(&mut self, conn: &str, value: Scalar) -> Result<(), ExecError>;
    fn gather(&mut self, conn: &str, index: i64) -> Result<Scalar, ExecError>;
}

struct Local {
    shape: Vec<i64>,
    data: Vec<Scalar>,
}

impl Local {
    fn offset(&self, name: &str, idx: &[i64]) -> Result<usize, ExecError> {
        linear_index(&self.shape, idx).ok_or_else(|| ExecError::OutOfBounds {
            name: name.to_string(),
            index: idx.to_vec(),
        })
    }
}

/// Row-major offset, or `None` when out of bounds.
pub(crate) fn linear_index(shape: &[i64], idx: &[i64]) -> Option<usize> {
    if shape.len() != idx.len() {
        return None;
    }
    let mut off = 0i64;
    for (&n, &i) in shape.iter().zip(idx) {
        if i < 0 || i >= n {
            return None;
        }
        off = off * n + i;
    }
    usize::try_from(off).ok()
}

struct Code {
    tasklet: Tasklet,
    inputs: BTreeSet<String>,
    outputs: Vec<String>,
    delay_depths: Vec<u32>,
}

/// A map scope flattened into its sequence of tasklet executions.
pub(crate) struct Program {
    codes: Vec<Code>,
    steps: Vec<(usize, Arc<Binding>)>,
    pos: usize,
    locals: BTreeMap<String, Local>,
    delays: Vec<Vec<VecDeque<Scalar>>>,
}

impl Program {
    pub fn build(graph: &Graph, root: NodeId) -> Result<Program, ExecError> {
        let mut p = Program {
            codes: Vec::new(),
            steps: Vec::new(),
            pos: 0,
            locals: BTreeMap::new(),
            delays: Vec::new(),
        };
        let mut index_of = BTreeMap::new();
        for id in graph.descendants(root) {
            match graph.node(id)? {
                Node::Map { locals, .. } => {
                    for l in locals {
                        p.locals.insert(
                            l.name.clone(),
                            Local {
                                shape: l.shape.clone(),
                                data: vec![l.elem.zero(); l.len() as usize],
                            },
                        );
                    }
                }
                Node::Tasklet(t) => {
                    let mut delay_depths = Vec::new();
                    t.walk(&mut |e| {
                        if let Expr::Delay { depth, .. } = e {
                            delay_depths.push(*depth);
                        }
                    });
                    p.delays.push(
                        delay_depths
                            .iter()
                            .map(|&d| {
                                std::iter::repeat_n(t.ty.zero(), d as usize).collect()
                            })
                            .collect(),
                    );
                    index_of.insert(id, p.codes.len());
                    p.codes.push(Code {
                        inputs: t.inputs(),
                        outputs: t.outputs(),
                        delay_depths,
                        tasklet: t.clone(),
                    });
                }
                _ => {}
            }
        }
        let mut steps = Vec::new();
        gen_steps(graph, root, &graph.binding(), &index_of, &mut steps)?;
        p.steps = steps;
        Ok(p)
    }

    pub fn done(&self) -> bool {
        self.pos >= self.steps.len()
    }

    /// Connectors popped by the next step.
    pub fn next_inputs(&self) -> Option<&BTreeSet<String>> {
        self.steps.get(self.pos).map(|(c, _)| &self.codes[*c].inputs)
    }

    /// Connectors pushed by the next step.
    pub fn next_outputs(&self) -> Option<&[String]> {
        self.steps
            .get(self.pos)
            .map(|(c, _)| self.codes[*c].outputs.as_slice())
    }

    pub fn step(&mut self, io: &mut dyn Io) -> Result<(), ExecError> {
        let (ci, binding) = self.steps[self.pos].clone();
        let code = &self.codes[ci];
        let mut popped = BTreeMap::new();
        for c in &code.inputs {
            popped.insert(c.as_str(), io.pop(c)?);
        }
        let mut ctx = Ctx {
            binding: &binding,
            popped: &popped,
            locals: &mut self.locals,
            delays: &mut self.delays[ci],
            next_delay: 0,
            io,
            label: &code.tasklet.label,
        };
        for stmt in &code.tasklet.stmts {
            let v = ctx.eval(stmt.value())?;
            match stmt {
                Stmt::Out { conn, .. } => ctx.io.push(conn, v)?,
                Stmt::Store { buffer, index, .. } => {
                    let idx = eval_index(index, &binding)?;
                    let local = ctx
                        .locals
                        .get_mut(buffer)
                        .ok_or_else(|| ExecError::Unbound(buffer.clone()))?;
                    let off = local.offset(buffer, &idx)?;
                    local.data[off] = v;
                }
            }
        }
        debug_assert_eq!(ctx.next_delay, code.delay_depths.len());
        self.pos += 1;
        Ok(())
    }
}

fn eval_index(
    index: &[crate::symbolic::AffineExpr],
    binding: &Binding,
) -> Result<Vec<i64>, SymbolicError> {
    index.iter().map(|e| e.eval(binding)).collect()
}

fn gen_steps(
    graph: &Graph,
    scope: NodeId,
    binding: &Binding,
    index_of: &BTreeMap<NodeId, usize>,
    out: &mut Vec<(usize, Arc<Binding>)>,
) -> Result<(), ExecError> {
    let Node::Map {
        params,
        vector_width,
        body,
        ..
    } = graph.node(scope)?
    else {
        return Err(ExecError::NotExecutable(scope));
    };
    let mut failure = None;
    let res = for_each_iteration(params, binding, &mut |b| {
        let shared = Arc::new(b.clone());
        for child in body {
            if let Some(&ci) = index_of.get(child) {
                if *vector_width <= 1 {
                    out.push((ci, shared.clone()));
                } else {
                    for lane in 0..*vector_width {
                        let mut bl = b.clone();
                        bl.insert(LANE_SYMBOL.to_string(), lane as i64);
                        out.push((ci, Arc::new(bl)));
                    }
                }
            } else if let Err(e) = gen_steps(graph, *child, b, index_of, out) {
                failure = Some(e);
                return Err(SymbolicError::NonAffine);
            }
        }
        Ok(())
    });
    if let Some(e) = failure {
        return Err(e);
    }
    res.map_err(ExecError::from)
}

struct Ctx<'a> {
    binding: &'a Binding,
    popped: &'a BTreeMap<&'a str, Scalar>,
    locals: &'a mut BTreeMap<String, Local>,
    delays: &'a mut Vec<VecDeque<Scalar>>,
    next_delay: usize,
    io: &'a mut dyn Io,
    label: &'a str,
}

impl Ctx<'_> {
    fn mismatch(&self) -> ExecError {
        ExecError::TypeMismatch(self.label.to_string())
    }

    /// Both arms of a select are always evaluated so that delay lines shift
    /// once per execution regardless of the predicate.
    fn eval(&mut self, e: &Expr) -> Result<Scalar, ExecError> {
        Ok(match e {
            Expr::Const { value } => *value,
            Expr::In { conn } => *self
                .popped
                .get(conn.as_str())
                .ok_or_else(|| ExecError::Unbound(conn.clone()))?,
            Expr::Index { expr } => Scalar::I64(expr.eval(self.binding)?),
            Expr::Load { buffer, index } => {
                let idx = eval_index(index, self.binding)?;
                let local = self
                    .locals
                    .get(buffer)
                    .ok_or_else(|| ExecError::Unbound(buffer.clone()))?;
                local.data[local.offset(buffer, &idx)?]
            }
            Expr::Gather { conn, index } => {
                let i = self.eval(index)?.as_i64();
                self.io.gather(conn, i)?
            }
            Expr::Delay { value, .. } => {
                let slot = self.next_delay;
                self.next_delay += 1;
                let v = self.eval(value)?;
                let line = &mut self.delays[slot];
                if line.is_empty() {
                    v
                } else {
                    line.push_back(v);
                    line.pop_front().expect("non-empty delay line")
                }
            }
            Expr::Bin { kind, lhs, rhs } => {
                let (a, b) = (self.eval(lhs)?, self.eval(rhs)?);
                kind.apply(a, b).ok_or_else(|| self.mismatch())?
            }
            Expr::Cmp { kind, lhs, rhs } => {
                let (a, b) = (self.eval(lhs)?, self.eval(rhs)?);
                Scalar::Bool(kind.apply(a, b).ok_or_else(|| self.mismatch())?)
            }
            Expr::Select {
                cond,
                then,
                otherwise,
            } => {
                let c = self.eval(cond)?;
                let t = self.eval(then)?;
                let o = self.eval(otherwise)?;
                if c.truthy() {
                    t
                } else {
                    o
                }
            }
        })
    }
}
