use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::types::{ElemType, Scalar};
use super::DomainId;
use crate::symbolic::{AffineExpr, MapParam};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Location {
    /// Off-chip memory visible to the host.
    External,
    /// On-chip buffer private to the program.
    Local,
}

/// On-chip array owned by a map scope (e.g. a PE's tile of C).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalBuffer {
    pub name: String,
    pub elem: ElemType,
    pub shape: Vec<i64>,
    /// Partitioned one bank per compute lane.
    pub per_lane: bool,
}

impl LocalBuffer {
    pub fn len(&self) -> i64 {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Min,
    Max,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CmpOp {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
}

impl BinOp {
    pub fn name(self) -> &'static str {
        match self {
            BinOp::Add => "add",
            BinOp::Sub => "sub",
            BinOp::Mul => "mul",
            BinOp::Div => "div",
            BinOp::Min => "min",
            BinOp::Max => "max",
        }
    }

    /// Applies the operator; mixed operand types yield `None`.
    pub fn apply(self, a: Scalar, b: Scalar) -> Option<Scalar> {
        use Scalar::*;
        Some(match (a, b) {
            (F32(x), F32(y)) => F32(match self {
                BinOp::Add => x + y,
                BinOp::Sub => x - y,
                BinOp::Mul => x * y,
                BinOp::Div => x / y,
                BinOp::Min => {
                    if y < x {
                        y
                    } else {
                        x
                    }
                }
                BinOp::Max => {
                    if y > x {
                        y
                    } else {
                        x
                    }
                }
            }),
            (I32(x), I32(y)) => I32(match self {
                BinOp::Add => x.wrapping_add(y),
                BinOp::Sub => x.wrapping_sub(y),
                BinOp::Mul => x.wrapping_mul(y),
                BinOp::Div => x.checked_div(y).unwrap_or(0),
                BinOp::Min => x.min(y),
                BinOp::Max => x.max(y),
            }),
            (I64(x), I64(y)) => I64(match self {
                BinOp::Add => x.wrapping_add(y),
                BinOp::Sub => x.wrapping_sub(y),
                BinOp::Mul => x.wrapping_mul(y),
                BinOp::Div => x.checked_div(y).unwrap_or(0),
                BinOp::Min => x.min(y),
                BinOp::Max => x.max(y),
            }),
            (Bool(x), Bool(y)) => Bool(match self {
                BinOp::Add | BinOp::Max => x | y,
                BinOp::Mul | BinOp::Min => x & y,
                BinOp::Sub => x ^ y,
                BinOp::Div => x,
            }),
            _ => return None,
        })
    }
}

impl CmpOp {
    pub fn name(self) -> &'static str {
        match self {
            CmpOp::Lt => "lt",
            CmpOp::Le => "le",
            CmpOp::Gt => "gt",
            CmpOp::Ge => "ge",
            CmpOp::Eq => "eq",
            CmpOp::Ne => "ne",
        }
    }

    pub fn apply(self, a: Scalar, b: Scalar) -> Option<bool> {
        use std::cmp::Ordering::*;
        let ord = a.partial_cmp_value(b);
        if a.ty() != b.ty() {
            return None;
        }
        Some(match self {
            CmpOp::Lt => ord == Some(Less),
            CmpOp::Le => matches!(ord, Some(Less | Equal)),
            CmpOp::Gt => ord == Some(Greater),
            CmpOp::Ge => matches!(ord, Some(Greater | Equal)),
            CmpOp::Eq => ord == Some(Equal),
            CmpOp::Ne => ord != Some(Equal),
        })
    }
}

/// Tasklet expression tree. Connector reads are the only way data enters;
/// `Gather` is the one construct that addresses a container by value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Expr {
    Const {
        value: Scalar,
    },
    /// Next element of an input connector (read once per execution).
    In {
        conn: String,
    },
    /// Current value of an affine expression over iteration parameters.
    Index {
        expr: AffineExpr,
    },
    Load {
        buffer: String,
        index: Vec<AffineExpr>,
    },
    /// Data-dependent read of the container bound to `conn`.
    Gather {
        conn: String,
        index: Box<Expr>,
    },
    /// Value `value` had `depth` executions ago (shift register, zero-filled).
    Delay {
        value: Box<Expr>,
        depth: u32,
    },
    Bin {
        kind: BinOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
    Cmp {
        kind: CmpOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
    Select {
        cond: Box<Expr>,
        then: Box<Expr>,
        otherwise: Box<Expr>,
    },
}

impl Expr {
    pub fn input(conn: &str) -> Expr {
        Expr::In { conn: conn.into() }
    }

    pub fn constant(value: Scalar) -> Expr {
        Expr::Const { value }
    }

    pub fn load(buffer: &str, index: &[&str]) -> Expr {
        Expr::Load {
            buffer: buffer.into(),
            index: index.iter().map(|s| AffineExpr::from(*s)).collect(),
        }
    }

    pub fn bin(kind: BinOp, lhs: Expr, rhs: Expr) -> Expr {
        Expr::Bin {
            kind,
            lhs: Box::new(lhs),
            rhs: Box::new(rhs),
        }
    }

    pub fn cmp(kind: CmpOp, lhs: Expr, rhs: Expr) -> Expr {
        Expr::Cmp {
            kind,
            lhs: Box::new(lhs),
            rhs: Box::new(rhs),
        }
    }

    pub fn select(cond: Expr, then: Expr, otherwise: Expr) -> Expr {
        Expr::Select {
            cond: Box::new(cond),
            then: Box::new(then),
            otherwise: Box::new(otherwise),
        }
    }

    pub fn delay(value: Expr, depth: u32) -> Expr {
        Expr::Delay {
            value: Box::new(value),
            depth,
        }
    }

    pub fn gather(conn: &str, index: Expr) -> Expr {
        Expr::Gather {
            conn: conn.into(),
            index: Box::new(index),
        }
    }

    /// Pre-order traversal.
    pub fn walk<'a>(&'a self, f: &mut dyn FnMut(&'a Expr)) {
        f(self);
        match self {
            Expr::Const { .. } | Expr::In { .. } | Expr::Index { .. } | Expr::Load { .. } => {}
            Expr::Gather { index, .. } => index.walk(f),
            Expr::Delay { value, .. } => value.walk(f),
            Expr::Bin { lhs, rhs, .. } | Expr::Cmp { lhs, rhs, .. } => {
                lhs.walk(f);
                rhs.walk(f);
            }
            Expr::Select {
                cond,
                then,
                otherwise,
            } => {
                cond.walk(f);
                then.walk(f);
                otherwise.walk(f);
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "stmt", rename_all = "snake_case")]
pub enum Stmt {
    /// Push a value to an output connector.
    Out { conn: String, value: Expr },
    Store {
        buffer: String,
        index: Vec<AffineExpr>,
        value: Expr,
    },
}

impl Stmt {
    pub fn value(&self) -> &Expr {
        match self {
            Stmt::Out { value, .. } | Stmt::Store { value, .. } => value,
        }
    }
}

/// Straight-line code executed once per step; all arithmetic is in `ty`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tasklet {
    pub label: String,
    pub ty: ElemType,
    pub stmts: Vec<Stmt>,
}

impl Tasklet {
    pub fn new(label: impl Into<String>, ty: ElemType, stmts: Vec<Stmt>) -> Self {
        Self {
            label: label.into(),
            ty,
            stmts,
        }
    }

    pub fn walk<'a>(&'a self, f: &mut dyn FnMut(&'a Expr)) {
        for s in &self.stmts {
            s.value().walk(f);
        }
    }

    /// Input connectors popped by each execution.
    pub fn inputs(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.walk(&mut |e| {
            if let Expr::In { conn } = e {
                out.insert(conn.clone());
            }
        });
        out
    }

    /// Output connectors in statement order (one push each per execution).
    pub fn outputs(&self) -> Vec<String> {
        self.stmts
            .iter()
            .filter_map(|s| match s {
                Stmt::Out { conn, .. } => Some(conn.clone()),
                _ => None,
            })
            .collect()
    }

    pub fn gathers(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.walk(&mut |e| {
            if let Expr::Gather { conn, .. } = e {
                out.insert(conn.clone());
            }
        });
        out
    }

    pub fn stores(&self) -> BTreeSet<String> {
        self.stmts
            .iter()
            .filter_map(|s| match s {
                Stmt::Store { buffer, .. } => Some(buffer.clone()),
                _ => None,
            })
            .collect()
    }

    pub fn loads(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.walk(&mut |e| {
            if let Expr::Load { buffer, .. } = e {
                out.insert(buffer.clone());
            }
        });
        out
    }

    pub fn has_delay(&self) -> bool {
        let mut found = false;
        self.walk(&mut |e| found |= matches!(e, Expr::Delay { .. }));
        found
    }
}

/// IR node. Compute lives in `Map` scopes whose bodies list child nodes
/// (tasklets or nested maps) in execution order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Node {
    Container {
        name: String,
        elem: ElemType,
        shape: Vec<AffineExpr>,
        location: Location,
    },
    Stream {
        name: String,
        lanes: u32,
        depth: u32,
    },
    Map {
        label: String,
        params: Vec<MapParam>,
        /// Executions of direct child tasklets per iteration.
        vector_width: u32,
        /// Physical compute lanes (executions per clock tick).
        lanes: u32,
        /// Pipeline latency in ticks of the node's domain.
        latency: u32,
        body: Vec<super::NodeId>,
        locals: Vec<LocalBuffer>,
    },
    Tasklet(Tasklet),
    Reader {
        params: Vec<MapParam>,
        lanes: u32,
    },
    Writer {
        params: Vec<MapParam>,
        lanes: u32,
    },
    Synchronizer {
        src: DomainId,
        dst: DomainId,
    },
    Issuer {
        wide: u32,
        narrow: u32,
        factor: u32,
    },
    Packer {
        narrow: u32,
        wide: u32,
        factor: u32,
    },
}

impl Node {
    pub fn container(name: &str, elem: ElemType, shape: &[&str], location: Location) -> Node {
        Node::Container {
            name: name.into(),
            elem,
            shape: shape.iter().map(|s| AffineExpr::from(*s)).collect(),
            location,
        }
    }

    pub fn map(label: &str, params: Vec<MapParam>) -> Node {
        Node::Map {
            label: label.into(),
            params,
            vector_width: 1,
            lanes: 1,
            latency: 1,
            body: Vec::new(),
            locals: Vec::new(),
        }
    }

    pub fn stream(name: &str, lanes: u32, depth: u32) -> Node {
        Node::Stream {
            name: name.into(),
            lanes,
            depth,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Node::Container { .. } => "container",
            Node::Stream { .. } => "stream",
            Node::Map { .. } => "map",
            Node::Tasklet(_) => "tasklet",
            Node::Reader { .. } => "reader",
            Node::Writer { .. } => "writer",
            Node::Synchronizer { .. } => "synchronizer",
            Node::Issuer { .. } => "issuer",
            Node::Packer { .. } => "packer",
        }
    }

    pub fn is_map(&self) -> bool {
        matches!(self, Node::Map { .. })
    }

    pub fn is_plumbing(&self) -> bool {
        matches!(
            self,
            Node::Synchronizer { .. } | Node::Issuer { .. } | Node::Packer { .. }
        )
    }

    /// Nodes that execute in the simulator (everything but data holders).
    pub fn is_active(&self) -> bool {
        !matches!(
            self,
            Node::Container { .. } | Node::Stream { .. } | Node::Tasklet(_)
        )
    }

    pub fn label(&self) -> String {
        match self {
            Node::Container { name, .. } | Node::Stream { name, .. } => name.clone(),
            Node::Map { label, .. } => label.clone(),
            Node::Tasklet(t) => t.label.clone(),
            other => other.kind().to_string(),
        }
    }
}
