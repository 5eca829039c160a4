//! Factorable functions as a directed acyclic graph of intrinsics.
//!
//! Objective and constraints are roots of one shared graph. Nodes are stored
//! in topological order (children always precede parents) and syntactically
//! identical subtrees are shared through hash-consing.

pub mod eval;
pub mod mlp;
mod parse;
mod print;

use std::collections::HashMap;
use std::hash::{Hash, Hasher};

pub use eval::{eval_interval, eval_interval_all, eval_real, eval_real_all, RootBounds};
pub use mlp::{load_ann_weights, Activation, LayerSpec, MlpError};
pub use parse::{parse_problem, parse_problem_in, parse_problem_unshared, ParseError};
pub use print::print_problem;

use crate::arith::{BinaryOp, UnaryOp};
use crate::interval::IntervalBox;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(u32);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy)]
pub enum DagNode {
    Const(f64),
    Var(usize),
    Unary(UnaryOp, NodeId),
    Binary(BinaryOp, NodeId, NodeId),
}

// Constants compare by bit pattern so hash-consing never merges 0.0 and -0.0.
impl PartialEq for DagNode {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (DagNode::Const(a), DagNode::Const(b)) => a.to_bits() == b.to_bits(),
            (DagNode::Var(a), DagNode::Var(b)) => a == b,
            (DagNode::Unary(o, a), DagNode::Unary(p, b)) => o == p && a == b,
            (DagNode::Binary(o, a, b), DagNode::Binary(p, c, d)) => o == p && a == c && b == d,
            _ => false,
        }
    }
}

impl Eq for DagNode {}

impl Hash for DagNode {
    fn hash<H: Hasher>(&self, state: &mut H) {
        std::mem::discriminant(self).hash(state);
        match self {
            DagNode::Const(c) => c.to_bits().hash(state),
            DagNode::Var(i) => i.hash(state),
            DagNode::Unary(op, a) => {
                op.hash(state);
                a.hash(state);
            }
            DagNode::Binary(op, a, b) => {
                op.hash(state);
                a.hash(state);
                b.hash(state);
            }
        }
    }
}

/// Append-only graph with optional common-subexpression sharing.
#[derive(Debug, Clone)]
pub struct Dag {
    nodes: Vec<DagNode>,
    interned: HashMap<DagNode, NodeId>,
    share: bool,
}

impl Default for Dag {
    fn default() -> Self {
        Dag::new()
    }
}

impl Dag {
    pub fn new() -> Self {
        Dag { nodes: Vec::new(), interned: HashMap::new(), share: true }
    }

    /// A graph that never merges identical subtrees.
    pub fn without_sharing() -> Self {
        Dag { share: false, ..Dag::new() }
    }

    pub fn nodes(&self) -> &[DagNode] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: NodeId) -> DagNode {
        self.nodes[id.index()]
    }

    fn push(&mut self, node: DagNode) -> NodeId {
        if self.share {
            if let Some(&id) = self.interned.get(&node) {
                return id;
            }
        }
        let id = NodeId(u32::try_from(self.nodes.len()).expect("DAG exceeds u32 node ids"));
        self.nodes.push(node);
        if self.share {
            self.interned.insert(node, id);
        }
        id
    }

    pub fn constant(&mut self, c: f64) -> NodeId {
        assert!(!c.is_nan(), "NaN constant");
        self.push(DagNode::Const(c))
    }

    pub fn var(&mut self, index: usize) -> NodeId {
        self.push(DagNode::Var(index))
    }

    pub fn unary(&mut self, op: UnaryOp, a: NodeId) -> NodeId {
        self.check(a);
        self.push(DagNode::Unary(op, a))
    }

    pub fn binary(&mut self, op: BinaryOp, a: NodeId, b: NodeId) -> NodeId {
        self.check(a);
        self.check(b);
        self.push(DagNode::Binary(op, a, b))
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.binary(BinaryOp::Add, a, b)
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.binary(BinaryOp::Sub, a, b)
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.binary(BinaryOp::Mul, a, b)
    }

    pub fn div(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.binary(BinaryOp::Div, a, b)
    }

    fn check(&self, id: NodeId) {
        assert!(id.index() < self.nodes.len(), "dangling node id {}", id.0);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub name: String,
    pub root: NodeId,
}

/// `min f(x) s.t. g_i(x) <= 0, h_j(x) = 0, x in box`.
#[derive(Debug, Clone)]
pub struct Problem {
    names: Vec<String>,
    domain: IntervalBox,
    dag: Dag,
    objective: NodeId,
    ineq: Vec<Constraint>,
    eq: Vec<Constraint>,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ProblemError {
    #[error("variable names ({names}) and box dimensions ({dims}) disagree")]
    DimensionMismatch { names: usize, dims: usize },
    #[error("node {0} references variable {1} outside the box")]
    VariableOutOfRange(usize, usize),
    #[error("root node {0} does not exist")]
    DanglingRoot(usize),
}

impl Problem {
    pub fn new(
        names: Vec<String>,
        domain: IntervalBox,
        dag: Dag,
        objective: NodeId,
        ineq: Vec<Constraint>,
        eq: Vec<Constraint>,
    ) -> Result<Self, ProblemError> {
        if names.len() != domain.dim() {
            return Err(ProblemError::DimensionMismatch { names: names.len(), dims: domain.dim() });
        }
        for (k, node) in dag.nodes().iter().enumerate() {
            if let DagNode::Var(i) = node {
                if *i >= names.len() {
                    return Err(ProblemError::VariableOutOfRange(k, *i));
                }
            }
        }
        let roots = std::iter::once(objective).chain(ineq.iter().chain(&eq).map(|c| c.root));
        for r in roots {
            if r.index() >= dag.len() {
                return Err(ProblemError::DanglingRoot(r.index()));
            }
        }
        Ok(Problem { names, domain, dag, objective, ineq, eq })
    }

    pub fn num_vars(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn domain(&self) -> &IntervalBox {
        &self.domain
    }

    pub fn dag(&self) -> &Dag {
        &self.dag
    }

    pub fn objective(&self) -> NodeId {
        self.objective
    }

    pub fn ineq(&self) -> &[Constraint] {
        &self.ineq
    }

    pub fn eq(&self) -> &[Constraint] {
        &self.eq
    }

    /// Objective, then inequalities, then equalities.
    pub fn roots(&self) -> Vec<NodeId> {
        std::iter::once(self.objective).chain(self.ineq.iter().chain(&self.eq).map(|c| c.root)).collect()
    }

    pub fn num_roots(&self) -> usize {
        1 + self.ineq.len() + self.eq.len()
    }

    pub fn with_domain(&self, domain: IntervalBox) -> Result<Problem, ProblemError> {
        if domain.dim() != self.num_vars() {
            return Err(ProblemError::DimensionMismatch { names: self.num_vars(), dims: domain.dim() });
        }
        Ok(Problem { domain, ..self.clone() })
    }

    /// Adds an inequality `root <= 0` built on this problem's graph.
    pub fn add_ineq(&mut self, name: &str, build: impl FnOnce(&mut Dag) -> NodeId) {
        let root = build(&mut self.dag);
        self.ineq.push(Constraint { name: name.to_string(), root });
    }

    /// Adds an equality `root == 0` built on this problem's graph.
    pub fn add_eq(&mut self, name: &str, build: impl FnOnce(&mut Dag) -> NodeId) {
        let root = build(&mut self.dag);
        self.eq.push(Constraint { name: name.to_string(), root });
    }

    /// Same variables, domain, and root expression trees, regardless of
    /// node numbering.
    pub fn structurally_eq(&self, other: &Problem) -> bool {
        if self.names != other.names || self.domain != other.domain {
            return false;
        }
        if self.ineq.len() != other.ineq.len() || self.eq.len() != other.eq.len() {
            return false;
        }
        let names_match = self.ineq.iter().zip(&other.ineq).chain(self.eq.iter().zip(&other.eq)).all(|(a, b)| a.name == b.name);
        if !names_match {
            return false;
        }
        let mut memo = HashMap::new();
        self.roots()
            .into_iter()
            .zip(other.roots())
            .all(|(a, b)| same_tree(&self.dag, a, &other.dag, b, &mut memo))
    }
}

fn same_tree(da: &Dag, a: NodeId, db: &Dag, b: NodeId, memo: &mut HashMap<(NodeId, NodeId), bool>) -> bool {
    if let Some(&r) = memo.get(&(a, b)) {
        return r;
    }
    let r = match (da.node(a), db.node(b)) {
        (DagNode::Const(x), DagNode::Const(y)) => x.to_bits() == y.to_bits(),
        (DagNode::Var(i), DagNode::Var(j)) => i == j,
        (DagNode::Unary(o, x), DagNode::Unary(p, y)) => o == p && same_tree(da, x, db, y, memo),
        (DagNode::Binary(o, x1, x2), DagNode::Binary(p, y1, y2)) => {
            o == p && same_tree(da, x1, db, y1, memo) && same_tree(da, x2, db, y2, memo)
        }
        _ => false,
    };
    memo.insert((a, b), r);
    r
}
