//! Topological evaluation of the graph in any [`Scalar`] arithmetic.

use crate::arith::{EvalError, Scalar};
use crate::interval::{Interval, IntervalBox};

use super::{Dag, DagNode, NodeId, Problem};

/// Applies one node given its children's values.
///
/// Shared by the whole-graph evaluator and the node-major (staged) batch
/// evaluator so both execute the identical operation for every node.
#[inline]
pub fn apply_node<S: Scalar>(
    node: &DagNode,
    var: impl Fn(usize) -> S,
    child: impl Fn(NodeId) -> Result<S, EvalError>,
    clipped: &mut bool,
) -> Result<S, EvalError> {
    match *node {
        DagNode::Const(c) => Ok(S::constant(c)),
        DagNode::Var(i) => Ok(var(i)),
        DagNode::Unary(op, a) => S::unary(op, child(a)?, clipped),
        DagNode::Binary(op, a, b) => S::binary(op, child(a)?, child(b)?),
    }
}

/// Values of every node, in node order. Errors propagate to dependents only.
pub fn eval_nodes<S: Scalar>(dag: &Dag, vars: &[S], clipped: &mut bool) -> Vec<Result<S, EvalError>> {
    let mut out: Vec<Result<S, EvalError>> = Vec::with_capacity(dag.len());
    eval_nodes_into(dag, vars, clipped, &mut out);
    out
}

/// As [`eval_nodes`], reusing `out` as scratch.
pub fn eval_nodes_into<S: Scalar>(dag: &Dag, vars: &[S], clipped: &mut bool, out: &mut Vec<Result<S, EvalError>>) {
    out.clear();
    for node in dag.nodes() {
        let v = apply_node(node, |i| vars[i], |id| out[id.index()], clipped);
        out.push(v);
    }
}

/// Bounds of every root of a problem over one box.
#[derive(Debug, Clone, PartialEq)]
pub struct RootBounds {
    pub obj: Interval,
    pub ineq: Vec<Interval>,
    pub eq: Vec<Interval>,
}

impl RootBounds {
    /// Splits a root-ordered slice (objective, inequalities, equalities).
    pub fn from_roots(problem: &Problem, values: &[Interval]) -> RootBounds {
        let ni = problem.ineq().len();
        RootBounds { obj: values[0], ineq: values[1..1 + ni].to_vec(), eq: values[1 + ni..].to_vec() }
    }
}

pub fn eval_real(problem: &Problem, root: NodeId, x: &[f64]) -> Result<f64, EvalError> {
    assert_eq!(x.len(), problem.num_vars(), "point dimension");
    eval_nodes(problem.dag(), x, &mut false)[root.index()]
}

/// Real values of all roots, objective first.
pub fn eval_real_all(problem: &Problem, x: &[f64]) -> Vec<Result<f64, EvalError>> {
    assert_eq!(x.len(), problem.num_vars(), "point dimension");
    let vals = eval_nodes(problem.dag(), x, &mut false);
    problem.roots().iter().map(|r| vals[r.index()]).collect()
}

/// Natural interval extension of `root` over `x`.
pub fn eval_interval(problem: &Problem, root: NodeId, x: &IntervalBox) -> Result<Interval, EvalError> {
    assert_eq!(x.dim(), problem.num_vars(), "box dimension");
    eval_nodes(problem.dag(), x.dims(), &mut false)[root.index()]
}

/// Natural interval extension of every root in one pass.
pub fn eval_interval_all(problem: &Problem, x: &IntervalBox) -> Result<RootBounds, EvalError> {
    assert_eq!(x.dim(), problem.num_vars(), "box dimension");
    let vals = eval_nodes(problem.dag(), x.dims(), &mut false);
    let roots = problem.roots().iter().map(|r| vals[r.index()]).collect::<Result<Vec<_>, _>>()?;
    Ok(RootBounds::from_roots(problem, &roots))
}
