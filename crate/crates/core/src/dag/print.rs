use std::fmt::Write;

use crate::arith::UnaryOp;

use super::{Dag, DagNode, NodeId, Problem};

/// Renders a problem back into the text format.
///
/// Shared subexpressions are expanded and every compound expression is
/// parenthesised, so parsing the output rebuilds the same expression trees.
/// Networks appear inlined as their affine and activation nodes.
pub fn print_problem(p: &Problem) -> String {
    let mut s = String::new();
    for (name, d) in p.names().iter().zip(p.domain().dims()) {
        writeln!(s, "var {name} in [{:?}, {:?}]", d.lo(), d.hi()).unwrap();
    }
    writeln!(s, "obj: {}", expr(p, p.dag(), p.objective())).unwrap();
    for c in p.ineq() {
        writeln!(s, "con {}: {} <= 0", c.name, expr(p, p.dag(), c.root)).unwrap();
    }
    for c in p.eq() {
        writeln!(s, "con {}: {} == 0", c.name, expr(p, p.dag(), c.root)).unwrap();
    }
    s
}

fn expr(p: &Problem, dag: &Dag, id: NodeId) -> String {
    match dag.node(id) {
        DagNode::Const(c) if c.is_sign_negative() => format!("(-{:?})", -c),
        DagNode::Const(c) => format!("{c:?}"),
        DagNode::Var(i) => p.names()[i].clone(),
        DagNode::Unary(UnaryOp::Neg, a) if matches!(dag.node(a), DagNode::Const(_)) => format!("(-({}))", expr(p, dag, a)),
        DagNode::Unary(UnaryOp::Neg, a) => format!("(-{})", expr(p, dag, a)),
        DagNode::Unary(UnaryOp::Powi(k), a) => format!("({})^({k})", expr(p, dag, a)),
        DagNode::Unary(op, a) => format!("{}({})", op.name(), expr(p, dag, a)),
        DagNode::Binary(op, a, b) => format!("({} {} {})", expr(p, dag, a), op.symbol(), expr(p, dag, b)),
    }
}
