//! Shared generators for randomized tests.
#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use subdiv::dag::{Constraint, Dag, NodeId, Problem};
use subdiv::{BinaryOp, Interval, IntervalBox, UnaryOp};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub const UNARY: [UnaryOp; 11] = [
    UnaryOp::Neg,
    UnaryOp::Sqrt,
    UnaryOp::Exp,
    UnaryOp::Log,
    UnaryOp::Sin,
    UnaryOp::Cos,
    UnaryOp::Tanh,
    UnaryOp::Powi(2),
    UnaryOp::Powi(3),
    UnaryOp::Powi(-1),
    UnaryOp::Powi(-2),
];

pub const BINARY: [BinaryOp; 4] = [BinaryOp::Add, BinaryOp::Sub, BinaryOp::Mul, BinaryOp::Div];

/// A random expression tree of depth at most `depth` over `n` variables.
pub fn random_expr(rng: &mut ChaCha8Rng, dag: &mut Dag, n: usize, depth: usize) -> NodeId {
    if depth == 0 || rng.gen_bool(0.25) {
        return if rng.gen_bool(0.75) {
            dag.var(rng.gen_range(0..n))
        } else {
            let c: f64 = rng.gen_range(-3.0..3.0);
            dag.constant((c * 8.0).round() / 8.0)
        };
    }
    if rng.gen_bool(0.45) {
        let op = *UNARY.choose(rng).unwrap();
        let a = random_expr(rng, dag, n, depth - 1);
        dag.unary(op, a)
    } else {
        let op = *BINARY.choose(rng).unwrap();
        let a = random_expr(rng, dag, n, depth - 1);
        let b = random_expr(rng, dag, n, depth - 1);
        dag.binary(op, a, b)
    }
}

pub fn random_box(rng: &mut ChaCha8Rng, n: usize) -> IntervalBox {
    let dims = (0..n)
        .map(|_| {
            let lo: f64 = rng.gen_range(-3.0..3.0);
            let w: f64 = rng.gen_range(0.01..2.0);
            Interval::new(lo, lo + w).unwrap()
        })
        .collect();
    IntervalBox::new(dims).unwrap()
}

/// Random problem with `n <= 4` variables, expression depth at most
/// `depth`, and up to two inequality and one equality constraint.
pub fn random_problem(rng: &mut ChaCha8Rng, depth: usize, constraints: bool) -> Problem {
    let n = rng.gen_range(1..=4);
    let mut dag = Dag::new();
    let obj = random_expr(rng, &mut dag, n, depth);
    let mut ineq = Vec::new();
    let mut eq = Vec::new();
    if constraints {
        for k in 0..rng.gen_range(0..=2) {
            let root = random_expr(rng, &mut dag, n, depth.min(4));
            ineq.push(Constraint { name: format!("g{k}"), root });
        }
        if rng.gen_bool(0.5) {
            let root = random_expr(rng, &mut dag, n, depth.min(4));
            eq.push(Constraint { name: "h".into(), root });
        }
    }
    let names = (0..n).map(|i| format!("x{i}")).collect();
    let domain = random_box(rng, n);
    Problem::new(names, domain, dag, obj, ineq, eq).unwrap()
}

/// A uniformly random point of `x`, with endpoints drawn now and then.
pub fn sample_point(rng: &mut ChaCha8Rng, x: &IntervalBox) -> Vec<f64> {
    x.dims()
        .iter()
        .map(|d| match rng.gen_range(0..20) {
            0 => d.lo(),
            1 => d.hi(),
            _ => rng.gen_range(d.lo()..=d.hi()),
        })
        .collect()
}

/// Distance in units of the last place between two finite floats.
pub fn ulps(a: f64, b: f64) -> u64 {
    fn key(x: f64) -> i64 {
        let bits = x.to_bits() as i64;
        if bits < 0 {
            i64::MIN - bits
        } else {
            bits
        }
    }
    key(a).abs_diff(key(b))
}

pub fn bits_eq(a: &[Interval], b: &[Interval]) -> bool {
    a.len() == b.len()
        && a.iter().zip(b).all(|(x, y)| x.lo().to_bits() == y.lo().to_bits() && x.hi().to_bits() == y.hi().to_bits())
}

fn ulp(v: f64) -> f64 {
    let a = v.abs();
    if a == 0.0 {
        f64::MIN_POSITIVE * f64::EPSILON
    } else {
        f64::from_bits(a.to_bits() + 1) - a
    }
}

/// First-order running error bound for evaluating `root` at `x`: every
/// operation contributes `per_op` ulps of its own result, and child errors
/// propagate through worst-case derivative magnitudes over the perturbed
/// argument. `None` when a value or bound is not finite.
pub fn accumulated_slack(problem: &Problem, root: NodeId, x: &[f64], per_op: f64) -> Option<f64> {
    use subdiv::dag::DagNode;
    let nodes = problem.dag().nodes();
    let mut val: Vec<f64> = Vec::with_capacity(nodes.len());
    let mut err: Vec<f64> = Vec::with_capacity(nodes.len());
    for node in nodes {
        let (v, e) = match *node {
            DagNode::Const(c) => (c, 0.0),
            DagNode::Var(i) => (x[i], 0.0),
            DagNode::Unary(op, a) => {
                let (a, ea) = (val[a.index()], err[a.index()]);
                let mag = a.abs() + ea;
                let (v, prop): (f64, f64) = match op {
                    UnaryOp::Neg => (-a, ea),
                    UnaryOp::Sqrt => (a.sqrt(), if a - ea > 0.0 { ea / (2.0 * (a - ea).sqrt()) } else if ea == 0.0 { 0.0 } else { f64::INFINITY }),
                    UnaryOp::Exp => (a.exp(), (a + ea).exp() * ea),
                    UnaryOp::Log => (a.ln(), if a - ea > 0.0 { ea / (a - ea) } else { f64::INFINITY }),
                    // Interval sin/cos give up on arguments beyond 1e8.
                    UnaryOp::Sin | UnaryOp::Cos if mag > 1e8 => (f64::NAN, f64::INFINITY),
                    UnaryOp::Sin => (a.sin(), ea),
                    UnaryOp::Cos => (a.cos(), ea),
                    UnaryOp::Tanh => (a.tanh(), ea),
                    UnaryOp::Powi(k) if k >= 0 => (a.powi(k), k as f64 * mag.powi((k - 1).max(0)) * ea),
                    UnaryOp::Powi(k) => {
                        let low = a.abs() - ea;
                        let d = if low > 0.0 { (-k) as f64 * low.powi(k - 1) * ea } else if ea == 0.0 { 0.0 } else { f64::INFINITY };
                        (a.powi(k), d)
                    }
                };
                (v, prop + per_op * ulp(v))
            }
            DagNode::Binary(op, a, b) => {
                let (a, ea, b, eb) = (val[a.index()], err[a.index()], val[b.index()], err[b.index()]);
                let (v, prop) = match op {
                    BinaryOp::Add => (a + b, ea + eb),
                    BinaryOp::Sub => (a - b, ea + eb),
                    BinaryOp::Mul => (a * b, b.abs() * ea + a.abs() * eb + ea * eb),
                    BinaryOp::Div => {
                        let v = a / b;
                        let low = b.abs() - eb;
                        (v, if low > 0.0 { (ea + v.abs() * eb) / low } else if eb == 0.0 && ea == 0.0 { 0.0 } else { f64::INFINITY })
                    }
                };
                (v, prop + per_op * ulp(v))
            }
        };
        if !v.is_finite() || !e.is_finite() {
            val.push(f64::NAN);
            err.push(f64::INFINITY);
        } else {
            val.push(v);
            err.push(e);
        }
    }
    let e = err[root.index()];
    e.is_finite().then_some(e)
}

/// Largest finite magnitude of any node value when evaluating the whole
/// graph in floating point at each of `points`.
pub fn intermediate_scale(problem: &Problem, points: impl IntoIterator<Item = Vec<f64>>) -> f64 {
    let mut scale: f64 = 0.0;
    for x in points {
        let mut clipped = false;
        for v in subdiv::dag::eval::eval_nodes::<f64>(problem.dag(), &x, &mut clipped).into_iter().flatten() {
            if v.is_finite() {
                scale = scale.max(v.abs());
            }
        }
    }
    scale
}
