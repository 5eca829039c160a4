//! Forward-mode (tangent) algorithmic differentiation.
//!
//! [`Tangent`] pairs a value with one directional derivative and is generic
//! over the underlying arithmetic: over `f64` it yields point derivatives,
//! over [`Interval`] it yields enclosures of the derivative over a box.

use crate::arith::{BinaryOp, EvalError, Scalar, UnaryOp};
use crate::dag::{eval, NodeId, Problem};
use crate::interval::{Interval, IntervalBox};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tangent<S> {
    pub val: S,
    pub der: S,
}

impl<S: Scalar> Tangent<S> {
    pub fn new(val: S, der: S) -> Self {
        Tangent { val, der }
    }

    /// An independent variable; `der` is 1 when it is the seeded direction.
    pub fn variable(val: S, seeded: bool) -> Self {
        Tangent { val, der: S::constant(if seeded { 1.0 } else { 0.0 }) }
    }
}

#[inline]
fn add<S: Scalar>(a: S, b: S) -> Result<S, EvalError> {
    S::binary(BinaryOp::Add, a, b)
}
#[inline]
fn sub<S: Scalar>(a: S, b: S) -> Result<S, EvalError> {
    S::binary(BinaryOp::Sub, a, b)
}
#[inline]
fn mul<S: Scalar>(a: S, b: S) -> Result<S, EvalError> {
    S::binary(BinaryOp::Mul, a, b)
}
#[inline]
fn div<S: Scalar>(a: S, b: S) -> Result<S, EvalError> {
    S::binary(BinaryOp::Div, a, b)
}

impl<S: Scalar> Scalar for Tangent<S> {
    fn constant(c: f64) -> Self {
        Tangent { val: S::constant(c), der: S::constant(0.0) }
    }

    fn unary(op: UnaryOp, x: Self, clipped: &mut bool) -> Result<Self, EvalError> {
        let val = S::unary(op, x.val, clipped)?;
        let der = match op {
            UnaryOp::Neg => S::unary(UnaryOp::Neg, x.der, clipped)?,
            // d sqrt(u) = u' / (2 sqrt(u))
            UnaryOp::Sqrt => div(x.der, mul(S::constant(2.0), val)?)?,
            UnaryOp::Exp => mul(x.der, val)?,
            UnaryOp::Log => div(x.der, x.val)?,
            UnaryOp::Sin => mul(x.der, S::unary(UnaryOp::Cos, x.val, clipped)?)?,
            UnaryOp::Cos => {
                let s = S::unary(UnaryOp::Sin, x.val, clipped)?;
                S::unary(UnaryOp::Neg, mul(x.der, s)?, clipped)?
            }
            // d tanh(u) = u' (1 - tanh(u)^2)
            UnaryOp::Tanh => {
                let sq = S::unary(UnaryOp::Powi(2), val, clipped)?;
                mul(x.der, sub(S::constant(1.0), sq)?)?
            }
            UnaryOp::Powi(0) => S::constant(0.0),
            UnaryOp::Powi(k) => {
                let p = S::unary(UnaryOp::Powi(k - 1), x.val, clipped)?;
                mul(x.der, mul(S::constant(k as f64), p)?)?
            }
        };
        Ok(Tangent { val, der })
    }

    fn binary(op: BinaryOp, a: Self, b: Self) -> Result<Self, EvalError> {
        Ok(match op {
            BinaryOp::Add => Tangent { val: add(a.val, b.val)?, der: add(a.der, b.der)? },
            BinaryOp::Sub => Tangent { val: sub(a.val, b.val)?, der: sub(a.der, b.der)? },
            BinaryOp::Mul => Tangent {
                val: mul(a.val, b.val)?,
                der: add(mul(a.der, b.val)?, mul(a.val, b.der)?)?,
            },
            // (u/v)' = (u' - (u/v) v') / v
            BinaryOp::Div => {
                let q = div(a.val, b.val)?;
                Tangent { val: q, der: div(sub(a.der, mul(q, b.der)?)?, b.val)? }
            }
        })
    }
}

/// Enclosure of one partial derivative per variable.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalGradient {
    pub components: Vec<Interval>,
}

/// Interval gradients of every node reachable from the problem roots.
///
/// One forward sweep per variable, each seeding the unit direction of that
/// variable. `sweeps[i][node]` is the interval-tangent value of `node` in
/// sweep `i`.
pub fn gradient_sweeps(
    problem: &Problem,
    x: &IntervalBox,
    clipped: &mut bool,
) -> Vec<Vec<Result<Tangent<Interval>, EvalError>>> {
    let n = problem.num_vars();
    (0..n)
        .map(|seed| {
            let vars: Vec<Tangent<Interval>> =
                x.dims().iter().enumerate().map(|(i, &d)| Tangent::variable(d, i == seed)).collect();
            eval::eval_nodes(problem.dag(), &vars, clipped)
        })
        .collect()
}

/// Natural interval extension of the gradient of `root` over `x`.
pub fn interval_gradient(problem: &Problem, root: NodeId, x: &IntervalBox) -> Result<IntervalGradient, EvalError> {
    let mut clipped = false;
    let sweeps = gradient_sweeps(problem, x, &mut clipped);
    let components = sweeps
        .iter()
        .map(|sweep| sweep[root.index()].map(|t| t.der))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(IntervalGradient { components })
}

/// Point gradient of `root` at `x` in floating-point tangent arithmetic.
pub fn real_gradient(problem: &Problem, root: NodeId, x: &[f64]) -> Result<Vec<f64>, EvalError> {
    let mut clipped = false;
    (0..x.len())
        .map(|seed| {
            let vars: Vec<Tangent<f64>> =
                x.iter().enumerate().map(|(i, &v)| Tangent::variable(v, i == seed)).collect();
            eval::eval_nodes(problem.dag(), &vars, &mut clipped)[root.index()].map(|t| t.der)
        })
        .collect()
}
