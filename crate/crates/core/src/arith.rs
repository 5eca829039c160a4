//! The scalar arithmetics a DAG can be evaluated in.

use std::fmt::Debug;

use thiserror::Error;

use crate::interval::{Interval, IntervalError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnaryOp {
    Neg,
    Sqrt,
    Exp,
    Log,
    Sin,
    Cos,
    Tanh,
    /// Integer power.
    Powi(i32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl UnaryOp {
    pub fn name(&self) -> &'static str {
        match self {
            UnaryOp::Neg => "neg",
            UnaryOp::Sqrt => "sqrt",
            UnaryOp::Exp => "exp",
            UnaryOp::Log => "log",
            UnaryOp::Sin => "sin",
            UnaryOp::Cos => "cos",
            UnaryOp::Tanh => "tanh",
            UnaryOp::Powi(_) => "powi",
        }
    }

    pub fn from_name(name: &str) -> Option<UnaryOp> {
        Some(match name {
            "sqrt" => UnaryOp::Sqrt,
            "exp" => UnaryOp::Exp,
            "log" => UnaryOp::Log,
            "sin" => UnaryOp::Sin,
            "cos" => UnaryOp::Cos,
            "tanh" => UnaryOp::Tanh,
            _ => return None,
        })
    }
}

impl BinaryOp {
    pub fn symbol(&self) -> char {
        match self {
            BinaryOp::Add => '+',
            BinaryOp::Sub => '-',
            BinaryOp::Mul => '*',
            BinaryOp::Div => '/',
        }
    }
}

/// Failure of an intrinsic on its argument.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("division domain violation")]
    DivisionByZero,
    #[error("domain violation in {0}")]
    Domain(&'static str),
}

impl From<IntervalError> for EvalError {
    fn from(e: IntervalError) -> Self {
        match e {
            IntervalError::DivisionByZero => EvalError::DivisionByZero,
            IntervalError::Domain(op) => EvalError::Domain(op),
            IntervalError::UnboundedMidpoint => EvalError::Domain("midpoint"),
            IntervalError::Invalid { .. } => EvalError::Domain("interval"),
        }
    }
}

/// An arithmetic the intrinsic library is defined over.
///
/// `clipped` is set when an argument had to be intersected with the natural
/// domain of an intrinsic; only interval arithmetics ever set it.
pub trait Scalar: Copy + Debug + Send + Sync {
    fn constant(c: f64) -> Self;
    fn unary(op: UnaryOp, x: Self, clipped: &mut bool) -> Result<Self, EvalError>;
    fn binary(op: BinaryOp, a: Self, b: Self) -> Result<Self, EvalError>;
}

impl Scalar for f64 {
    #[inline]
    fn constant(c: f64) -> Self {
        c
    }

    fn unary(op: UnaryOp, x: f64, _clipped: &mut bool) -> Result<f64, EvalError> {
        let v = match op {
            UnaryOp::Neg => -x,
            UnaryOp::Sqrt if x < 0.0 => return Err(EvalError::Domain("sqrt")),
            UnaryOp::Sqrt => x.sqrt(),
            UnaryOp::Exp => x.exp(),
            UnaryOp::Log if x <= 0.0 => return Err(EvalError::Domain("log")),
            UnaryOp::Log => x.ln(),
            UnaryOp::Sin => x.sin(),
            UnaryOp::Cos => x.cos(),
            UnaryOp::Tanh => x.tanh(),
            UnaryOp::Powi(k) if k < 0 && x == 0.0 => return Err(EvalError::DivisionByZero),
            UnaryOp::Powi(k) => x.powi(k),
        };
        if v.is_nan() {
            return Err(EvalError::Domain(op.name()));
        }
        Ok(v)
    }

    fn binary(op: BinaryOp, a: f64, b: f64) -> Result<f64, EvalError> {
        let v = match op {
            BinaryOp::Add => a + b,
            BinaryOp::Sub => a - b,
            BinaryOp::Mul => a * b,
            BinaryOp::Div if b == 0.0 => return Err(EvalError::DivisionByZero),
            BinaryOp::Div => a / b,
        };
        if v.is_nan() {
            return Err(EvalError::Domain("nan"));
        }
        Ok(v)
    }
}

impl Scalar for Interval {
    #[inline]
    fn constant(c: f64) -> Self {
        Interval::point(c)
    }

    fn unary(op: UnaryOp, x: Interval, clipped: &mut bool) -> Result<Interval, EvalError> {
        Ok(match op {
            UnaryOp::Neg => x.neg(),
            UnaryOp::Sqrt => {
                let c = x.sqrt_clipped()?;
                *clipped |= c.clipped;
                c.value
            }
            UnaryOp::Exp => x.exp(),
            UnaryOp::Log => {
                let c = x.log_clipped()?;
                *clipped |= c.clipped;
                c.value
            }
            UnaryOp::Sin => x.sin(),
            UnaryOp::Cos => x.cos(),
            UnaryOp::Tanh => x.tanh(),
            UnaryOp::Powi(k) => x.powi(k)?,
        })
    }

    #[inline]
    fn binary(op: BinaryOp, a: Interval, b: Interval) -> Result<Interval, EvalError> {
        Ok(match op {
            BinaryOp::Add => a.add(b),
            BinaryOp::Sub => a.sub(b),
            BinaryOp::Mul => a.mul(b),
            BinaryOp::Div => a.div(b)?,
        })
    }
}
