//! Elementary functions over intervals.
//!
//! Library transcendentals carry a few ulp of unknown-direction error, so
//! each endpoint is pushed outward by `LIB_SLACK` representable values.
//! Arguments with known exact images (`exp(0)`, `sin(0)`, ...) are not
//! widened.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use super::{round, Interval, IntervalError};

const LIB_SLACK: u32 = 2;

/// An interval result plus whether the argument had to be intersected with
/// the natural domain of the function first.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Clipped {
    pub value: Interval,
    pub clipped: bool,
}

#[inline]
fn lower(v: f64) -> f64 {
    round::step_down(v, LIB_SLACK)
}

#[inline]
fn upper(v: f64) -> f64 {
    round::step_up(v, LIB_SLACK)
}

impl Interval {
    pub fn sqrt_clipped(self) -> Result<Clipped, IntervalError> {
        if self.hi < 0.0 {
            return Err(IntervalError::Domain("sqrt"));
        }
        let clipped = self.lo < 0.0;
        let lo = self.lo.max(0.0);
        Ok(Clipped { value: Interval::raw(round::sqrt_down(lo), round::sqrt_up(self.hi)), clipped })
    }

    pub fn sqrt(self) -> Result<Interval, IntervalError> {
        self.sqrt_clipped().map(|c| c.value)
    }

    pub fn exp(self) -> Interval {
        Interval::raw(exp_down(self.lo), exp_up(self.hi))
    }

    pub fn log_clipped(self) -> Result<Clipped, IntervalError> {
        if self.hi <= 0.0 {
            return Err(IntervalError::Domain("log"));
        }
        let clipped = self.lo <= 0.0;
        let lo = if clipped { f64::NEG_INFINITY } else { log_down(self.lo) };
        Ok(Clipped { value: Interval::raw(lo, log_up(self.hi)), clipped })
    }

    pub fn log(self) -> Result<Interval, IntervalError> {
        self.log_clipped().map(|c| c.value)
    }

    pub fn tanh(self) -> Interval {
        Interval::raw(tanh_down(self.lo), tanh_up(self.hi))
    }

    pub fn sin(self) -> Interval {
        periodic(self, f64::sin, FRAC_PI_2, -FRAC_PI_2)
    }

    pub fn cos(self) -> Interval {
        periodic(self, f64::cos, 0.0, PI)
    }
}

fn exp_down(x: f64) -> f64 {
    if x == 0.0 {
        return 1.0;
    }
    if x == f64::NEG_INFINITY {
        return 0.0;
    }
    let v = x.exp();
    if v == f64::INFINITY {
        return if x == f64::INFINITY { v } else { f64::MAX };
    }
    lower(v).max(0.0)
}

fn exp_up(x: f64) -> f64 {
    if x == 0.0 {
        return 1.0;
    }
    if x == f64::INFINITY {
        return x;
    }
    let v = x.exp();
    if v == 0.0 {
        return f64::from_bits(1) * (LIB_SLACK as f64);
    }
    upper(v)
}

fn log_down(x: f64) -> f64 {
    if x == 1.0 {
        return 0.0;
    }
    if x == f64::INFINITY {
        return f64::MAX;
    }
    lower(x.ln())
}

fn log_up(x: f64) -> f64 {
    if x == 1.0 {
        return 0.0;
    }
    if x == f64::INFINITY {
        return x;
    }
    upper(x.ln())
}

fn tanh_down(x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    if x == f64::NEG_INFINITY {
        return -1.0;
    }
    lower(x.tanh()).max(-1.0)
}

fn tanh_up(x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    if x == f64::INFINITY {
        return 1.0;
    }
    upper(x.tanh()).min(1.0)
}

/// Beyond this magnitude the argument reduction of the critical-point
/// search is no longer trustworthy and `[-1, 1]` is returned.
const LARGE_ARG: f64 = 1.0e8;

/// Shared bounding of `sin` and `cos`: endpoint values, plus exact `±1`
/// whenever a maximiser (`max_phase + 2kπ`) or minimiser
/// (`min_phase + 2kπ`) may lie in the interval.
fn periodic(x: Interval, f: fn(f64) -> f64, max_phase: f64, min_phase: f64) -> Interval {
    if !x.lo.is_finite() || !x.hi.is_finite() || x.lo.abs() > LARGE_ARG || x.hi.abs() > LARGE_ARG {
        return Interval::raw(-1.0, 1.0);
    }
    if x.hi - x.lo >= TAU {
        return Interval::raw(-1.0, 1.0);
    }
    let (flo, fhi) = (f(x.lo), f(x.hi));
    let exact_lo = point_exact(f, x.lo);
    let exact_hi = point_exact(f, x.hi);
    let lo_a = if exact_lo { flo } else { lower(flo) };
    let lo_b = if exact_hi { fhi } else { lower(fhi) };
    let hi_a = if exact_lo { flo } else { upper(flo) };
    let hi_b = if exact_hi { fhi } else { upper(fhi) };
    let mut lo = lo_a.min(lo_b).max(-1.0);
    let mut hi = hi_a.max(hi_b).min(1.0);
    if may_contain_phase(x.lo, x.hi, max_phase) {
        hi = 1.0;
    }
    if may_contain_phase(x.lo, x.hi, min_phase) {
        lo = -1.0;
    }
    Interval::raw(lo, hi)
}

/// Images that libm returns exactly: `sin(0) = 0`, `cos(0) = 1`.
#[inline]
fn point_exact(f: fn(f64) -> f64, x: f64) -> bool {
    x == 0.0 && (f(0.0) == 0.0 || f(0.0) == 1.0)
}

/// Whether some `phase + 2kπ` could lie in `[lo, hi]`. Errs on the side of
/// `true` within a small slack that absorbs the rounding of `k·2π`.
fn may_contain_phase(lo: f64, hi: f64, phase: f64) -> bool {
    let slack = 1e-12 * (1.0 + lo.abs().max(hi.abs()));
    let k = ((lo - phase) / TAU).floor();
    (0..3).any(|j| {
        let t = phase + (k + j as f64) * TAU;
        t >= lo - slack && t <= hi + slack
    })
}
