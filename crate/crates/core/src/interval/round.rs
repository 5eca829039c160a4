//! Directed rounding for the correctly rounded primitives.
//!
//! The host cannot switch the FPU rounding mode per operation, so each
//! primitive is evaluated in round-to-nearest and the sign of the rounding
//! error is recovered with an error-free transformation (TwoSum, FMA
//! residual). The result is stepped to the adjacent float only when the
//! nearest result lies on the wrong side of the exact value, which makes the
//! returned endpoint equal to the directed-rounded exact result.
//!
//! When the residual itself may be inexact (underflow range) the result is
//! stepped unconditionally, which is still an enclosure.

/// Below this magnitude FMA residuals of products and quotients can lose
/// bits to gradual underflow.
const TINY: f64 = 1.0e-290;

#[inline]
fn overflow_down(s: f64) -> f64 {
    // Exact result is finite, nearest rounding produced an infinity.
    if s > 0.0 {
        f64::MAX
    } else {
        s
    }
}

#[inline]
fn overflow_up(s: f64) -> f64 {
    if s < 0.0 {
        -f64::MAX
    } else {
        s
    }
}

#[inline]
fn two_sum_err(a: f64, b: f64, s: f64) -> f64 {
    let bb = s - a;
    (a - (s - bb)) + (b - bb)
}

pub fn add_down(a: f64, b: f64) -> f64 {
    let s = a + b;
    if !s.is_finite() {
        return if a.is_finite() && b.is_finite() { overflow_down(s) } else { s };
    }
    if two_sum_err(a, b, s) < 0.0 {
        s.next_down()
    } else {
        s
    }
}

pub fn add_up(a: f64, b: f64) -> f64 {
    let s = a + b;
    if !s.is_finite() {
        return if a.is_finite() && b.is_finite() { overflow_up(s) } else { s };
    }
    if two_sum_err(a, b, s) > 0.0 {
        s.next_up()
    } else {
        s
    }
}

#[inline]
pub fn sub_down(a: f64, b: f64) -> f64 {
    add_down(a, -b)
}

#[inline]
pub fn sub_up(a: f64, b: f64) -> f64 {
    add_up(a, -b)
}

/// Sign of the product residual `a*b - p`: -1, 0 or 1, or `None` when the
/// residual cannot be trusted.
#[inline]
fn mul_residual_sign(a: f64, b: f64, p: f64) -> Option<f64> {
    if p.abs() < TINY {
        return None;
    }
    Some(a.mul_add(b, -p))
}

pub fn mul_down(a: f64, b: f64) -> f64 {
    // 0 * inf is taken as 0 for interval endpoints.
    if a == 0.0 || b == 0.0 {
        return 0.0;
    }
    let p = a * b;
    if !p.is_finite() {
        return if a.is_finite() && b.is_finite() { overflow_down(p) } else { p };
    }
    match mul_residual_sign(a, b, p) {
        Some(e) if e < 0.0 => p.next_down(),
        Some(_) => p,
        None => p.next_down(),
    }
}

pub fn mul_up(a: f64, b: f64) -> f64 {
    if a == 0.0 || b == 0.0 {
        return 0.0;
    }
    let p = a * b;
    if !p.is_finite() {
        return if a.is_finite() && b.is_finite() { overflow_up(p) } else { p };
    }
    match mul_residual_sign(a, b, p) {
        Some(e) if e > 0.0 => p.next_up(),
        Some(_) => p,
        None => p.next_up(),
    }
}

/// Sign of `a/b - q` (the exact quotient minus the nearest quotient).
#[inline]
fn div_error_sign(a: f64, b: f64, q: f64) -> Option<f64> {
    if q.abs() < TINY || a.abs() < TINY {
        return None;
    }
    let r = (-q).mul_add(b, a);
    Some(if b > 0.0 { r } else { -r })
}

/// Quotient rounded down. `b` must be non-zero.
pub fn div_down(a: f64, b: f64) -> f64 {
    if a == 0.0 {
        return 0.0;
    }
    let q = a / b;
    if q.is_infinite() {
        return if a.is_finite() { overflow_down(q) } else { q };
    }
    if b.is_infinite() || a.is_infinite() {
        return q;
    }
    match div_error_sign(a, b, q) {
        Some(e) if e < 0.0 => q.next_down(),
        Some(_) => q,
        None => q.next_down(),
    }
}

/// Quotient rounded up. `b` must be non-zero.
pub fn div_up(a: f64, b: f64) -> f64 {
    if a == 0.0 {
        return 0.0;
    }
    let q = a / b;
    if q.is_infinite() {
        return if a.is_finite() { overflow_up(q) } else { q };
    }
    if b.is_infinite() || a.is_infinite() {
        return q;
    }
    match div_error_sign(a, b, q) {
        Some(e) if e > 0.0 => q.next_up(),
        Some(_) => q,
        None => q.next_up(),
    }
}

/// Square root rounded down; `x >= 0`.
pub fn sqrt_down(x: f64) -> f64 {
    let r = x.sqrt();
    if x == 0.0 || x.is_infinite() {
        return r;
    }
    if x < TINY {
        return r.next_down().max(0.0);
    }
    if (-r).mul_add(r, x) < 0.0 {
        r.next_down()
    } else {
        r
    }
}

/// Square root rounded up; `x >= 0`.
pub fn sqrt_up(x: f64) -> f64 {
    let r = x.sqrt();
    if x == 0.0 || x.is_infinite() {
        return r;
    }
    if x < TINY {
        return r.next_up();
    }
    if (-r).mul_add(r, x) > 0.0 {
        r.next_up()
    } else {
        r
    }
}

/// Step `x` down by `n` representable values.
#[inline]
pub fn step_down(mut x: f64, n: u32) -> f64 {
    for _ in 0..n {
        x = x.next_down();
    }
    x
}

/// Step `x` up by `n` representable values.
#[inline]
pub fn step_up(mut x: f64, n: u32) -> f64 {
    for _ in 0..n {
        x = x.next_up();
    }
    x
}
