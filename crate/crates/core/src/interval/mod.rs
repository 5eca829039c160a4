//! Validated interval arithmetic with outward rounding.
//!
//! Lower endpoints are rounded toward negative infinity and upper endpoints
//! toward positive infinity, so every result encloses the exact image set.
//! Endpoints may be infinite but never NaN, and `lo <= hi` always holds.

mod elementary;
pub mod round;

use std::fmt;

use thiserror::Error;

pub use elementary::Clipped;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum IntervalError {
    #[error("invalid interval [{lo}, {hi}]")]
    Invalid { lo: f64, hi: f64 },
    #[error("unbounded midpoint")]
    UnboundedMidpoint,
    #[error("division domain violation")]
    DivisionByZero,
    #[error("domain violation in {0}")]
    Domain(&'static str),
}

/// A compact interval `[lo, hi]`.
#[derive(Clone, Copy, PartialEq)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl fmt::Debug for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:?}, {:?}]", self.lo, self.hi)
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

impl Interval {
    pub const ENTIRE: Interval = Interval { lo: f64::NEG_INFINITY, hi: f64::INFINITY };
    pub const ZERO: Interval = Interval { lo: 0.0, hi: 0.0 };
    pub const ONE: Interval = Interval { lo: 1.0, hi: 1.0 };

    pub fn new(lo: f64, hi: f64) -> Result<Self, IntervalError> {
        if lo.is_nan() || hi.is_nan() || lo > hi || lo == f64::INFINITY || hi == f64::NEG_INFINITY {
            return Err(IntervalError::Invalid { lo, hi });
        }
        Ok(Interval { lo, hi })
    }

    /// Builds an interval from endpoints the caller already knows are ordered.
    #[inline]
    pub(crate) fn raw(lo: f64, hi: f64) -> Self {
        debug_assert!(!(lo > hi) && !lo.is_nan() && !hi.is_nan(), "bad interval [{lo}, {hi}]");
        Interval { lo, hi }
    }

    #[inline]
    pub fn point(x: f64) -> Self {
        assert!(!x.is_nan(), "NaN point interval");
        Interval { lo: x, hi: x }
    }

    #[inline]
    pub fn lo(&self) -> f64 {
        self.lo
    }

    #[inline]
    pub fn hi(&self) -> f64 {
        self.hi
    }

    /// `hi - lo`, rounded up.
    #[inline]
    pub fn width(&self) -> f64 {
        round::sub_up(self.hi, self.lo)
    }

    pub fn midpoint(&self) -> Result<f64, IntervalError> {
        if !self.lo.is_finite() || !self.hi.is_finite() {
            return Err(IntervalError::UnboundedMidpoint);
        }
        let mut m = (self.lo + self.hi) * 0.5;
        if !m.is_finite() {
            m = 0.5 * self.lo + 0.5 * self.hi;
        }
        Ok(m.clamp(self.lo, self.hi))
    }

    #[inline]
    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }

    #[inline]
    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    #[inline]
    pub fn contains_zero(&self) -> bool {
        self.lo <= 0.0 && 0.0 <= self.hi
    }

    /// `self ⊆ other`.
    #[inline]
    pub fn subset_of(&self, other: &Interval) -> bool {
        other.lo <= self.lo && self.hi <= other.hi
    }

    #[inline]
    pub fn hull(&self, other: &Interval) -> Interval {
        Interval { lo: self.lo.min(other.lo), hi: self.hi.max(other.hi) }
    }

    /// `None` when the intervals are disjoint.
    #[inline]
    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        (lo <= hi).then_some(Interval { lo, hi })
    }

    /// The smallest interval containing `x` with one ulp of slack per side.
    pub fn around(x: f64) -> Interval {
        Interval { lo: x.next_down(), hi: x.next_up() }
    }

    #[inline]
    pub fn add(self, y: Interval) -> Interval {
        Interval { lo: round::add_down(self.lo, y.lo), hi: round::add_up(self.hi, y.hi) }
    }

    #[inline]
    pub fn sub(self, y: Interval) -> Interval {
        Interval { lo: round::sub_down(self.lo, y.hi), hi: round::sub_up(self.hi, y.lo) }
    }

    #[inline]
    pub fn neg(self) -> Interval {
        Interval { lo: -self.hi, hi: -self.lo }
    }

    pub fn mul(self, y: Interval) -> Interval {
        let (a, b, c, d) = (self.lo, self.hi, y.lo, y.hi);
        // Sign-case analysis keeps the common cases at two products.
        if a >= 0.0 {
            if c >= 0.0 {
                Interval::raw(round::mul_down(a, c), round::mul_up(b, d))
            } else if d <= 0.0 {
                Interval::raw(round::mul_down(b, c), round::mul_up(a, d))
            } else {
                Interval::raw(round::mul_down(b, c), round::mul_up(b, d))
            }
        } else if b <= 0.0 {
            if c >= 0.0 {
                Interval::raw(round::mul_down(a, d), round::mul_up(b, c))
            } else if d <= 0.0 {
                Interval::raw(round::mul_down(b, d), round::mul_up(a, c))
            } else {
                Interval::raw(round::mul_down(a, d), round::mul_up(a, c))
            }
        } else if c >= 0.0 {
            Interval::raw(round::mul_down(a, d), round::mul_up(b, d))
        } else if d <= 0.0 {
            Interval::raw(round::mul_down(b, c), round::mul_up(a, c))
        } else {
            let lo = round::mul_down(a, d).min(round::mul_down(b, c));
            let hi = round::mul_up(a, c).max(round::mul_up(b, d));
            Interval::raw(lo, hi)
        }
    }

    pub fn div(self, y: Interval) -> Result<Interval, IntervalError> {
        if y.contains_zero() {
            return Err(IntervalError::DivisionByZero);
        }
        let (a, b, c, d) = (self.lo, self.hi, y.lo, y.hi);
        let r = if c > 0.0 {
            if a >= 0.0 {
                (round::div_down(a, d), round::div_up(b, c))
            } else if b <= 0.0 {
                (round::div_down(a, c), round::div_up(b, d))
            } else {
                (round::div_down(a, c), round::div_up(b, c))
            }
        } else if a >= 0.0 {
            (round::div_down(b, d), round::div_up(a, c))
        } else if b <= 0.0 {
            (round::div_down(b, c), round::div_up(a, d))
        } else {
            (round::div_down(b, d), round::div_up(a, d))
        };
        Ok(Interval::raw(r.0, r.1))
    }

    /// Integer power. Even exponents use the image of `|X|`.
    pub fn powi(self, k: i32) -> Result<Interval, IntervalError> {
        if k == 0 {
            return Ok(Interval::ONE);
        }
        if k < 0 {
            let p = self.powi(k.checked_neg().ok_or(IntervalError::Domain("powi"))?)?;
            return Interval::ONE.div(p);
        }
        let k = k as u32;
        if k % 2 == 0 {
            let mag = self.abs();
            Ok(Interval::raw(pow_down(mag.lo, k), pow_up(mag.hi, k)))
        } else {
            let lo = if self.lo >= 0.0 { pow_down(self.lo, k) } else { -pow_up(-self.lo, k) };
            let hi = if self.hi >= 0.0 { pow_up(self.hi, k) } else { -pow_down(-self.hi, k) };
            Ok(Interval::raw(lo, hi))
        }
    }

    pub fn abs(self) -> Interval {
        if self.lo >= 0.0 {
            self
        } else if self.hi <= 0.0 {
            self.neg()
        } else {
            Interval::raw(0.0, (-self.lo).max(self.hi))
        }
    }
}

fn pow_down(x: f64, k: u32) -> f64 {
    debug_assert!(x >= 0.0);
    let mut acc = x;
    for _ in 1..k {
        acc = round::mul_down(acc, x);
    }
    acc
}

fn pow_up(x: f64, k: u32) -> f64 {
    debug_assert!(x >= 0.0);
    let mut acc = x;
    for _ in 1..k {
        acc = round::mul_up(acc, x);
    }
    acc
}

/// An axis-aligned box, one interval per variable.
#[derive(Clone, PartialEq, Debug)]
pub struct IntervalBox {
    dims: Vec<Interval>,
}

impl IntervalBox {
    pub fn new(dims: Vec<Interval>) -> Result<Self, IntervalError> {
        if dims.is_empty() {
            return Err(IntervalError::Invalid { lo: f64::NAN, hi: f64::NAN });
        }
        Ok(IntervalBox { dims })
    }

    pub fn from_bounds(bounds: &[(f64, f64)]) -> Result<Self, IntervalError> {
        let dims = bounds.iter().map(|&(lo, hi)| Interval::new(lo, hi)).collect::<Result<Vec<_>, _>>()?;
        IntervalBox::new(dims)
    }

    pub fn point(x: &[f64]) -> Self {
        assert!(!x.is_empty());
        IntervalBox { dims: x.iter().map(|&v| Interval::point(v)).collect() }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dims.len()
    }

    #[inline]
    pub fn dims(&self) -> &[Interval] {
        &self.dims
    }

    #[inline]
    pub fn dims_mut(&mut self) -> &mut [Interval] {
        &mut self.dims
    }

    /// Largest component width.
    pub fn width(&self) -> f64 {
        self.dims.iter().map(Interval::width).fold(0.0, f64::max)
    }

    /// Index of the widest component, lowest index on ties.
    pub fn widest_dim(&self) -> usize {
        let mut best = 0;
        let mut best_w = self.dims[0].width();
        for (i, d) in self.dims.iter().enumerate().skip(1) {
            let w = d.width();
            if w > best_w {
                best = i;
                best_w = w;
            }
        }
        best
    }

    pub fn midpoint(&self) -> Result<Vec<f64>, IntervalError> {
        self.dims.iter().map(Interval::midpoint).collect()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dims.len() && self.dims.iter().zip(x).all(|(d, &v)| d.contains(v))
    }

    pub fn subset_of(&self, other: &IntervalBox) -> bool {
        self.dims.len() == other.dims.len() && self.dims.iter().zip(&other.dims).all(|(a, b)| a.subset_of(b))
    }

    pub fn hull(&self, other: &IntervalBox) -> IntervalBox {
        IntervalBox { dims: self.dims.iter().zip(&other.dims).map(|(a, b)| a.hull(b)).collect() }
    }

    pub fn intersect(&self, other: &IntervalBox) -> Option<IntervalBox> {
        let dims = self.dims.iter().zip(&other.dims).map(|(a, b)| a.intersect(b)).collect::<Option<Vec<_>>>()?;
        Some(IntervalBox { dims })
    }

    /// Clamps `x` into the box component-wise.
    pub fn clamp(&self, x: &mut [f64]) {
        for (v, d) in x.iter_mut().zip(&self.dims) {
            *v = v.clamp(d.lo, d.hi);
        }
    }
}

impl std::ops::Index<usize> for IntervalBox {
    type Output = Interval;
    fn index(&self, i: usize) -> &Interval {
        &self.dims[i]
    }
}
