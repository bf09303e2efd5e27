//! Real intervals with outward rounding.
//!
//! Every native operation is followed by a one-ulp perturbation in the
//! direction that keeps the exact result inside. The perturbation is skipped
//! when an error-free transformation (two-sum, fma residual) proves the
//! rounded result exact or tells which side the exact value lies on.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::IntervalError;

/// Values below this magnitude may carry an inexact fma residual (gradual
/// underflow), so both directions are widened.
const TINY: f64 = 1e-290;

#[inline]
fn down(x: f64) -> f64 {
    if x.is_nan() {
        f64::NEG_INFINITY
    } else if x == f64::INFINITY {
        f64::MAX
    } else {
        x.next_down()
    }
}

#[inline]
fn up(x: f64) -> f64 {
    if x.is_nan() {
        f64::INFINITY
    } else if x == f64::NEG_INFINITY {
        f64::MIN
    } else {
        x.next_up()
    }
}

/// Rounded value `r` plus the sign of (exact - r). Returns the tight bounds.
#[inline]
fn bracket(r: f64, residual: f64) -> (f64, f64) {
    if !r.is_finite() || residual.is_nan() || (r.abs() < TINY && !(r == 0.0 && residual == 0.0)) {
        (down(r), up(r))
    } else if residual > 0.0 {
        (r, up(r))
    } else if residual < 0.0 {
        (down(r), r)
    } else {
        (r, r)
    }
}

#[inline]
fn add_bracket(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    bracket(s, err)
}

#[inline]
fn mul_bracket(a: f64, b: f64) -> (f64, f64) {
    if a == 0.0 || b == 0.0 {
        return (0.0, 0.0);
    }
    let p = a * b;
    bracket(p, a.mul_add(b, -p))
}

#[inline]
fn div_bracket(a: f64, b: f64) -> (f64, f64) {
    if a == 0.0 {
        return (0.0, 0.0);
    }
    let q = a / b;
    // a - q*b has the sign of (a/b - q) * sign(b)
    let rem = (-q).mul_add(b, a);
    bracket(q, if b > 0.0 { rem } else { -rem })
}

#[inline]
fn sqrt_bracket(a: f64) -> (f64, f64) {
    let r = a.sqrt();
    if a == 0.0 {
        return (0.0, 0.0);
    }
    bracket(r, (-r).mul_add(r, a))
}

/// Widen a libm result by two ulps on each side.
#[inline]
fn libm_bounds(x: f64) -> (f64, f64) {
    (down(down(x)), up(up(x)))
}

/// A closed interval `[lo, hi]` of reals.
#[derive(Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RealInterval {
    lo: f64,
    hi: f64,
}

impl fmt::Debug for RealInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:e}, {:e}]", self.lo, self.hi)
    }
}

impl fmt::Display for RealInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

impl RealInterval {
    pub const ZERO: RealInterval = RealInterval { lo: 0.0, hi: 0.0 };
    pub const ONE: RealInterval = RealInterval { lo: 1.0, hi: 1.0 };
    pub const ENTIRE: RealInterval = RealInterval {
        lo: f64::NEG_INFINITY,
        hi: f64::INFINITY,
    };

    pub fn new(lo: f64, hi: f64) -> Result<Self, IntervalError> {
        if lo.is_nan() || hi.is_nan() || lo > hi {
            return Err(IntervalError::InvalidBounds { lo, hi });
        }
        Ok(RealInterval { lo, hi })
    }

    #[inline]
    pub const fn point(x: f64) -> Self {
        RealInterval { lo: x, hi: x }
    }

    /// Symmetric interval `[-r, r]`.
    pub fn symmetric(r: f64) -> Self {
        let r = r.abs();
        RealInterval { lo: -r, hi: r }
    }

    /// Enclosure of the rational `p/q`.
    pub fn ratio(p: i64, q: i64) -> Self {
        Self::point(p as f64) / Self::point(q as f64)
    }

    /// Enclosure of a decimal literal. The parse is correctly rounded, so one
    /// ulp on each side is enough.
    pub fn from_decimal(s: &str) -> Self {
        let x: f64 = s.trim().parse().expect("decimal literal");
        RealInterval { lo: down(x), hi: up(x) }
    }

    #[inline]
    pub fn lo(&self) -> f64 {
        self.lo
    }
    #[inline]
    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn mid(&self) -> f64 {
        if self.lo == self.hi {
            return self.lo;
        }
        let m = 0.5 * self.lo + 0.5 * self.hi;
        m.clamp(self.lo, self.hi)
    }

    /// Upper bound on the width.
    pub fn width(&self) -> f64 {
        if self.hi == self.lo {
            return 0.0;
        }
        up(self.hi - self.lo)
    }

    /// Upper bound on the radius around `mid()`.
    pub fn rad(&self) -> f64 {
        let m = self.mid();
        up((m - self.lo).max(self.hi - m))
    }

    /// Magnitude: max |x|.
    pub fn mag(&self) -> f64 {
        self.lo.abs().max(self.hi.abs())
    }

    /// Mignitude: min |x|.
    pub fn mig(&self) -> f64 {
        if self.contains_zero() {
            0.0
        } else {
            self.lo.abs().min(self.hi.abs())
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn contains_zero(&self) -> bool {
        self.contains(0.0)
    }

    pub fn subset_of(&self, other: &RealInterval) -> bool {
        other.lo <= self.lo && self.hi <= other.hi
    }

    /// Strict inclusion in the interior of `other`.
    pub fn interior_of(&self, other: &RealInterval) -> bool {
        other.lo < self.lo && self.hi < other.hi
    }

    pub fn is_finite(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    pub fn hull(&self, other: &RealInterval) -> RealInterval {
        RealInterval {
            lo: self.lo.min(other.lo),
            hi: self.hi.max(other.hi),
        }
    }

    pub fn intersect(&self, other: &RealInterval) -> Option<RealInterval> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        (lo <= hi).then_some(RealInterval { lo, hi })
    }

    /// Grow by `r` on each side (outward rounded).
    pub fn inflate(&self, r: f64) -> RealInterval {
        RealInterval {
            lo: add_bracket(self.lo, -r).0,
            hi: add_bracket(self.hi, r).1,
        }
    }

    /// Grow relative to the width plus an absolute floor.
    pub fn blow(&self, rel: f64, abs: f64) -> RealInterval {
        self.inflate(self.width() * rel + abs)
    }

    pub fn abs(&self) -> RealInterval {
        if self.lo >= 0.0 {
            *self
        } else if self.hi <= 0.0 {
            -*self
        } else {
            RealInterval {
                lo: 0.0,
                hi: self.mag(),
            }
        }
    }

    pub fn sqr(&self) -> RealInterval {
        let a = self.abs();
        RealInterval {
            lo: mul_bracket(a.lo, a.lo).0,
            hi: mul_bracket(a.hi, a.hi).1,
        }
    }

    pub fn powi(&self, n: u32) -> RealInterval {
        match n {
            0 => RealInterval::ONE,
            1 => *self,
            _ if n % 2 == 0 => self.powi(n / 2).sqr(),
            _ => *self * self.powi(n - 1),
        }
    }

    pub fn recip(&self) -> RealInterval {
        RealInterval::ONE / *self
    }

    pub fn max(&self, other: &RealInterval) -> RealInterval {
        RealInterval {
            lo: self.lo.max(other.lo),
            hi: self.hi.max(other.hi),
        }
    }

    pub fn min(&self, other: &RealInterval) -> RealInterval {
        RealInterval {
            lo: self.lo.min(other.lo),
            hi: self.hi.min(other.hi),
        }
    }

    pub fn sqrt(&self) -> Result<RealInterval, IntervalError> {
        if self.lo < 0.0 {
            return Err(IntervalError::NegativeArgument(self.lo));
        }
        Ok(RealInterval {
            lo: sqrt_bracket(self.lo).0,
            hi: sqrt_bracket(self.hi).1,
        })
    }

    pub fn cbrt(&self) -> RealInterval {
        let lo = if self.lo == 0.0 { 0.0 } else { libm_bounds(self.lo.cbrt()).0 };
        let hi = if self.hi == 0.0 { 0.0 } else { libm_bounds(self.hi.cbrt()).1 };
        RealInterval { lo, hi }
    }

    pub fn exp(&self) -> RealInterval {
        RealInterval {
            lo: libm_bounds(self.lo.exp()).0.max(0.0),
            hi: libm_bounds(self.hi.exp()).1,
        }
    }

    pub fn ln(&self) -> Result<RealInterval, IntervalError> {
        if self.lo <= 0.0 {
            return Err(IntervalError::NegativeArgument(self.lo));
        }
        Ok(RealInterval {
            lo: libm_bounds(self.lo.ln()).0,
            hi: libm_bounds(self.hi.ln()).1,
        })
    }

    pub fn atan(&self) -> RealInterval {
        RealInterval {
            lo: libm_bounds(self.lo.atan()).0,
            hi: libm_bounds(self.hi.atan()).1,
        }
    }

    /// Sine on a subinterval of `[-pi/2, pi/2]` where it is increasing.
    pub fn sin_monotone(&self) -> Result<RealInterval, IntervalError> {
        let half_pi = RealInterval::pi().hi() * 0.5;
        if self.lo < -half_pi || self.hi > half_pi {
            return Err(IntervalError::OutsideMonotoneRange);
        }
        Ok(RealInterval {
            lo: libm_bounds(self.lo.sin()).0.max(-1.0),
            hi: libm_bounds(self.hi.sin()).1.min(1.0),
        })
    }

    /// Cosine on a subinterval of `[0, pi]` where it is decreasing.
    pub fn cos_monotone(&self) -> Result<RealInterval, IntervalError> {
        if self.lo < 0.0 || self.hi > RealInterval::pi().lo() {
            return Err(IntervalError::OutsideMonotoneRange);
        }
        Ok(RealInterval {
            lo: libm_bounds(self.hi.cos()).0.max(-1.0),
            hi: libm_bounds(self.lo.cos()).1.min(1.0),
        })
    }

    pub fn pi() -> RealInterval {
        // 3.14159265358979323846264338328 lies strictly between these doubles
        RealInterval {
            lo: std::f64::consts::PI,
            hi: std::f64::consts::PI.next_up(),
        }
    }

    pub fn checked_div(self, rhs: RealInterval) -> Result<RealInterval, IntervalError> {
        if rhs.contains_zero() {
            return Err(IntervalError::DivisionByZeroInterval);
        }
        Ok(self / rhs)
    }
}

impl Neg for RealInterval {
    type Output = RealInterval;
    #[inline]
    fn neg(self) -> RealInterval {
        RealInterval {
            lo: -self.hi,
            hi: -self.lo,
        }
    }
}

impl Add for RealInterval {
    type Output = RealInterval;
    #[inline]
    fn add(self, rhs: RealInterval) -> RealInterval {
        RealInterval {
            lo: add_bracket(self.lo, rhs.lo).0,
            hi: add_bracket(self.hi, rhs.hi).1,
        }
    }
}

impl Sub for RealInterval {
    type Output = RealInterval;
    #[inline]
    fn sub(self, rhs: RealInterval) -> RealInterval {
        self + (-rhs)
    }
}

impl Mul for RealInterval {
    type Output = RealInterval;
    fn mul(self, rhs: RealInterval) -> RealInterval {
        let (a, b, c, d) = (self.lo, self.hi, rhs.lo, rhs.hi);
        if a >= 0.0 && c >= 0.0 {
            return RealInterval {
                lo: mul_bracket(a, c).0,
                hi: mul_bracket(b, d).1,
            };
        }
        let p = [mul_bracket(a, c), mul_bracket(a, d), mul_bracket(b, c), mul_bracket(b, d)];
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for (l, h) in p {
            lo = lo.min(l);
            hi = hi.max(h);
        }
        RealInterval { lo, hi }
    }
}

impl Div for RealInterval {
    type Output = RealInterval;
    /// Division by an interval containing zero yields the entire line;
    /// use [`RealInterval::checked_div`] to get an error instead.
    fn div(self, rhs: RealInterval) -> RealInterval {
        if rhs.contains_zero() {
            return RealInterval::ENTIRE;
        }
        let (a, b, c, d) = (self.lo, self.hi, rhs.lo, rhs.hi);
        let q = [div_bracket(a, c), div_bracket(a, d), div_bracket(b, c), div_bracket(b, d)];
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for (l, h) in q {
            lo = lo.min(l);
            hi = hi.max(h);
        }
        RealInterval { lo, hi }
    }
}

impl Add<f64> for RealInterval {
    type Output = RealInterval;
    fn add(self, rhs: f64) -> RealInterval {
        self + RealInterval::point(rhs)
    }
}

impl Mul<f64> for RealInterval {
    type Output = RealInterval;
    fn mul(self, rhs: f64) -> RealInterval {
        self * RealInterval::point(rhs)
    }
}

impl From<f64> for RealInterval {
    fn from(x: f64) -> Self {
        RealInterval::point(x)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
}

/// Checked binary operation on intervals.
pub fn iv_arith(op: ArithOp, a: RealInterval, b: RealInterval) -> Result<RealInterval, IntervalError> {
    match op {
        ArithOp::Add => Ok(a + b),
        ArithOp::Sub => Ok(a - b),
        ArithOp::Mul => Ok(a * b),
        ArithOp::Div => a.checked_div(b),
    }
}

pub fn iv_sqrt(a: RealInterval) -> Result<RealInterval, IntervalError> {
    a.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iv(lo: f64, hi: f64) -> RealInterval {
        RealInterval::new(lo, hi).unwrap()
    }

    #[test]
    fn products_by_sign_case() {
        assert_eq!(iv(1.0, 2.0) * iv(3.0, 4.0), iv(3.0, 8.0));
        assert_eq!(iv(-1.0, 1.0) * iv(-1.0, 1.0), iv(-1.0, 1.0));
        assert_eq!(iv(-2.0, -1.0) * iv(3.0, 5.0), iv(-10.0, -3.0));
    }

    #[test]
    fn third_is_tight() {
        let t = iv_arith(ArithOp::Div, RealInterval::ONE, iv(3.0, 3.0)).unwrap();
        // 1/3 = 0.333... has residual; the bracket is exactly one ulp wide
        assert!(t.lo() < t.hi());
        assert_eq!(t.lo().next_up(), t.hi());
        assert!(t.lo() * 3.0 <= 1.0);
    }

    #[test]
    fn division_by_zero_interval() {
        assert_eq!(
            iv_arith(ArithOp::Div, RealInterval::ONE, iv(-1.0, 1.0)),
            Err(IntervalError::DivisionByZeroInterval)
        );
        assert_eq!(RealInterval::ONE / iv(0.0, 1.0), RealInterval::ENTIRE);
    }

    #[test]
    fn square_roots() {
        assert_eq!(iv_sqrt(iv(4.0, 9.0)).unwrap(), iv(2.0, 3.0));
        assert_eq!(iv_sqrt(RealInterval::ZERO).unwrap(), RealInterval::ZERO);
        let r2 = iv_sqrt(iv(2.0, 2.0)).unwrap();
        assert!(r2.lo() < r2.hi() && r2.lo().next_up() == r2.hi());
        assert!(matches!(iv_sqrt(iv(-1.0, 1.0)), Err(IntervalError::NegativeArgument(_))));
    }

    #[test]
    fn invalid_bounds() {
        assert!(RealInterval::new(2.0, 1.0).is_err());
        assert!(RealInterval::new(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn square_of_straddling_interval() {
        assert_eq!(iv(-2.0, 1.0).sqr(), iv(0.0, 4.0));
        assert_eq!(iv(-2.0, 1.0).powi(3), iv(-8.0, 4.0));
    }

    #[test]
    fn pi_brackets_decimal() {
        let p = RealInterval::pi();
        let d = RealInterval::from_decimal("3.14159265358979323846264338328");
        assert!(d.intersect(&p).is_some());
        assert!(p.width() < 1e-15);
    }

    #[test]
    fn ratio_encloses() {
        let r = RealInterval::ratio(16, 81);
        assert!(r.contains(16.0 / 81.0));
        assert!(r.width() <= 2.0 * f64::EPSILON);
    }
}
