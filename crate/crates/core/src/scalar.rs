//! Scalar abstraction shared by point, box and taped evaluation.

use std::ops::{Add, Div, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::cbox::{inv_cbrt_point, ComplexBox};
use crate::error::IntervalError;
use crate::interval::RealInterval;

/// Field operations plus exact rational constants.
pub trait Arith:
    Clone
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    /// The real rational `p/q` (enclosed in interval types).
    fn ratio(p: i64, q: i64) -> Self;
    fn imag_unit() -> Self;
    fn from_complex(z: Complex64) -> Self;
    /// `self^-k`, k >= 1.
    fn inv_pow(&self, k: u32) -> Result<Self, IntervalError>;

    fn zero() -> Self {
        Self::ratio(0, 1)
    }
    fn one() -> Self {
        Self::ratio(1, 1)
    }
    fn scale(&self, p: i64, q: i64) -> Self {
        self.clone() * Self::ratio(p, q)
    }
    fn mul_i(&self) -> Self {
        self.clone() * Self::imag_unit()
    }
    fn sqr(&self) -> Self {
        self.clone() * self.clone()
    }
    fn powi(&self, n: u32) -> Self {
        let mut acc = Self::one();
        for _ in 0..n {
            acc = acc * self.clone();
        }
        acc
    }
}

/// Complex scalars that also support the branch functions.
pub trait Scalar: Arith {
    /// `U^(-1/3)` on the branch with arg U in (0, 2pi).
    fn inv_cbrt(&self) -> Result<Self, IntervalError>;
    fn sqrt_principal(&self) -> Result<Self, IntervalError>;
    fn conj(&self) -> Self;
    /// True when zero may lie in the value (exact zero for points).
    fn may_vanish(&self) -> bool;
    fn checked_recip(&self) -> Result<Self, IntervalError> {
        if self.may_vanish() {
            return Err(IntervalError::ZeroInBox);
        }
        Ok(Self::one() / self.clone())
    }
}

impl Arith for Complex64 {
    fn ratio(p: i64, q: i64) -> Self {
        Complex64::new(p as f64 / q as f64, 0.0)
    }
    fn imag_unit() -> Self {
        Complex64::i()
    }
    fn from_complex(z: Complex64) -> Self {
        z
    }
    fn inv_pow(&self, k: u32) -> Result<Self, IntervalError> {
        if *self == Complex64::new(0.0, 0.0) {
            return Err(IntervalError::ZeroInBox);
        }
        Ok(self.inv().powi(k as i32))
    }
    fn mul_i(&self) -> Self {
        Complex64::new(-self.im, self.re)
    }
    fn powi(&self, n: u32) -> Self {
        num_complex::Complex::powi(self, n as i32)
    }
}

impl Scalar for Complex64 {
    fn inv_cbrt(&self) -> Result<Self, IntervalError> {
        if self.im == 0.0 && self.re >= 0.0 {
            return Err(IntervalError::BranchCutIntersect);
        }
        Ok(inv_cbrt_point(*self))
    }
    fn sqrt_principal(&self) -> Result<Self, IntervalError> {
        if self.im == 0.0 && self.re <= 0.0 {
            return Err(IntervalError::BranchCutIntersect);
        }
        Ok(self.sqrt())
    }
    fn conj(&self) -> Self {
        Complex64::conj(self)
    }
    fn may_vanish(&self) -> bool {
        self.re == 0.0 && self.im == 0.0
    }
}

impl Arith for ComplexBox {
    fn ratio(p: i64, q: i64) -> Self {
        ComplexBox::real(RealInterval::ratio(p, q))
    }
    fn imag_unit() -> Self {
        ComplexBox::I
    }
    fn from_complex(z: Complex64) -> Self {
        ComplexBox::from_complex(z)
    }
    fn inv_pow(&self, k: u32) -> Result<Self, IntervalError> {
        ComplexBox::inv_pow(self, k)
    }
    fn scale(&self, p: i64, q: i64) -> Self {
        ComplexBox::scale(self, RealInterval::ratio(p, q))
    }
    fn mul_i(&self) -> Self {
        ComplexBox::mul_i(self)
    }
    fn sqr(&self) -> Self {
        ComplexBox::sqr(self)
    }
    fn powi(&self, n: u32) -> Self {
        ComplexBox::powi(self, n)
    }
}

impl Scalar for ComplexBox {
    fn inv_cbrt(&self) -> Result<Self, IntervalError> {
        self.cuberoot_upper()
    }
    fn sqrt_principal(&self) -> Result<Self, IntervalError> {
        ComplexBox::sqrt_principal(self)
    }
    fn conj(&self) -> Self {
        ComplexBox::conj(self)
    }
    fn may_vanish(&self) -> bool {
        self.contains_zero()
    }
    fn checked_recip(&self) -> Result<Self, IntervalError> {
        self.recip()
    }
}
