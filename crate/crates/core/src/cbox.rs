//! Axis-aligned complex rectangles.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::IntervalError;
use crate::interval::RealInterval;

#[derive(Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexBox {
    pub re: RealInterval,
    pub im: RealInterval,
}

impl fmt::Debug for ComplexBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} + i{:?}", self.re, self.im)
    }
}

impl ComplexBox {
    pub const ZERO: ComplexBox = ComplexBox {
        re: RealInterval::ZERO,
        im: RealInterval::ZERO,
    };
    pub const ONE: ComplexBox = ComplexBox {
        re: RealInterval::ONE,
        im: RealInterval::ZERO,
    };
    pub const I: ComplexBox = ComplexBox {
        re: RealInterval::ZERO,
        im: RealInterval::ONE,
    };
    pub const ENTIRE: ComplexBox = ComplexBox {
        re: RealInterval::ENTIRE,
        im: RealInterval::ENTIRE,
    };

    pub const fn new(re: RealInterval, im: RealInterval) -> Self {
        ComplexBox { re, im }
    }

    pub const fn point(re: f64, im: f64) -> Self {
        ComplexBox {
            re: RealInterval::point(re),
            im: RealInterval::point(im),
        }
    }

    pub fn from_complex(z: Complex64) -> Self {
        Self::point(z.re, z.im)
    }

    pub fn real(x: RealInterval) -> Self {
        ComplexBox {
            re: x,
            im: RealInterval::ZERO,
        }
    }

    /// Box of half-side `r` centred at `c`.
    pub fn around(c: Complex64, r: f64) -> Self {
        ComplexBox {
            re: RealInterval::point(c.re).inflate(r),
            im: RealInterval::point(c.im).inflate(r),
        }
    }

    pub fn mid(&self) -> Complex64 {
        Complex64::new(self.re.mid(), self.im.mid())
    }

    /// Largest side length.
    pub fn width(&self) -> f64 {
        self.re.width().max(self.im.width())
    }

    pub fn rad(&self) -> f64 {
        self.re.rad().max(self.im.rad())
    }

    pub fn is_finite(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }

    pub fn contains(&self, z: Complex64) -> bool {
        self.re.contains(z.re) && self.im.contains(z.im)
    }

    pub fn contains_zero(&self) -> bool {
        self.re.contains_zero() && self.im.contains_zero()
    }

    pub fn subset_of(&self, other: &ComplexBox) -> bool {
        self.re.subset_of(&other.re) && self.im.subset_of(&other.im)
    }

    pub fn interior_of(&self, other: &ComplexBox) -> bool {
        self.re.interior_of(&other.re) && self.im.interior_of(&other.im)
    }

    pub fn hull(&self, other: &ComplexBox) -> ComplexBox {
        ComplexBox {
            re: self.re.hull(&other.re),
            im: self.im.hull(&other.im),
        }
    }

    pub fn intersect(&self, other: &ComplexBox) -> Option<ComplexBox> {
        Some(ComplexBox {
            re: self.re.intersect(&other.re)?,
            im: self.im.intersect(&other.im)?,
        })
    }

    pub fn inflate(&self, r: f64) -> ComplexBox {
        ComplexBox {
            re: self.re.inflate(r),
            im: self.im.inflate(r),
        }
    }

    pub fn conj(&self) -> ComplexBox {
        ComplexBox {
            re: self.re,
            im: -self.im,
        }
    }

    pub fn mul_i(&self) -> ComplexBox {
        ComplexBox {
            re: -self.im,
            im: self.re,
        }
    }

    pub fn scale(&self, s: RealInterval) -> ComplexBox {
        ComplexBox {
            re: self.re * s,
            im: self.im * s,
        }
    }

    /// Enclosure of |z|² over the box.
    pub fn norm_sqr(&self) -> RealInterval {
        self.re.sqr() + self.im.sqr()
    }

    /// Enclosure of |z| over the box.
    pub fn abs(&self) -> RealInterval {
        self.norm_sqr().sqrt().expect("sum of squares is nonnegative")
    }

    /// Upper bound on sup |z|.
    pub fn mag_upper(&self) -> f64 {
        let r = RealInterval::point(self.re.mag()).sqr() + RealInterval::point(self.im.mag()).sqr();
        r.sqrt().map(|s| s.hi()).unwrap_or(f64::INFINITY)
    }

    /// Lower bound on inf |z|.
    pub fn mag_lower(&self) -> f64 {
        let r = RealInterval::point(self.re.mig()).sqr() + RealInterval::point(self.im.mig()).sqr();
        r.sqrt().map(|s| s.lo()).unwrap_or(0.0)
    }

    pub fn sqr(&self) -> ComplexBox {
        ComplexBox {
            re: self.re.sqr() - self.im.sqr(),
            im: (self.re * self.im) * RealInterval::point(2.0),
        }
    }

    pub fn powi(&self, n: u32) -> ComplexBox {
        match n {
            0 => ComplexBox::ONE,
            1 => *self,
            _ if n % 2 == 0 => self.powi(n / 2).sqr(),
            _ => *self * self.powi(n - 1),
        }
    }

    pub fn recip(&self) -> Result<ComplexBox, IntervalError> {
        if self.contains_zero() {
            return Err(IntervalError::ZeroInBox);
        }
        let d = self.norm_sqr();
        Ok(ComplexBox {
            re: self.re / d,
            im: -self.im / d,
        })
    }

    pub fn checked_div(&self, rhs: &ComplexBox) -> Result<ComplexBox, IntervalError> {
        Ok(*self * rhs.recip()?)
    }

    /// `z^-k` for k in {2, 3} from the separated real/imaginary formulas.
    pub fn inv_pow(&self, k: u32) -> Result<ComplexBox, IntervalError> {
        if self.contains_zero() {
            return Err(IntervalError::ZeroInBox);
        }
        let (a, b) = (self.re, self.im);
        let a2 = a.sqr();
        let b2 = b.sqr();
        let m2 = a2 + b2;
        match k {
            2 => {
                let m4 = m2.sqr();
                Ok(ComplexBox {
                    re: (a2 - b2) / m4,
                    im: -(a * b * RealInterval::point(2.0)) / m4,
                })
            }
            3 => {
                let m6 = m2.powi(3);
                let three = RealInterval::point(3.0);
                Ok(ComplexBox {
                    re: a * (a2 - three * b2) / m6,
                    im: b * (b2 - three * a2) / m6,
                })
            }
            1 => self.recip(),
            _ => {
                let r = self.recip()?;
                Ok(r.powi(k))
            }
        }
    }

    /// Principal square root. Fails when the box meets `(-inf, 0]`.
    pub fn sqrt_principal(&self) -> Result<ComplexBox, IntervalError> {
        if self.im.contains_zero() && self.re.lo() <= 0.0 {
            return Err(IntervalError::BranchCutIntersect);
        }
        let two = RealInterval::point(2.0);
        // Re sqrt(z) = sqrt((|z| + x)/2) is positive off the cut.
        let s = ((self.abs() + self.re) / two).max(&RealInterval::ZERO);
        let re = s.sqrt()?;
        let re = if self.re.lo() > 0.0 {
            // Re sqrt(z) >= sqrt(Re z) when Re z > 0
            re.max(&self.re.sqrt()?)
        } else {
            re
        };
        let im = self.im / (two * re);
        Ok(ComplexBox { re, im })
    }

    /// `U^(-1/3)` on the branch cut along `[0, inf)` with arg U in (0, 2pi).
    pub fn cuberoot_upper(&self) -> Result<ComplexBox, IntervalError> {
        if self.re.hi() >= 0.0 && self.im.contains_zero() {
            return Err(IntervalError::BranchCutIntersect);
        }
        let v = self.recip()?;
        let b0 = inv_cbrt_point(self.mid());
        let yb = (b0 * b0 * 3.0).inv();
        let y = ComplexBox::from_complex(yb);
        let c = ComplexBox::from_complex(b0);
        let f0 = c.powi(3) - v;
        let guess = (self.rad() / self.mid().norm() + 8.0 * f64::EPSILON) * b0.norm();
        let mut r = guess;
        for _ in 0..40 {
            let x = ComplexBox::around(b0, r);
            let k = c - y * f0 + (ComplexBox::ONE - y * x.sqr() * RealInterval::point(3.0)) * (x - c);
            if k.is_finite() && k.interior_of(&x) {
                return Ok(k);
            }
            r *= 2.0;
            if r > 0.5 * b0.norm() {
                break;
            }
        }
        Err(IntervalError::BranchCutIntersect)
    }
}

/// Point evaluation of the branch `U^(-1/3)`, arg U taken in (0, 2pi].
pub fn inv_cbrt_point(u: Complex64) -> Complex64 {
    let mut theta = u.im.atan2(u.re);
    if theta <= 0.0 {
        theta += 2.0 * std::f64::consts::PI;
    }
    let m = u.norm().powf(-1.0 / 3.0);
    Complex64::from_polar(m, -theta / 3.0)
}

impl Neg for ComplexBox {
    type Output = ComplexBox;
    fn neg(self) -> ComplexBox {
        ComplexBox {
            re: -self.re,
            im: -self.im,
        }
    }
}

impl Add for ComplexBox {
    type Output = ComplexBox;
    fn add(self, rhs: ComplexBox) -> ComplexBox {
        ComplexBox {
            re: self.re + rhs.re,
            im: self.im + rhs.im,
        }
    }
}

impl Sub for ComplexBox {
    type Output = ComplexBox;
    fn sub(self, rhs: ComplexBox) -> ComplexBox {
        ComplexBox {
            re: self.re - rhs.re,
            im: self.im - rhs.im,
        }
    }
}

impl Mul for ComplexBox {
    type Output = ComplexBox;
    fn mul(self, rhs: ComplexBox) -> ComplexBox {
        ComplexBox {
            re: self.re * rhs.re - self.im * rhs.im,
            im: self.re * rhs.im + self.im * rhs.re,
        }
    }
}

impl Mul<RealInterval> for ComplexBox {
    type Output = ComplexBox;
    fn mul(self, rhs: RealInterval) -> ComplexBox {
        self.scale(rhs)
    }
}

impl Div for ComplexBox {
    type Output = ComplexBox;
    /// Yields [`ComplexBox::ENTIRE`] when the divisor contains zero.
    fn div(self, rhs: ComplexBox) -> ComplexBox {
        match rhs.recip() {
            Ok(r) => self * r,
            Err(_) => ComplexBox::ENTIRE,
        }
    }
}

impl From<Complex64> for ComplexBox {
    fn from(z: Complex64) -> Self {
        ComplexBox::from_complex(z)
    }
}

pub fn cbox_mul(a: ComplexBox, b: ComplexBox) -> ComplexBox {
    a * b
}

pub fn cbox_inv_pow(z: ComplexBox, k: u32) -> Result<ComplexBox, IntervalError> {
    z.inv_pow(k)
}

pub fn cbox_sqrt_principal(z: ComplexBox) -> Result<ComplexBox, IntervalError> {
    z.sqrt_principal()
}

pub fn cbox_cuberoot_upper(z: ComplexBox) -> Result<ComplexBox, IntervalError> {
    z.cuberoot_upper()
}
