//! Verified quadrature for the strip-width constant
//! `A = int_0^a 2/(1-x) sqrt(x / (3(x+1)(1-4x-4x^2))) dx`, `a = (sqrt 2 - 1)/2`.
//!
//! The integrand behaves like `sqrt x` at 0 and like `1/sqrt(a-x)` at `a`.
//! The range is split at `a/2`; `x = u^2` on the left and `x = a - w^2` on
//! the right give smooth integrands on `[0, sqrt(a/2)]`. Each piece uses the
//! composite midpoint rule with the error term `h^3/24 f''` enclosed by
//! second-order interval jets over the panel.

use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::error::QuadratureError;
use crate::interval::RealInterval;

type RI = RealInterval;

/// Value and first two derivatives.
#[derive(Clone, Copy, Debug, PartialEq)]
struct Jet {
    v: RI,
    d1: RI,
    d2: RI,
}

impl Jet {
    fn constant(v: RI) -> Self {
        Jet {
            v,
            d1: RI::ZERO,
            d2: RI::ZERO,
        }
    }

    fn variable(v: RI) -> Self {
        Jet {
            v,
            d1: RI::ONE,
            d2: RI::ZERO,
        }
    }

    fn sqrt(self) -> Result<Self, QuadratureError> {
        let s = self.v.sqrt()?;
        if s.lo() <= 0.0 {
            return Err(QuadratureError::QuadratureFailed("sqrt at zero inside a panel".into()));
        }
        let two = RI::point(2.0);
        let d1 = self.d1 / (two * s);
        let d2 = self.d2 / (two * s) - self.d1.sqr() / (RI::point(4.0) * s.powi(3));
        Ok(Jet { v: s, d1, d2 })
    }

    fn recip(self) -> Result<Self, QuadratureError> {
        if self.v.contains_zero() {
            return Err(QuadratureError::QuadratureFailed("pole inside a panel".into()));
        }
        let r = self.v.recip();
        let r2 = r.sqr();
        Ok(Jet {
            v: r,
            d1: -self.d1 * r2,
            d2: RI::point(2.0) * self.d1.sqr() * r2 * r - self.d2 * r2,
        })
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        Jet {
            v: self.v + o.v,
            d1: self.d1 + o.d1,
            d2: self.d2 + o.d2,
        }
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        self + (-o)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        Jet {
            v: -self.v,
            d1: -self.d1,
            d2: -self.d2,
        }
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        Jet {
            v: self.v * o.v,
            d1: self.d1 * o.v + self.v * o.d1,
            d2: self.d2 * o.v + RI::point(2.0) * self.d1 * o.d1 + self.v * o.d2,
        }
    }
}

impl Div for Jet {
    type Output = Result<Jet, QuadratureError>;
    fn div(self, o: Jet) -> Result<Jet, QuadratureError> {
        Ok(self * o.recip()?)
    }
}

fn k(x: f64) -> Jet {
    Jet::constant(RI::point(x))
}

/// Upper limit `(sqrt 2 - 1)/2`.
pub fn upper_limit() -> RI {
    (RI::point(2.0).sqrt().expect("2 > 0") - RI::ONE) / RI::point(2.0)
}

fn lower_root() -> RI {
    -(RI::point(2.0).sqrt().expect("2 > 0") + RI::ONE) / RI::point(2.0)
}

/// `4u^2 / ((1-u^2) sqrt(3(u^2+1)(1-4u^2-4u^4)))`, the integrand after `x = u^2`.
fn left_piece(u: Jet) -> Result<Jet, QuadratureError> {
    let u2 = u * u;
    let q = k(1.0) - k(4.0) * u2 - k(4.0) * u2 * u2;
    let root = (k(3.0) * (u2 + k(1.0)) * q).sqrt()?;
    (k(4.0) * u2) / ((k(1.0) - u2) * root)
}

/// `2 sqrt(x) / ((1-x) sqrt(3(x+1)(x-b)))` with `x = a - w^2`.
fn right_piece(w: Jet, a: RI, b: RI) -> Result<Jet, QuadratureError> {
    let x = Jet::constant(a) - w * w;
    let root = (k(3.0) * (x + k(1.0)) * (x - Jet::constant(b))).sqrt()?;
    (k(2.0) * x.sqrt()?) / ((k(1.0) - x) * root)
}

/// Midpoint rule with enclosed error over `[0, s]`, `s` an interval.
fn integrate<F>(f: F, s: RI, panels: usize) -> Result<RI, QuadratureError>
where
    F: Fn(Jet) -> Result<Jet, QuadratureError>,
{
    let end = s.lo();
    let mut sum = RI::ZERO;
    let mut left = 0.0;
    let h24 = RI::point(24.0);
    for i in 1..=panels {
        let right = if i == panels { end } else { end * i as f64 / panels as f64 };
        let h = RI::point(right) - RI::point(left);
        let m = (RI::point(left) + RI::point(right)) / RI::point(2.0);
        let panel = RI::new(left, right).map_err(|_| QuadratureError::QuadratureFailed("panel".into()))?;
        let at_mid = f(Jet::constant(m))?.v;
        let curv = f(Jet::variable(panel))?.d2;
        sum = sum + h * at_mid + h.powi(3) * curv / h24;
        left = right;
    }
    // the sliver [s.lo, s.hi] where the end point is uncertain
    let sliver = RI::new(s.lo(), s.hi()).expect("ordered");
    let extra = f(Jet::constant(sliver))?.v * RI::new(0.0, s.hi() - s.lo()).expect("ordered");
    let extra = RI::new(extra.lo().min(0.0), extra.hi().max(0.0)).expect("ordered");
    Ok(sum + extra)
}

/// Enclosure of the constant with `panels` panels per piece.
pub fn constant_a(panels: usize) -> Result<RI, QuadratureError> {
    if panels == 0 {
        return Err(QuadratureError::QuadratureFailed("need at least one panel".into()));
    }
    let a = upper_limit();
    let b = lower_root();
    let split = (a / RI::point(2.0)).sqrt()?;
    let left = integrate(left_piece, split, panels)?;
    let right = integrate(|w| right_piece(w, a, b), split, panels)?;
    Ok(left + right)
}

pub const DEFAULT_PANELS: usize = 400;

/// The original integrand (for plotting and sanity checks).
pub fn integrand(x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    2.0 / (1.0 - x) * (x / (3.0 * (x + 1.0) * (1.0 - 4.0 * x - 4.0 * x * x))).sqrt()
}
