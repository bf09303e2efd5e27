//! The inner system written in the extended variables
//! `A = (1 + J)^(-1/2)` and `B = U^(-1/3)`, which makes the vector field
//! rational with no branch functions left.
//!
//! `eval_f_generic` only needs field operations, so it is also what gets
//! recorded on the Taylor tape.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::IntervalError;
use crate::inner::{eval_j, InnerState};
use crate::interval::RealInterval;
use crate::scalar::{Arith, Scalar};

pub const EXT_DIM: usize = 6;
pub const IDX_U: usize = 0;
pub const IDX_W: usize = 1;
pub const IDX_X: usize = 2;
pub const IDX_Y: usize = 3;
pub const IDX_A: usize = 4;
pub const IDX_B: usize = 5;

/// `(U, W, X, Y, A, B)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtendedState<S> {
    pub u: S,
    pub w: S,
    pub x: S,
    pub y: S,
    pub a: S,
    pub b: S,
}

/// Time derivative of an [`ExtendedState`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtendedDerivative<S> {
    pub du: S,
    pub dw: S,
    pub dx: S,
    pub dy: S,
    pub da: S,
    pub db: S,
}

impl<S: Clone> ExtendedState<S> {
    pub fn to_array(&self) -> [S; EXT_DIM] {
        [
            self.u.clone(),
            self.w.clone(),
            self.x.clone(),
            self.y.clone(),
            self.a.clone(),
            self.b.clone(),
        ]
    }

    pub fn from_slice(v: &[S]) -> Self {
        assert_eq!(v.len(), EXT_DIM);
        ExtendedState {
            u: v[0].clone(),
            w: v[1].clone(),
            x: v[2].clone(),
            y: v[3].clone(),
            a: v[4].clone(),
            b: v[5].clone(),
        }
    }

    pub fn inner(&self) -> InnerState<S> {
        InnerState {
            w: self.w.clone(),
            x: self.x.clone(),
            y: self.y.clone(),
        }
    }
}

impl<S: Clone> ExtendedDerivative<S> {
    pub fn to_array(&self) -> [S; EXT_DIM] {
        [
            self.du.clone(),
            self.dw.clone(),
            self.dx.clone(),
            self.dy.clone(),
            self.da.clone(),
            self.db.clone(),
        ]
    }

    fn from_array(v: [S; EXT_DIM]) -> Self {
        let [du, dw, dx, dy, da, db] = v;
        ExtendedDerivative { du, dw, dx, dy, da, db }
    }
}

fn c<T: Arith>(p: i64, q: i64) -> T {
    T::ratio(p, q)
}

/// `J` with every `U^(-k/3)` replaced by `B^k`.
pub fn eval_jtilde<T: Arith>(w: &T, x: &T, y: &T, b: &T) -> T {
    let b2 = b.sqr();
    let b3 = b2.clone() * b.clone();
    let b4 = b2.sqr();
    let b6 = b3.sqr();
    let s = x.clone() + y.clone();
    let d = x.clone() - y.clone();
    c::<T>(4, 9) * w.sqr() * b2.clone() - c::<T>(16, 27) * w.clone() * b4.clone()
        + c::<T>(16, 81) * b6
        + c::<T>(4, 9) * s * b3 * (w.clone() - c::<T>(2, 3) * b2.clone())
        - c::<T>(4, 3) * d.mul_i() * b2
        - c::<T>(1, 3) * (x.sqr() + y.sqr()) * b4.clone()
        + c::<T>(10, 9) * x.clone() * y.clone() * b4
}

/// `(d_W, d_X, d_Y, d_B)` of the extended `J`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JtildeGrad<T> {
    pub w: T,
    pub x: T,
    pub y: T,
    pub b: T,
}

pub fn eval_jtilde_grad<T: Arith>(w: &T, x: &T, y: &T, b: &T) -> JtildeGrad<T> {
    let b2 = b.sqr();
    let b3 = b2.clone() * b.clone();
    let b4 = b2.sqr();
    let b5 = b4.clone() * b.clone();
    let s = x.clone() + y.clone();
    let d = x.clone() - y.clone();
    let dw = c::<T>(8, 9) * w.clone() * b2.clone() - c::<T>(16, 27) * b4.clone()
        + c::<T>(4, 9) * s.clone() * b3.clone();
    let common = c::<T>(4, 9) * b3.clone() * (w.clone() - c::<T>(2, 3) * b2.clone());
    let ib2 = c::<T>(4, 3) * b2.mul_i();
    let dx = common.clone() - ib2.clone() - c::<T>(2, 3) * x.clone() * b4.clone()
        + c::<T>(10, 9) * y.clone() * b4.clone();
    let dy = common + ib2 - c::<T>(2, 3) * y.clone() * b4.clone() + c::<T>(10, 9) * x.clone() * b4.clone();
    let db = c::<T>(8, 9) * w.sqr() * b.clone() - c::<T>(64, 27) * w.clone() * b3.clone()
        + c::<T>(32, 27) * b5
        + c::<T>(4, 3) * s.clone() * b2 * w.clone()
        - c::<T>(40, 27) * s * b4
        - c::<T>(8, 3) * d.mul_i() * b.clone()
        - c::<T>(4, 3) * (x.sqr() + y.sqr()) * b3.clone()
        + c::<T>(40, 9) * x.clone() * y.clone() * b3;
    JtildeGrad { w: dw, x: dx, y: dy, b: db }
}

/// `K~ = -(3/4) W^2 / B^2 - (1/3) B^2 (A - 1)`.
pub fn eval_ktilde<T: Arith>(w: &T, a: &T, b: &T) -> Result<T, IntervalError> {
    let ib2 = b.inv_pow(2)?;
    Ok(-c::<T>(3, 4) * w.sqr() * ib2 - c::<T>(1, 3) * b.sqr() * (a.clone() - T::one()))
}

/// `(d_W, d_A, d_B)` of `K~`.
pub fn eval_ktilde_grad<T: Arith>(w: &T, a: &T, b: &T) -> Result<(T, T, T), IntervalError> {
    let ib2 = b.inv_pow(2)?;
    let ib3 = b.inv_pow(3)?;
    let kw = -c::<T>(3, 2) * w.clone() * ib2;
    let ka = -c::<T>(1, 3) * b.sqr();
    let kb = c::<T>(3, 2) * w.sqr() * ib3 - c::<T>(2, 3) * b.clone() * (a.clone() - T::one());
    Ok((kw, ka, kb))
}

/// The extended vector field on `[U, W, X, Y, A, B]`. `U` is never read.
pub fn eval_f_generic<T: Arith>(s: &[T]) -> Result<[T; EXT_DIM], IntervalError> {
    let (w, x, y, a, b) = (&s[IDX_W], &s[IDX_X], &s[IDX_Y], &s[IDX_A], &s[IDX_B]);
    let g = eval_jtilde_grad(w, x, y, b);
    let (kw, ka, kb) = eval_ktilde_grad(w, a, b)?;
    // dA/dv = -(1/2) A^3 dJ/dv
    let ha3 = -c::<T>(1, 2) * a.sqr() * a.clone();
    let a_w = ha3.clone() * g.w;
    let a_x = ha3.clone() * g.x;
    let a_y = ha3.clone() * g.y;
    let a_b = ha3 * g.b;
    let b_u = -c::<T>(1, 3) * b.sqr().sqr();
    let a_u = a_b.clone() * b_u.clone();
    let du = T::one() + kw + ka.clone() * a_w.clone();
    let dw = -(kb * b_u.clone() + ka.clone() * a_u);
    let dx = (x.clone() + ka.clone() * a_y.clone()).mul_i();
    let dy = -(y.clone() + ka * a_x.clone()).mul_i();
    let db = b_u * du.clone();
    let da = a_w * dw.clone() + a_x * dx.clone() + a_y * dy.clone() + a_b * db.clone();
    Ok([du, dw, dx, dy, da, db])
}

pub fn eval_f<S: Arith>(s: &ExtendedState<S>) -> Result<ExtendedDerivative<S>, IntervalError> {
    Ok(ExtendedDerivative::from_array(eval_f_generic(&s.to_array())?))
}

/// Attach `A` and `B` to a point of the inner phase space.
pub fn lift<S: Scalar>(u: &S, z: &InnerState<S>) -> Result<ExtendedState<S>, IntervalError> {
    let j = eval_j(u, z)?;
    let a = (S::one() + j).sqrt_principal()?.checked_recip()?;
    let b = u.inv_cbrt()?;
    Ok(ExtendedState {
        u: u.clone(),
        w: z.w.clone(),
        x: z.x.clone(),
        y: z.y.clone(),
        a,
        b,
    })
}

/// `(|A^2 (1 + J~) - 1|, |B^3 U - 1|)` at a point.
pub fn constraint_defects(s: &ExtendedState<Complex64>) -> (f64, f64) {
    let j = eval_jtilde(&s.w, &s.x, &s.y, &s.b);
    let da = (s.a * s.a * (1.0 + j) - 1.0).norm();
    let db = (s.b * s.b * s.b * s.u - 1.0).norm();
    (da, db)
}

/// The reversing symmetry `(U, W, X, Y, A, B) -> (-conj U, conj W, -conj X, -conj Y, conj A, -conj B)`.
pub fn apply_s<S: Scalar>(s: &ExtendedState<S>) -> ExtendedState<S> {
    ExtendedState {
        u: -s.u.conj(),
        w: s.w.conj(),
        x: -s.x.conj(),
        y: -s.y.conj(),
        a: s.a.conj(),
        b: -s.b.conj(),
    }
}

/// The same map on a derivative vector.
pub fn apply_s_derivative<S: Scalar>(d: &ExtendedDerivative<S>) -> ExtendedDerivative<S> {
    ExtendedDerivative {
        du: -d.du.conj(),
        dw: d.dw.conj(),
        dx: -d.dx.conj(),
        dy: -d.dy.conj(),
        da: d.da.conj(),
        db: -d.db.conj(),
    }
}

/// From the unstable `Y` at `U = -i rho`, the difference `Y^u - Y^s = 2 Re Y^u`
/// and the lower bound `|2 Re Y^u|` on the splitting there.
pub fn stable_from_unstable(yu: Complex64) -> (Complex64, f64) {
    let d = 2.0 * yu.re;
    (Complex64::new(d, 0.0), d.abs())
}

/// Rigorous lower bound on `|2 Re Y^u|` from an enclosure of `Re Y^u`.
pub fn splitting_lower_bound(re_y: RealInterval) -> f64 {
    (re_y * RealInterval::point(2.0)).mig()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cbox::ComplexBox;
    use crate::inner::{eval_field, eval_k};

    fn cx(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn lift_at_zero_state() {
        let u = cx(-2000.0, -7.12);
        let s = lift(&u, &InnerState::zero()).unwrap();
        assert!((s.a - 1.0).norm() < 1e-7);
        assert!((s.b.norm() - u.norm().powf(-1.0 / 3.0)).abs() < 1e-16);
        let ub = ComplexBox::from_complex(u);
        let sb = lift(&ub, &InnerState::zero()).unwrap();
        assert!(sb.b.inv_pow(3).unwrap().contains(u));
    }

    #[test]
    fn ktilde_trivia() {
        let b = cx(0.3, -0.1);
        assert_eq!(eval_ktilde(&cx(0.0, 0.0), &cx(1.0, 0.0), &b).unwrap(), cx(0.0, 0.0));
        let (_, ka, _) = eval_ktilde_grad(&cx(0.1, 0.0), &cx(0.9, 0.1), &b).unwrap();
        assert!((ka + b * b / 3.0).norm() < 1e-17);
    }

    #[test]
    fn k_matches_inner() {
        let u = cx(-15.0, -8.0);
        let z = InnerState::new(cx(0.01, 0.02), cx(-0.03, 0.01), cx(0.02, 0.04));
        let s = lift(&u, &z).unwrap();
        let kt = eval_ktilde(&s.w, &s.a, &s.b).unwrap();
        let k = eval_k(&u, &z).unwrap();
        assert!((kt - k).norm() < 1e-14);
    }

    #[test]
    fn field_matches_inner() {
        let u = cx(-9.0, -7.5);
        let z = InnerState::new(cx(0.001, -0.002), cx(0.003, 0.01), cx(-0.02, 0.005));
        let s = lift(&u, &z).unwrap();
        let f = eval_f(&s).unwrap();
        let g = eval_field(&u, &z).unwrap();
        for (p, q) in [(f.du, g.du), (f.dw, g.dz.w), (f.dx, g.dz.x), (f.dy, g.dz.y)] {
            assert!((p - q).norm() <= 1e-13 * q.norm().max(1e-3), "{p} vs {q}");
        }
    }

    #[test]
    fn symmetry_at_fixed_point() {
        // U = -i rho, W real, X, Y imaginary, A real, B purely imaginary
        let u = cx(0.0, -7.0);
        let z = InnerState::new(cx(1e-3, 0.0), cx(0.0, 2e-3), cx(0.0, -1e-3));
        let s = lift(&u, &z).unwrap();
        let p = apply_s(&s);
        for (l, r) in s.to_array().iter().zip(p.to_array()) {
            assert!((l - r).norm() < 1e-15);
        }
        let f = eval_f(&s).unwrap();
        let sf = apply_s_derivative(&f);
        for (l, r) in f.to_array().iter().zip(sf.to_array()) {
            assert!((l + r).norm() < 1e-13);
        }
    }

    #[test]
    fn splitting_bounds() {
        assert_eq!(stable_from_unstable(cx(0.0, 0.3)), (cx(0.0, 0.0), 0.0));
        let (_, lb) = stable_from_unstable(cx(-0.000625, 0.2));
        assert!((lb - 0.00125).abs() < 1e-18);
        let r = RealInterval::new(-0.00075, -0.0005).unwrap();
        assert_eq!(splitting_lower_bound(r), 0.001);
    }
}
