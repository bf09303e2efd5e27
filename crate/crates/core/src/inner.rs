//! The inner Hamiltonian system: the functions `J` and `K`, the vector
//! field, the graph remainder `R` and their partial derivatives.
//!
//! Everything is generic over [`Scalar`], so the same code runs on
//! `Complex64` points and on [`ComplexBox`](crate::cbox::ComplexBox)
//! enclosures. Fractional powers of `U` are integer powers of the single
//! branch value `B = U^(-1/3)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::IntervalError;
use crate::scalar::Scalar;

/// Graph components `(W, X, Y)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InnerState<S> {
    pub w: S,
    pub x: S,
    pub y: S,
}

impl<S: Scalar> InnerState<S> {
    pub fn new(w: S, x: S, y: S) -> Self {
        InnerState { w, x, y }
    }

    pub fn zero() -> Self {
        InnerState {
            w: S::zero(),
            x: S::zero(),
            y: S::zero(),
        }
    }
}

/// `dU/dt` and `dZ/dt` of the inner system.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InnerFieldValue<S> {
    pub du: S,
    pub dz: InnerState<S>,
}

/// Jacobian of `R` with respect to `(W, X, Y)`; `rows[j][k] = d R_j / d Z_k`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RemainderJacobian<S> {
    pub rows: [[S; 3]; 3],
}

/// First and second partials of `J` or `K`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Partials<S> {
    pub u: S,
    pub w: S,
    pub x: S,
    pub y: S,
    pub uw: S,
    pub ux: S,
    pub uy: S,
    pub ww: S,
    pub wx: S,
    pub wy: S,
    pub xx: S,
    pub xy: S,
    pub yy: S,
}

/// Powers `B^k = U^(-k/3)` for k = 1..=9.
#[derive(Clone, Debug)]
pub(crate) struct BranchPowers<S> {
    p: [S; 10],
}

impl<S: Scalar> BranchPowers<S> {
    pub(crate) fn new(u: &S) -> Result<Self, IntervalError> {
        if u.may_vanish() {
            return Err(IntervalError::ZeroInBox);
        }
        let b = u.inv_cbrt()?;
        let mut p: [S; 10] = std::array::from_fn(|_| S::one());
        for k in 1..10 {
            p[k] = p[k - 1].clone() * b.clone();
        }
        Ok(BranchPowers { p })
    }

    /// `U^(-k/3)`.
    #[inline]
    pub(crate) fn b(&self, k: usize) -> S {
        self.p[k].clone()
    }
}

fn c<S: Scalar>(p: i64, q: i64) -> S {
    S::ratio(p, q)
}

fn i_unit<S: Scalar>() -> S {
    S::imag_unit()
}

pub(crate) fn j_with<S: Scalar>(bp: &BranchPowers<S>, z: &InnerState<S>) -> S {
    let InnerState { w, x, y } = z.clone();
    let s = x.clone() + y.clone();
    let d = x.clone() - y.clone();
    c::<S>(4, 9) * w.sqr() * bp.b(2) - c::<S>(16, 27) * w.clone() * bp.b(4)
        + c::<S>(16, 81) * bp.b(6)
        + c::<S>(4, 9) * s * bp.b(3) * (w - c::<S>(2, 3) * bp.b(2))
        - c::<S>(4, 3) * i_unit::<S>() * d * bp.b(2)
        - c::<S>(1, 3) * (x.sqr() + y.sqr()) * bp.b(4)
        + c::<S>(10, 9) * x * y * bp.b(4)
}

pub(crate) fn j_partials_with<S: Scalar>(bp: &BranchPowers<S>, z: &InnerState<S>) -> Partials<S> {
    let InnerState { w, x, y } = z.clone();
    let s = x.clone() + y.clone();
    let d = x.clone() - y.clone();
    let i = i_unit::<S>();
    let u = -c::<S>(8, 27) * w.sqr() * bp.b(5) + c::<S>(64, 81) * w.clone() * bp.b(7)
        - c::<S>(32, 81) * bp.b(9)
        - c::<S>(4, 9) * s.clone() * w.clone() * bp.b(6)
        + c::<S>(40, 81) * s.clone() * bp.b(8)
        + c::<S>(8, 9) * i.clone() * d * bp.b(5)
        + c::<S>(4, 9) * (x.sqr() + y.sqr()) * bp.b(7)
        - c::<S>(40, 27) * x.clone() * y.clone() * bp.b(7);
    let dw = c::<S>(8, 9) * w.clone() * bp.b(2) - c::<S>(16, 27) * bp.b(4) + c::<S>(4, 9) * s.clone() * bp.b(3);
    let common = c::<S>(4, 9) * w.clone() * bp.b(3) - c::<S>(8, 27) * bp.b(5);
    let dx = common.clone() - c::<S>(4, 3) * i.clone() * bp.b(2) - c::<S>(2, 3) * x.clone() * bp.b(4)
        + c::<S>(10, 9) * y.clone() * bp.b(4);
    let dy = common + c::<S>(4, 3) * i.clone() * bp.b(2) - c::<S>(2, 3) * y.clone() * bp.b(4)
        + c::<S>(10, 9) * x.clone() * bp.b(4);
    let uw = -c::<S>(16, 27) * w.clone() * bp.b(5) + c::<S>(64, 81) * bp.b(7) - c::<S>(4, 9) * s * bp.b(6);
    let ucommon = -c::<S>(4, 9) * w * bp.b(6) + c::<S>(40, 81) * bp.b(8);
    let ux = ucommon.clone() + c::<S>(8, 9) * i.clone() * bp.b(5) + c::<S>(8, 9) * x.clone() * bp.b(7)
        - c::<S>(40, 27) * y.clone() * bp.b(7);
    let uy = ucommon - c::<S>(8, 9) * i * bp.b(5) + c::<S>(8, 9) * y * bp.b(7) - c::<S>(40, 27) * x * bp.b(7);
    Partials {
        u,
        w: dw,
        x: dx,
        y: dy,
        uw,
        ux,
        uy,
        ww: c::<S>(8, 9) * bp.b(2),
        wx: c::<S>(4, 9) * bp.b(3),
        wy: c::<S>(4, 9) * bp.b(3),
        xx: -c::<S>(2, 3) * bp.b(4),
        xy: c::<S>(10, 9) * bp.b(4),
        yy: -c::<S>(2, 3) * bp.b(4),
    }
}

/// `J(U, W, X, Y)`.
pub fn eval_j<S: Scalar>(u: &S, z: &InnerState<S>) -> Result<S, IntervalError> {
    let bp = BranchPowers::new(u)?;
    Ok(j_with(&bp, z))
}

/// Gradient and Hessian entries of `J`.
pub fn eval_j_derivs<S: Scalar>(u: &S, z: &InnerState<S>) -> Result<Partials<S>, IntervalError> {
    let bp = BranchPowers::new(u)?;
    Ok(j_partials_with(&bp, z))
}

/// `K(U, Z)`.
pub fn eval_k<S: Scalar>(u: &S, z: &InnerState<S>) -> Result<S, IntervalError> {
    let bp = BranchPowers::new(u)?;
    let j = j_with(&bp, z);
    let root = (S::one() + j).sqrt_principal()?;
    let a = root.checked_recip()?;
    let u23 = bp.b(2).checked_recip()?;
    Ok(-c::<S>(3, 4) * u23 * z.w.sqr() - c::<S>(1, 3) * bp.b(2) * (a - S::one()))
}

/// Hamiltonian `W + XY + K`.
pub fn eval_hamiltonian<S: Scalar>(u: &S, z: &InnerState<S>) -> Result<S, IntervalError> {
    Ok(z.w.clone() + z.x.clone() * z.y.clone() + eval_k(u, z)?)
}

struct KContext<S> {
    bp: BranchPowers<S>,
    j: S,
    dj: Partials<S>,
    root: S,
    a3: S,
    a5: S,
}

impl<S: Scalar> KContext<S> {
    fn new(u: &S, z: &InnerState<S>) -> Result<Self, IntervalError> {
        let bp = BranchPowers::new(u)?;
        let j = j_with(&bp, z);
        let dj = j_partials_with(&bp, z);
        let root = (S::one() + j.clone()).sqrt_principal()?;
        let a = root.checked_recip()?;
        let a2 = a.sqr();
        let a3 = a2.clone() * a.clone();
        let a5 = a3.clone() * a2;
        Ok(KContext { bp, j, dj, root, a3, a5 })
    }
}

/// Partials of `K`; `d_U K` uses the cancellation-free form.
pub fn eval_k_derivs<S: Scalar>(u: &S, z: &InnerState<S>) -> Result<Partials<S>, IntervalError> {
    let ctx = KContext::new(u, z)?;
    k_partials(&ctx, z)
}

/// `d_U K` written directly from the chain rule, with `A - 1` not rearranged.
pub fn dk_du_raw<S: Scalar>(u: &S, z: &InnerState<S>) -> Result<S, IntervalError> {
    let ctx = KContext::new(u, z)?;
    let bp = &ctx.bp;
    let a = ctx.root.checked_recip()?;
    Ok(-c::<S>(1, 2) * z.w.sqr() * bp.b(1) + c::<S>(2, 9) * bp.b(5) * (a - S::one())
        + c::<S>(1, 6) * bp.b(2) * ctx.a3.clone() * ctx.dj.u.clone())
}

fn k_partials<S: Scalar>(ctx: &KContext<S>, z: &InnerState<S>) -> Result<Partials<S>, IntervalError> {
    let bp = &ctx.bp;
    let dj = &ctx.dj;
    let u23 = bp.b(2).checked_recip()?;
    // B^2 A^3 / 6 and B^2 A^5 / 4
    let f3 = c::<S>(1, 6) * bp.b(2) * ctx.a3.clone();
    let f5 = c::<S>(1, 4) * bp.b(2) * ctx.a5.clone();
    let g3 = c::<S>(1, 9) * bp.b(5) * ctx.a3.clone();
    let w = z.w.clone();
    let frac = ctx.j.clone() / (ctx.root.clone() * (S::one() + ctx.root.clone()));
    let u = -c::<S>(1, 2) * w.sqr() * bp.b(1) - c::<S>(2, 9) * bp.b(5) * frac + f3.clone() * dj.u.clone();
    let kw = -c::<S>(3, 2) * u23.clone() * w.clone() + f3.clone() * dj.w.clone();
    let kx = f3.clone() * dj.x.clone();
    let ky = f3.clone() * dj.y.clone();
    let second = |d2: &S, da: &S, db: &S| f3.clone() * d2.clone() - f5.clone() * da.clone() * db.clone();
    let uw = -w * bp.b(1) - g3.clone() * dj.w.clone() + second(&dj.uw, &dj.u, &dj.w);
    let ux = -g3.clone() * dj.x.clone() + second(&dj.ux, &dj.u, &dj.x);
    let uy = -g3 * dj.y.clone() + second(&dj.uy, &dj.u, &dj.y);
    let ww = -c::<S>(3, 2) * u23 + second(&dj.ww, &dj.w, &dj.w);
    Ok(Partials {
        u,
        w: kw,
        x: kx,
        y: ky,
        uw,
        ux,
        uy,
        ww,
        wx: second(&dj.wx, &dj.w, &dj.x),
        wy: second(&dj.wy, &dj.w, &dj.y),
        xx: second(&dj.xx, &dj.x, &dj.x),
        xy: second(&dj.xy, &dj.x, &dj.y),
        yy: second(&dj.yy, &dj.y, &dj.y),
    })
}

/// The inner vector field: `dU = 1 + K_W`, `dZ = diag(0, i, -i) Z + f`.
pub fn eval_field<S: Scalar>(u: &S, z: &InnerState<S>) -> Result<InnerFieldValue<S>, IntervalError> {
    let k = eval_k_derivs(u, z)?;
    Ok(field_from_partials(z, &k))
}

fn field_from_partials<S: Scalar>(z: &InnerState<S>, k: &Partials<S>) -> InnerFieldValue<S> {
    InnerFieldValue {
        du: S::one() + k.w.clone(),
        dz: InnerState {
            w: -k.u.clone(),
            x: (z.x.clone() + k.y.clone()).mul_i(),
            y: -(z.y.clone() + k.x.clone()).mul_i(),
        },
    }
}

fn denominator<S: Scalar>(k: &Partials<S>) -> Result<S, IntervalError> {
    let d = S::one() + k.w.clone();
    if d.may_vanish() {
        return Err(IntervalError::DenominatorVanishes);
    }
    Ok(d)
}

/// Graph remainder `R = (f1, f2 - i X g, f3 + i Y g) / (1 + g)`.
pub fn eval_r<S: Scalar>(u: &S, z: &InnerState<S>) -> Result<InnerState<S>, IntervalError> {
    let k = eval_k_derivs(u, z)?;
    let d = denominator(&k)?;
    let g = k.w.clone();
    Ok(InnerState {
        w: -k.u.clone() / d.clone(),
        x: (k.y.clone() - z.x.clone() * g.clone()).mul_i() / d.clone(),
        y: -(k.x.clone() - z.y.clone() * g).mul_i() / d,
    })
}

/// Quotient-rule Jacobian of `R` with respect to `(W, X, Y)`.
pub fn eval_r_jacobian<S: Scalar>(u: &S, z: &InnerState<S>) -> Result<RemainderJacobian<S>, IntervalError> {
    let k = eval_k_derivs(u, z)?;
    let d = denominator(&k)?;
    let d2 = d.sqr();
    let (x, y) = (z.x.clone(), z.y.clone());
    // second partials indexed by (W, X, Y)
    let k_u = [k.uw.clone(), k.ux.clone(), k.uy.clone()];
    let k_w = [k.ww.clone(), k.wx.clone(), k.wy.clone()];
    let k_x = [k.wx.clone(), k.xx.clone(), k.xy.clone()];
    let k_y = [k.wy.clone(), k.xy.clone(), k.yy.clone()];
    let n2 = k.y.clone() - x.clone() * k.w.clone();
    let n3 = k.x.clone() - y.clone() * k.w.clone();
    let mut rows: [[S; 3]; 3] = std::array::from_fn(|_| std::array::from_fn(|_| S::zero()));
    for v in 0..3 {
        rows[0][v] = -(k_u[v].clone() * d.clone() - k.u.clone() * k_w[v].clone()) / d2.clone();
        let mut t2 = k_y[v].clone() - x.clone() * k_w[v].clone();
        if v == 1 {
            t2 = t2 - k.w.clone();
        }
        rows[1][v] = (t2 * d.clone() - n2.clone() * k_w[v].clone()).mul_i() / d2.clone();
        let mut t3 = k_x[v].clone() - y.clone() * k_w[v].clone();
        if v == 2 {
            t3 = t3 - k.w.clone();
        }
        rows[2][v] = -(t3 * d.clone() - n3.clone() * k_w[v].clone()).mul_i() / d2.clone();
    }
    Ok(RemainderJacobian { rows })
}

/// Leading-order tail approximation of the unstable graph:
/// `W = (8/243) U^(-8/3)`, `X = -(2i/9) U^(-4/3)`, `Y = (2i/9) U^(-4/3)`.
pub fn asymptotic_seed(u: Complex64, eta_star: f64) -> Result<InnerState<Complex64>, IntervalError> {
    if u.re > -eta_star {
        return Err(IntervalError::OutsideTail(u.re, eta_star));
    }
    let bp = BranchPowers::new(&u)?;
    let b4 = bp.b(4);
    Ok(InnerState {
        w: bp.b(8) * (8.0 / 243.0),
        x: b4 * Complex64::new(0.0, -2.0 / 9.0),
        y: b4 * Complex64::new(0.0, 2.0 / 9.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cbox::ComplexBox;

    fn cx(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn j_at_zero_state() {
        let u = cx(0.0, -10.0);
        let j = eval_j(&u, &InnerState::zero()).unwrap();
        assert!((j - cx(-16.0 / 8100.0, 0.0)).norm() < 1e-17);
        let u = cx(-3.0, -4.5);
        let j = eval_j(&u, &InnerState::zero()).unwrap();
        let expect = 16.0 / (81.0 * u * u);
        assert!((j - expect).norm() < 1e-14 * expect.norm());
    }

    #[test]
    fn j_rejects_zero_box() {
        let u = ComplexBox::around(cx(0.0, 0.0), 0.1);
        assert_eq!(eval_j(&u, &InnerState::zero()), Err(IntervalError::ZeroInBox));
    }

    #[test]
    fn constant_hessian_of_j() {
        let u = cx(0.0, -1.0);
        let d = eval_j_derivs(&u, &InnerState::zero()).unwrap();
        // (-i)^(4/3) on the chosen branch: arg 3pi/2 -> U^(-4/3) = e^{-2 pi i}
        let b = inv_cbrt_test(u);
        assert!((d.w - (-16.0 / 27.0) * b.powi(4)).norm() < 1e-15);
        let u = cx(-6.24, 0.0);
        let d = eval_j_derivs(&u, &InnerState::zero()).unwrap();
        assert!((d.ww.norm() - 8.0 / (9.0 * 6.24f64.powf(2.0 / 3.0))).abs() < 1e-15);
    }

    fn inv_cbrt_test(u: Complex64) -> Complex64 {
        Scalar::inv_cbrt(&u).unwrap()
    }

    #[test]
    fn k_partials_at_zero_state() {
        let u = cx(-20.0, -8.0);
        let z = InnerState::zero();
        let k = eval_k_derivs(&u, &z).unwrap();
        let j0 = 16.0 / (81.0 * u * u);
        let s = (1.0 + j0).powf(1.5);
        assert!((k.w - (-j0 / (2.0 * s))).norm() < 1e-16);
        let b = inv_cbrt_test(u);
        let kx = (cx(0.0, -2.0 / 9.0) * b.powi(4) - 4.0 / 81.0 * b.powi(7)) / s;
        assert!((k.x - kx).norm() < 1e-15 * kx.norm());
    }

    #[test]
    fn seed_outside_tail() {
        assert!(asymptotic_seed(cx(-500.0, -7.12), 1000.0).is_err());
        let u = cx(-2000.0, -7.12);
        let s = asymptotic_seed(u, 1000.0).unwrap();
        let m = u.norm();
        assert!((s.w.norm() * m.powf(8.0 / 3.0) - 8.0 / 243.0).abs() < 1e-12);
        assert!((s.x.norm() * m.powf(4.0 / 3.0) - 2.0 / 9.0).abs() < 1e-12);
    }
}
