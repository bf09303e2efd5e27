//! Time-Taylor coefficients of autonomous ODEs by automatic recurrence.
//!
//! A vector field written against [`Arith`] is recorded once on a tape of
//! elementary operations. The tape is then replayed on any coefficient
//! scalar: `Complex64` for fast stepping, `ComplexBox` for enclosures and
//! [`Dual`] for the derivative of the coefficients with respect to the
//! initial point.

use std::cell::RefCell;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::IntervalError;
use crate::scalar::Arith;

#[derive(Clone, Copy, Debug, PartialEq)]
enum Const {
    Ratio(i64, i64),
    Imag,
    Value(Complex64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Op {
    Var(usize),
    Const(Const),
    Add(usize, usize),
    Sub(usize, usize),
    Mul(usize, usize),
    Div(usize, usize),
    Neg(usize),
    /// `a^k` for a nonzero integer `k`.
    Pow(usize, i32),
}

thread_local! {
    static RECORDING: RefCell<Option<Vec<Op>>> = const { RefCell::new(None) };
}

fn push(op: Op) -> Expr {
    RECORDING.with(|r| {
        let mut r = r.borrow_mut();
        let ops = r.as_mut().expect("Expr used outside Tape::record");
        ops.push(op);
        Expr(ops.len() - 1)
    })
}

/// Handle to a node of the tape currently being recorded.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Expr(usize);

macro_rules! expr_binop {
    ($tr:ident, $f:ident, $op:ident) => {
        impl $tr for Expr {
            type Output = Expr;
            fn $f(self, rhs: Expr) -> Expr {
                push(Op::$op(self.0, rhs.0))
            }
        }
    };
}
expr_binop!(Add, add, Add);
expr_binop!(Sub, sub, Sub);
expr_binop!(Mul, mul, Mul);
expr_binop!(Div, div, Div);

impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        push(Op::Neg(self.0))
    }
}

impl Arith for Expr {
    fn ratio(p: i64, q: i64) -> Self {
        push(Op::Const(Const::Ratio(p, q)))
    }
    fn imag_unit() -> Self {
        push(Op::Const(Const::Imag))
    }
    fn from_complex(z: Complex64) -> Self {
        push(Op::Const(Const::Value(z)))
    }
    fn inv_pow(&self, k: u32) -> Result<Self, IntervalError> {
        Ok(push(Op::Pow(self.0, -(k as i32))))
    }
    fn sqr(&self) -> Self {
        push(Op::Pow(self.0, 2))
    }
}

/// A recorded vector field `x' = f(x)` on `C^dim`.
#[derive(Clone, Debug)]
pub struct Tape {
    ops: Vec<Op>,
    is_const: Vec<bool>,
    outputs: Vec<usize>,
    dim: usize,
}

impl Tape {
    /// Record `f` on `dim` variables.
    pub fn record<F>(dim: usize, f: F) -> Result<Tape, IntervalError>
    where
        F: FnOnce(&[Expr]) -> Result<Vec<Expr>, IntervalError>,
    {
        RECORDING.with(|r| {
            let mut r = r.borrow_mut();
            assert!(r.is_none(), "nested tape recording");
            *r = Some(Vec::new());
        });
        let vars: Vec<Expr> = (0..dim).map(|i| push(Op::Var(i))).collect();
        let out = f(&vars);
        let ops = RECORDING.with(|r| r.borrow_mut().take().expect("recording"));
        let out = out?;
        assert_eq!(out.len(), dim, "field must return one component per variable");
        let mut is_const = Vec::with_capacity(ops.len());
        for op in &ops {
            let c = match *op {
                Op::Var(_) => false,
                Op::Const(_) => true,
                Op::Add(a, b) | Op::Sub(a, b) | Op::Mul(a, b) | Op::Div(a, b) => is_const[a] && is_const[b],
                Op::Neg(a) | Op::Pow(a, _) => is_const[a],
            };
            is_const.push(c);
        }
        Ok(Tape {
            ops,
            is_const,
            outputs: out.iter().map(|e| e.0).collect(),
            dim,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    /// Evaluate the field once.
    pub fn eval<S: Arith>(&self, x: &[S]) -> Result<Vec<S>, IntervalError> {
        let c = self.coefficients(x, 1)?;
        Ok(c.into_iter().map(|mut v| v.swap_remove(1)).collect())
    }

    /// Normalised Taylor coefficients `x_0, ..., x_order` of the solution
    /// through `x0`, per variable.
    pub fn coefficients<S: Arith>(&self, x0: &[S], order: usize) -> Result<Vec<Vec<S>>, IntervalError> {
        assert_eq!(x0.len(), self.dim);
        let n_ops = self.ops.len();
        let mut xs: Vec<Vec<S>> = x0.iter().map(|v| vec![v.clone()]).collect();
        let mut node: Vec<Vec<S>> = vec![Vec::with_capacity(order); n_ops];
        // inverses of zeroth coefficients for Div and Pow nodes
        let mut inv0: Vec<Option<S>> = vec![None; n_ops];
        // node coefficient k feeds solution coefficient k + 1
        for k in 0..order {
            for i in 0..n_ops {
                if self.is_const[i] && k > 0 {
                    continue;
                }
                let v = self.node_coefficient(i, k, &xs, &node, &mut inv0)?;
                node[i].push(v);
            }
            for (var, &o) in self.outputs.iter().enumerate() {
                let fk = coeff(&node[o], k);
                xs[var].push(fk.scale(1, (k + 1) as i64));
            }
        }
        Ok(xs)
    }

    fn node_coefficient<S: Arith>(
        &self,
        i: usize,
        k: usize,
        xs: &[Vec<S>],
        node: &[Vec<S>],
        inv0: &mut [Option<S>],
    ) -> Result<S, IntervalError> {
        let get = |j: usize, m: usize| coeff(&node[j], m);
        Ok(match self.ops[i] {
            Op::Var(v) => xs[v][k].clone(),
            Op::Const(c) => match c {
                Const::Ratio(p, q) => S::ratio(p, q),
                Const::Imag => S::imag_unit(),
                Const::Value(z) => S::from_complex(z),
            },
            Op::Add(a, b) => get(a, k) + get(b, k),
            Op::Sub(a, b) => get(a, k) - get(b, k),
            Op::Neg(a) => -get(a, k),
            Op::Mul(a, b) => {
                if self.is_const[a] {
                    node[a][0].clone() * get(b, k)
                } else if self.is_const[b] {
                    get(a, k) * node[b][0].clone()
                } else {
                    let mut s = get(a, 0) * get(b, k);
                    for j in 1..=k {
                        s = s + get(a, j) * get(b, k - j);
                    }
                    s
                }
            }
            Op::Div(a, b) => {
                if k == 0 {
                    let r = node[b][0].inv_pow(1)?;
                    inv0[i] = Some(r.clone());
                    get(a, 0) * r
                } else {
                    let mut s = get(a, k);
                    if !self.is_const[b] {
                        for j in 1..=k {
                            s = s - get(b, j) * get(i, k - j);
                        }
                    }
                    s * inv0[i].clone().expect("zeroth coefficient")
                }
            }
            Op::Pow(a, e) => {
                if k == 0 {
                    let b0 = node[a][0].clone();
                    if e == 2 {
                        b0.sqr()
                    } else {
                        inv0[i] = Some(b0.inv_pow(1)?);
                        if e < 0 {
                            b0.inv_pow((-e) as u32)?
                        } else {
                            b0.powi(e as u32)
                        }
                    }
                } else if e == 2 {
                    // plain convolution is tighter than the general recurrence
                    let mut s = S::zero();
                    for j in 0..(k + 1) / 2 {
                        s = s + get(a, j) * get(a, k - j);
                    }
                    s = s.scale(2, 1);
                    if k % 2 == 0 {
                        s = s + get(a, k / 2).sqr();
                    }
                    s
                } else {
                    // n b0 q_n = sum_{j=1}^{n} (e j - (n - j)) b_j q_{n-j}
                    let n = k as i64;
                    let mut s = S::zero();
                    for j in 1..=k {
                        let w = e as i64 * j as i64 - (n - j as i64);
                        if w != 0 {
                            s = s + (get(a, j) * get(i, k - j)).scale(w, 1);
                        }
                    }
                    s.scale(1, n) * inv0[i].clone().expect("zeroth coefficient")
                }
            }
        })
    }
}

fn coeff<S: Arith>(v: &[S], k: usize) -> S {
    v.get(k).cloned().unwrap_or_else(S::zero)
}

/// Horner evaluation of `sum c_k t^k`.
pub fn horner<S: Arith>(c: &[S], t: S) -> S {
    let mut acc = c.last().cloned().unwrap_or_else(S::zero);
    for ck in c.iter().rev().skip(1) {
        acc = acc * t.clone() + ck.clone();
    }
    acc
}

/// Value plus gradient with respect to the `n` complex initial coordinates.
/// An empty gradient stands for zero.
#[derive(Clone, Debug, PartialEq)]
pub struct Dual<S> {
    pub v: S,
    pub d: Vec<S>,
}

impl<S: Arith> Dual<S> {
    pub fn constant(v: S) -> Self {
        Dual { v, d: Vec::new() }
    }

    /// The `i`-th of `n` independent variables.
    pub fn variable(v: S, i: usize, n: usize) -> Self {
        let d = (0..n).map(|j| if j == i { S::one() } else { S::zero() }).collect();
        Dual { v, d }
    }

    fn zip(a: &[S], b: &[S], f: impl Fn(S, S) -> S) -> Vec<S> {
        let n = a.len().max(b.len());
        (0..n).map(|j| f(coeff(a, j), coeff(b, j))).collect()
    }

    fn map(&self, f: impl Fn(&S) -> S) -> Vec<S> {
        self.d.iter().map(f).collect()
    }
}

impl<S: Arith> Add for Dual<S> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Dual {
            v: self.v + o.v,
            d: Self::zip(&self.d, &o.d, |a, b| a + b),
        }
    }
}

impl<S: Arith> Sub for Dual<S> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Dual {
            v: self.v - o.v,
            d: Self::zip(&self.d, &o.d, |a, b| a - b),
        }
    }
}

impl<S: Arith> Neg for Dual<S> {
    type Output = Self;
    fn neg(self) -> Self {
        Dual {
            d: self.map(|a| -a.clone()),
            v: -self.v,
        }
    }
}

impl<S: Arith> Mul for Dual<S> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let d = match (self.d.is_empty(), o.d.is_empty()) {
            (true, true) => Vec::new(),
            (false, true) => self.map(|a| a.clone() * o.v.clone()),
            (true, false) => o.map(|b| self.v.clone() * b.clone()),
            (false, false) => Self::zip(&self.d, &o.d, |a, b| a * o.v.clone() + self.v.clone() * b),
        };
        Dual { v: self.v * o.v, d }
    }
}

impl<S: Arith> Div for Dual<S> {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        let r = Dual {
            v: S::one() / o.v.clone(),
            d: o.map(|b| -(b.clone() / (o.v.clone() * o.v.clone()))),
        };
        self * r
    }
}

impl<S: Arith> Arith for Dual<S> {
    fn ratio(p: i64, q: i64) -> Self {
        Dual::constant(S::ratio(p, q))
    }
    fn imag_unit() -> Self {
        Dual::constant(S::imag_unit())
    }
    fn from_complex(z: Complex64) -> Self {
        Dual::constant(S::from_complex(z))
    }
    fn inv_pow(&self, k: u32) -> Result<Self, IntervalError> {
        let q = self.v.inv_pow(k)?;
        let r = self.v.inv_pow(1)?;
        let f = -(q.clone() * r).scale(k as i64, 1);
        Ok(Dual {
            d: self.map(|a| a.clone() * f.clone()),
            v: q,
        })
    }
    fn scale(&self, p: i64, q: i64) -> Self {
        Dual {
            v: self.v.scale(p, q),
            d: self.map(|a| a.scale(p, q)),
        }
    }
    fn mul_i(&self) -> Self {
        Dual {
            v: self.v.mul_i(),
            d: self.map(|a| a.mul_i()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cbox::ComplexBox;

    fn cx(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn exponential_series() {
        let lam = cx(0.3, -1.1);
        let tape = Tape::record(1, |v| Ok(vec![Expr::from_complex(lam) * v[0]])).unwrap();
        let z0 = cx(0.7, 0.2);
        let c = tape.coefficients(&[z0], 12).unwrap();
        assert_eq!(c[0].len(), 13);
        let mut expect = z0;
        for (k, ck) in c[0].iter().enumerate() {
            assert!((ck - expect).norm() < 1e-15, "k={k}");
            expect = expect * lam / (k as f64 + 1.0);
        }
    }

    #[test]
    fn reciprocal_power_series() {
        // x' = x^2 gives x = x0/(1 - x0 t), coefficients x0^(k+1)
        let tape = Tape::record(1, |v| Ok(vec![v[0].sqr()])).unwrap();
        let c = tape.coefficients(&[cx(0.5, 0.0)], 10).unwrap();
        for (k, ck) in c[0].iter().enumerate() {
            assert!((ck.re - 0.5f64.powi(k as i32 + 1)).abs() < 1e-16);
        }
        // x' = x^-2 gives x = (x0^3 + 3t)^(1/3)
        let tape = Tape::record(1, |v| Ok(vec![v[0].inv_pow(2)?])).unwrap();
        let x0 = 1.3f64;
        let c = tape.coefficients(&[cx(x0, 0.0)], 14).unwrap();
        let t = 0.05;
        let sum = horner(&c[0], cx(t, 0.0));
        assert!((sum.re - (x0.powi(3) + 3.0 * t).cbrt()).abs() < 1e-14);
    }

    #[test]
    fn division_series() {
        // x' = 1/(1+x) gives (1+x)^2 = (1+x0)^2 + 2t
        let tape = Tape::record(1, |v| Ok(vec![Expr::one() / (Expr::one() + v[0])])).unwrap();
        let c = tape.coefficients(&[cx(0.0, 0.0)], 20).unwrap();
        let t = 0.1;
        let sum = horner(&c[0], cx(t, 0.0));
        assert!((sum.re - ((1.0 + 2.0 * t).sqrt() - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn dual_gradient() {
        let tape = Tape::record(2, |v| Ok(vec![v[1], -v[0]])).unwrap();
        let x0 = [Dual::variable(cx(1.0, 0.0), 0, 2), Dual::variable(cx(0.0, 0.0), 1, 2)];
        let c = tape.coefficients(&x0, 25).unwrap();
        let t = cx(0.7, 0.0);
        let x = horner(&c[0], Dual::constant(t));
        // x(t) = x0 cos t + y0 sin t
        assert!((x.v.re - 0.7f64.cos()).abs() < 1e-15);
        assert!((x.d[0].re - 0.7f64.cos()).abs() < 1e-15);
        assert!((x.d[1].re - 0.7f64.sin()).abs() < 1e-15);
    }

    #[test]
    fn box_coefficients_contain_points() {
        let tape = Tape::record(1, |v| Ok(vec![v[0].inv_pow(3)? + v[0] * v[0]])).unwrap();
        let z = cx(0.8, -0.4);
        let cp = tape.coefficients(&[z], 8).unwrap();
        let cb = tape.coefficients(&[ComplexBox::around(z, 1e-12)], 8).unwrap();
        for (p, b) in cp[0].iter().zip(&cb[0]) {
            assert!(b.contains(*p));
        }
    }
}
