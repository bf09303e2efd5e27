//! Taylor integration of recorded vector fields and crossing of the
//! section `{Re U = 0}`.
//!
//! Fast mode steps a point with the local error controlled by the last two
//! Taylor coefficients. The rigorous mode lives in [`crate::lohner`].

use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cbox::ComplexBox;
use crate::error::IntegratorError;
use crate::extended::{eval_f_generic, EXT_DIM, IDX_U};
use crate::interval::RealInterval;
use crate::scalar::Arith;
use crate::taylor::{horner, Expr, Tape};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Fast,
    Rigorous,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub order: usize,
    pub h_init: f64,
    pub h_min: f64,
    pub h_max: f64,
    pub tol: f64,
    pub mode: Mode,
    pub max_steps: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            order: 20,
            h_init: 0.5,
            h_min: 1e-8,
            h_max: 1.0,
            tol: 1e-16,
            mode: Mode::Fast,
            max_steps: 100_000,
        }
    }
}

impl IntegratorConfig {
    /// Fixed step `h` at the given order.
    pub fn fixed(order: usize, h: f64, mode: Mode) -> Self {
        IntegratorConfig {
            order,
            h_init: h,
            h_min: h,
            h_max: h,
            mode,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<(), IntegratorError> {
        let bad = |m: &str| Err(IntegratorError::InvalidConfig(m.to_string()));
        if self.order < 2 {
            return bad("order must be at least 2");
        }
        if !(self.h_min > 0.0 && self.h_min <= self.h_init && self.h_init <= self.h_max) {
            return bad("need 0 < h_min <= h_init <= h_max");
        }
        if !(self.tol > 0.0) {
            return bad("tol must be positive");
        }
        if self.max_steps == 0 {
            return bad("max_steps must be positive");
        }
        Ok(())
    }
}

/// An autonomous complex ODE with the section `{Re x[section_var] = 0}`.
#[derive(Clone, Debug)]
pub struct OdeSystem {
    pub tape: Tape,
    pub section_var: usize,
    pub names: Vec<String>,
}

impl OdeSystem {
    /// The extended inner system on `(U, W, X, Y, A, B)`.
    pub fn extended() -> Self {
        let tape = Tape::record(EXT_DIM, |v| Ok(eval_f_generic::<Expr>(v)?.to_vec())).expect("tape");
        OdeSystem {
            tape,
            section_var: IDX_U,
            names: ["U", "W", "X", "Y", "A", "B"].iter().map(|s| s.to_string()).collect(),
        }
    }

    /// `x' = M x`.
    pub fn linear(m: &[Vec<Complex64>]) -> Self {
        let n = m.len();
        let tape = Tape::record(n, |v| {
            Ok(m.iter()
                .map(|row| {
                    row.iter()
                        .zip(v)
                        .filter(|(a, _)| **a != Complex64::new(0.0, 0.0))
                        .fold(Expr::zero(), |acc, (a, x)| acc + Expr::from_complex(*a) * *x)
                })
                .collect())
        })
        .expect("tape");
        OdeSystem {
            tape,
            section_var: 0,
            names: (0..n).map(|i| format!("z{i}")).collect(),
        }
    }

    /// `x_0' = 1`, every other component frozen.
    pub fn drift(dim: usize) -> Self {
        let tape = Tape::record(dim, |_| {
            Ok((0..dim).map(|i| if i == 0 { Expr::one() } else { Expr::zero() }).collect())
        })
        .expect("tape");
        OdeSystem {
            tape,
            section_var: 0,
            names: (0..dim).map(|i| format!("z{i}")).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.tape.dim()
    }
}

/// Keep `Im x[section_var] < -rho0` along the whole run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DomainGuard {
    pub rho0: f64,
}

impl DomainGuard {
    pub fn check(&self, t: f64, im_hi: f64) -> Result<(), IntegratorError> {
        if im_hi < -self.rho0 {
            Ok(())
        } else {
            Err(IntegratorError::DomainGuardViolated {
                t,
                im_u_hi: im_hi,
                rho0: self.rho0,
            })
        }
    }
}

/// One accepted step of a trajectory; `widths` is empty in fast mode.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryRecord {
    pub t: f64,
    pub mid: Vec<Complex64>,
    pub widths: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SectionCrossing {
    pub t_cross: RealInterval,
    /// Enclosure of the full state at the crossing; the section component
    /// has a real part containing 0.
    pub state: Vec<ComplexBox>,
    pub u_at_section: ComplexBox,
    pub z_at_section: [ComplexBox; 3],
    pub re_y_interval: RealInterval,
    /// Witnesses strictly before and strictly after the section.
    pub before: Vec<ComplexBox>,
    pub after: Vec<ComplexBox>,
}

impl SectionCrossing {
    pub(crate) fn from_state(
        sys: &OdeSystem,
        t_cross: RealInterval,
        mut state: Vec<ComplexBox>,
        before: Vec<ComplexBox>,
        after: Vec<ComplexBox>,
    ) -> Self {
        let s = sys.section_var;
        state[s].re = state[s].re.hull(&RealInterval::ZERO);
        let pick = |i: usize| state.get(i).copied().unwrap_or(ComplexBox::ZERO);
        SectionCrossing {
            t_cross,
            u_at_section: state[s],
            z_at_section: [pick(1), pick(2), pick(3)],
            re_y_interval: pick(3).re,
            state,
            before,
            after,
        }
    }

    pub fn im_u(&self) -> RealInterval {
        self.u_at_section.im
    }
}

fn sup_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.re.abs().max(z.im.abs())).fold(0.0, f64::max)
}

/// Step from the last two coefficients so that their contribution stays
/// below `tol`, clamped to `[h_min, h_max]`.
pub(crate) fn step_from_coefficients(coeffs: &[Vec<Complex64>], cfg: &IntegratorConfig) -> f64 {
    let p = cfg.order;
    let mut h = cfg.h_max;
    for k in [p - 1, p] {
        let ck: Vec<Complex64> = coeffs.iter().map(|c| c[k]).collect();
        let n = sup_norm(&ck);
        if n > 0.0 {
            h = h.min((cfg.tol / n).powf(1.0 / k as f64));
        }
    }
    h.max(cfg.h_min)
}

fn eval_at(coeffs: &[Vec<Complex64>], t: f64) -> Vec<Complex64> {
    coeffs.iter().map(|c| horner(c, Complex64::new(t, 0.0))).collect()
}

/// Point integrator in fast mode.
pub struct FastIntegrator<'a> {
    pub sys: &'a OdeSystem,
    pub cfg: IntegratorConfig,
    pub t: f64,
    pub x: Vec<Complex64>,
    pub steps: usize,
}

impl<'a> FastIntegrator<'a> {
    pub fn new(sys: &'a OdeSystem, cfg: IntegratorConfig, x0: Vec<Complex64>) -> Result<Self, IntegratorError> {
        cfg.validate()?;
        assert_eq!(x0.len(), sys.dim());
        Ok(FastIntegrator {
            sys,
            cfg,
            t: 0.0,
            x: x0,
            steps: 0,
        })
    }

    fn coefficients(&self) -> Result<Vec<Vec<Complex64>>, IntegratorError> {
        Ok(self.sys.tape.coefficients(&self.x, self.cfg.order)?)
    }

    /// One step of at most `h_cap`; returns the coefficients and the step.
    pub fn step_capped(&mut self, h_cap: f64) -> Result<(Vec<Vec<Complex64>>, f64), IntegratorError> {
        if self.steps >= self.cfg.max_steps {
            return Err(IntegratorError::MaxStepsExceeded);
        }
        let c = self.coefficients()?;
        let h = step_from_coefficients(&c, &self.cfg).min(h_cap);
        self.x = eval_at(&c, h);
        self.t += h;
        self.steps += 1;
        Ok((c, h))
    }

    /// Advance to time `t_end`, landing on it exactly.
    pub fn advance_to(&mut self, t_end: f64) -> Result<(), IntegratorError> {
        while self.t < t_end {
            let rest = t_end - self.t;
            self.step_capped(rest)?;
            if t_end - self.t < 1e-15 * t_end.abs().max(1.0) {
                self.t = t_end;
            }
        }
        Ok(())
    }

    /// Integrate to the section, optionally guarding the domain and
    /// recording every accepted step.
    pub fn to_section(
        &mut self,
        guard: Option<DomainGuard>,
        mut record: Option<&mut Vec<TrajectoryRecord>>,
    ) -> Result<SectionCrossing, IntegratorError> {
        let s = self.sys.section_var;
        if self.x[s].re >= 0.0 {
            return Err(IntegratorError::InvalidConfig("initial point not before the section".into()));
        }
        let push = |rec: &mut Option<&mut Vec<TrajectoryRecord>>, t: f64, x: &[Complex64]| {
            if let Some(r) = rec.as_deref_mut() {
                r.push(TrajectoryRecord {
                    t,
                    mid: x.to_vec(),
                    widths: Vec::new(),
                });
            }
        };
        push(&mut record, self.t, &self.x);
        loop {
            if let Some(g) = guard {
                g.check(self.t, self.x[s].im)?;
            }
            let before = self.x.clone();
            let t0 = self.t;
            let (c, h) = self.step_capped(f64::INFINITY).map_err(|e| match e {
                IntegratorError::MaxStepsExceeded => IntegratorError::NoCrossing,
                e => e,
            })?;
            push(&mut record, self.t, &self.x);
            if self.x[s].re >= 0.0 {
                let tau = bisect_root(|t| horner(&c[s], Complex64::new(t, 0.0)).re, 0.0, h);
                let at = eval_at(&c, tau);
                if self.x[s].re == 0.0 {
                    // landed on the section: step once more for the witness
                    self.step_capped(f64::INFINITY)?;
                    push(&mut record, self.t, &self.x);
                }
                if let Some(g) = guard {
                    g.check(t0 + tau, at[s].im)?;
                }
                let boxes = |v: &[Complex64]| v.iter().map(|z| ComplexBox::from_complex(*z)).collect::<Vec<_>>();
                return Ok(SectionCrossing::from_state(
                    self.sys,
                    RealInterval::point(t0 + tau),
                    boxes(&at),
                    boxes(&before),
                    boxes(&self.x),
                ));
            }
        }
    }
}

/// Root of an increasing function with `f(a) < 0 < f(b)`.
fn bisect_root(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        if f(m) < 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    // one Newton-free secant polish
    let (fa, fb) = (f(a), f(b));
    if fb != fa {
        (a - fa * (b - a) / (fb - fa)).clamp(a, b)
    } else {
        a
    }
}

/// Comma-separated trajectory dump with a header row.
pub fn write_trajectory_csv<W: Write>(
    out: &mut W,
    names: &[String],
    records: &[TrajectoryRecord],
) -> std::io::Result<()> {
    let with_widths = records.iter().any(|r| !r.widths.is_empty());
    let mut header = vec!["t".to_string()];
    for n in names {
        header.push(format!("re_{n}"));
        header.push(format!("im_{n}"));
    }
    if with_widths {
        for n in names {
            header.push(format!("w_{n}"));
        }
    }
    writeln!(out, "{}", header.join(","))?;
    for r in records {
        let mut row = vec![format!("{:.17e}", r.t)];
        for z in &r.mid {
            row.push(format!("{:.17e}", z.re));
            row.push(format!("{:.17e}", z.im));
        }
        if with_widths {
            for w in &r.widths {
                row.push(format!("{w:.6e}"));
            }
        }
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}
