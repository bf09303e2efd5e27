//! From the certified tail to the splitting at the imaginary axis:
//! the initial box, crossings of `{Re U = 0}`, the estimate of the Stokes
//! constant and the rigorous leg check.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cbox::ComplexBox;
use crate::certificate::{
    scan_rho2, CertificateReport, DomainSpec, B1_TILDE_MAX, B2_TILDE_MAX, GAMMA_STAR, KAPPA_STAR,
};
use crate::error::StokesError;
use crate::extended::{lift, splitting_lower_bound, stable_from_unstable, IDX_U};
use crate::inner::{asymptotic_seed, InnerState};
use crate::integrator::{DomainGuard, FastIntegrator, IntegratorConfig, OdeSystem, SectionCrossing, TrajectoryRecord};
use crate::interval::RealInterval;
use crate::lohner::{FlowEnclosure, RigorousIntegrator};

pub const DEFAULT_RE_U0: f64 = -2000.0;
pub const DEFAULT_RHO0: f64 = 7.12;
/// Starting depth for integrations guarded by `Im U < -DEFAULT_RHO0`.
pub const DEFAULT_START_RHO: f64 = 7.2;

/// Box of extended states around `U0 = re_u0 - i rho0` that contains the
/// unstable graph, built from a tail certificate.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InitialSet {
    pub u0: [f64; 2],
    pub eta_star: f64,
    pub rho0: f64,
    pub b1_tilde: RealInterval,
    pub b2_tilde: RealInterval,
    pub w_radius: f64,
    pub xy_radius: f64,
    pub boxes: Vec<ComplexBox>,
    pub certificate: CertificateReport,
}

impl InitialSet {
    pub fn u0(&self) -> Complex64 {
        Complex64::new(self.u0[0], self.u0[1])
    }

    /// Consistent point at the centre of the box (`Z = 0`).
    pub fn midpoint_state(&self) -> Result<Vec<Complex64>, StokesError> {
        Ok(lift(&self.u0(), &InnerState::zero())?.to_array().to_vec())
    }

    /// Consistent point with `U = U0` and `Z = (W, X, Y)` given in units of
    /// the box radii, so each real coordinate of `unit` lies in [-1, 1].
    pub fn point_at(&self, unit: [f64; 6]) -> Result<Vec<Complex64>, StokesError> {
        let (rw, rz) = (self.w_radius, self.xy_radius);
        let z = InnerState::new(
            Complex64::new(unit[0] * rw, unit[1] * rw),
            Complex64::new(unit[2] * rz, unit[3] * rz),
            Complex64::new(unit[4] * rz, unit[5] * rz),
        );
        Ok(lift(&self.u0(), &z)?.to_array().to_vec())
    }

    /// The centre and the 64 corners of the box.
    pub fn probe_points(&self) -> Result<Vec<Vec<Complex64>>, StokesError> {
        let mut out = vec![self.midpoint_state()?];
        for k in 0..64u32 {
            let c: [f64; 6] = std::array::from_fn(|j| if (k >> j) & 1 == 1 { 1.0 } else { -1.0 });
            out.push(self.point_at(c)?);
        }
        Ok(out)
    }
}

fn square(r: f64) -> ComplexBox {
    ComplexBox::new(RealInterval::symmetric(r), RealInterval::symmetric(r))
}

/// `|U|^(-p/3)` upper bound.
fn neg_third_power_hi(u: Complex64, p: u32) -> RealInterval {
    let m = ComplexBox::from_complex(u).abs();
    let c = m.cbrt();
    c.powi(p).recip()
}

pub fn initial_set(eta_star: f64, rho0: f64, re_u0: f64) -> Result<InitialSet, StokesError> {
    if re_u0 > -eta_star {
        return Err(StokesError::NotCertified(format!(
            "Re U0 = {re_u0} lies outside the tail domain Re U <= -{eta_star}"
        )));
    }
    let dom = DomainSpec::new(KAPPA_STAR, GAMMA_STAR)?;
    if rho0 < dom.rho_reach.hi() {
        return Err(StokesError::NotCertified(format!(
            "rho0 = {rho0} below the sector reach {}",
            dom.rho_reach.hi()
        )));
    }
    let rep = scan_rho2(KAPPA_STAR, GAMMA_STAR, eta_star, B1_TILDE_MAX, B2_TILDE_MAX)?
        .ok_or_else(|| StokesError::NotCertified("no certified rho2 on the scan grid".into()))?;
    let u0 = Complex64::new(re_u0, -rho0);
    let w_radius = (RealInterval::point(rep.b1_tilde.hi()) * neg_third_power_hi(u0, 8)).hi();
    let xy_radius = (RealInterval::point(rep.b2_tilde.hi()) * neg_third_power_hi(u0, 4)).hi();
    let z = InnerState::new(square(w_radius), square(xy_radius), square(xy_radius));
    let s = lift(&ComplexBox::from_complex(u0), &z)?;
    Ok(InitialSet {
        u0: [u0.re, u0.im],
        eta_star,
        rho0,
        b1_tilde: rep.b1_tilde,
        b2_tilde: rep.b2_tilde,
        w_radius,
        xy_radius,
        boxes: s.to_array().to_vec(),
        certificate: rep,
    })
}

/// Consistent point on the leading-order tail approximation.
pub fn seed_state(u0: Complex64, eta_star: f64) -> Result<Vec<Complex64>, StokesError> {
    let z = asymptotic_seed(u0, eta_star)?;
    Ok(lift(&u0, &z)?.to_array().to_vec())
}

/// Fast-mode crossing from a point.
pub fn fast_crossing(
    sys: &OdeSystem,
    x0: Vec<Complex64>,
    cfg: &IntegratorConfig,
    guard: Option<DomainGuard>,
    record: Option<&mut Vec<TrajectoryRecord>>,
) -> Result<SectionCrossing, StokesError> {
    let mut it = FastIntegrator::new(sys, cfg.clone(), x0)?;
    Ok(it.to_section(guard, record)?)
}

/// Rigorous crossing from a box.
pub fn rigorous_crossing(
    sys: &OdeSystem,
    boxes: &[ComplexBox],
    cfg: &IntegratorConfig,
    guard: Option<DomainGuard>,
    record: Option<&mut Vec<TrajectoryRecord>>,
) -> Result<SectionCrossing, StokesError> {
    let mut it = RigorousIntegrator::new(sys, cfg.clone(), FlowEnclosure::from_boxes(boxes))?.with_guard(guard);
    Ok(it.to_section(record)?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StokesEstimate {
    /// Depth `-Im U` at the crossing.
    pub rho: f64,
    /// `Y^u - Y^s` at `U = -i rho`, as `[re, im]`.
    pub delta_y: [f64; 2],
    pub theta_rho: f64,
    pub extrapolated_theta: Option<f64>,
}

impl StokesEstimate {
    pub fn from_crossing(c: &SectionCrossing) -> Self {
        let y = c.z_at_section[2].mid();
        let (dy, bound) = stable_from_unstable(y);
        let rho = -c.im_u().mid();
        StokesEstimate {
            rho,
            delta_y: [dy.re, dy.im],
            theta_rho: bound * rho.exp(),
            extrapolated_theta: None,
        }
    }
}

/// Value at `1/rho = 0` of the polynomial in `1/rho` through the points.
pub fn richardson(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let s: Vec<f64> = points.iter().map(|(r, _)| 1.0 / r).collect();
    let mut acc = 0.0;
    for (i, (_, th)) in points.iter().enumerate() {
        let mut l = 1.0;
        for (j, sj) in s.iter().enumerate() {
            if i != j {
                if s[i] == *sj {
                    return None;
                }
                l *= (0.0 - sj) / (s[i] - sj);
            }
        }
        acc += th * l;
    }
    Some(acc)
}

/// Fast crossings from the tail seed at each starting depth, in parallel;
/// the extrapolated value is attached to every entry.
pub fn stokes_estimates(
    start_rhos: &[f64],
    re_u0: f64,
    eta_star: f64,
    cfg: &IntegratorConfig,
) -> Result<Vec<StokesEstimate>, StokesError> {
    let sys = OdeSystem::extended();
    let mut out = start_rhos
        .par_iter()
        .map(|&rho| {
            let x0 = seed_state(Complex64::new(re_u0, -rho), eta_star)?;
            let c = fast_crossing(&sys, x0, cfg, None, None)?;
            Ok(StokesEstimate::from_crossing(&c))
        })
        .collect::<Result<Vec<_>, StokesError>>()?;
    let pts: Vec<(f64, f64)> = out.iter().map(|e| (e.rho, e.theta_rho)).collect();
    let ex = richardson(&pts);
    for e in &mut out {
        e.extrapolated_theta = ex;
    }
    Ok(out)
}

/// Outcome of the rigorous integration over a stretch of the approach.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LegReport {
    pub re_u_stop: f64,
    pub steps: usize,
    pub t_end: RealInterval,
    pub initial_widths: Vec<f64>,
    pub final_widths: Vec<f64>,
    pub max_widths: Vec<f64>,
    /// Steps at which a probe trajectory left the tube.
    pub escapes: Vec<usize>,
    pub checked_points: usize,
}

impl LegReport {
    /// Largest `max width / initial width` per component (infinite when the
    /// initial width is zero and the component grew).
    pub fn growth(&self) -> Vec<f64> {
        self.max_widths
            .iter()
            .zip(&self.initial_widths)
            .map(|(m, i)| if *i > 0.0 { m / i } else if *m > 0.0 { f64::INFINITY } else { 1.0 })
            .collect()
    }
}

/// Integrate the box rigorously until the centre reaches `Re U >= re_u_stop`,
/// checking the fast trajectories of `probes` against the tube at every step.
pub fn rigorous_leg(
    boxes: &[ComplexBox],
    probes: Vec<Vec<Complex64>>,
    re_u_stop: f64,
    cfg: &IntegratorConfig,
    fast_cfg: &IntegratorConfig,
    mut record: Option<&mut Vec<TrajectoryRecord>>,
) -> Result<LegReport, StokesError> {
    let sys = OdeSystem::extended();
    let enc = FlowEnclosure::from_boxes(boxes);
    let initial_widths = enc.widths();
    let mut it = RigorousIntegrator::new(&sys, cfg.clone(), enc)?;
    let mut fast = probes
        .into_iter()
        .map(|p| FastIntegrator::new(&sys, fast_cfg.clone(), p))
        .collect::<Result<Vec<_>, _>>()?;
    let mut max_widths = initial_widths.clone();
    let mut escapes = Vec::new();
    let mut checked = 0;
    if let Some(r) = record.as_deref_mut() {
        r.push(it.record());
    }
    while it.enc.center[2 * IDX_U] < re_u_stop {
        let before = it.enc.center[2 * IDX_U];
        let cap = ((re_u_stop - before) * 1.000001).max(cfg.h_min);
        it.step(cap)?;
        if let Some(r) = record.as_deref_mut() {
            r.push(it.record());
        }
        for (m, w) in max_widths.iter_mut().zip(it.enc.widths()) {
            *m = m.max(w);
        }
        let hull = it.enc.hull();
        // the step time itself is only known to a few ulps
        let slack = it.enc.t.width() * 4.0;
        let mut inside = true;
        for f in fast.iter_mut() {
            f.advance_to(it.enc.t.mid())?;
            checked += 1;
            inside &= hull.iter().zip(&f.x).all(|(b, z)| b.inflate(slack).contains(*z));
        }
        if !inside {
            escapes.push(it.steps);
        }
    }
    Ok(LegReport {
        re_u_stop,
        steps: it.steps,
        t_end: it.enc.t,
        final_widths: it.enc.widths(),
        initial_widths,
        max_widths,
        escapes,
        checked_points: checked,
    })
}

/// Crossing summary as printed by the command line.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CrossingSummary {
    pub mode: String,
    pub t_cross: RealInterval,
    pub im_u: RealInterval,
    pub re_y: RealInterval,
    pub splitting_lower_bound: f64,
    pub theta_rho: f64,
}

impl CrossingSummary {
    pub fn new(mode: &str, c: &SectionCrossing) -> Self {
        CrossingSummary {
            mode: mode.to_string(),
            t_cross: c.t_cross,
            im_u: c.im_u(),
            re_y: c.re_y_interval,
            splitting_lower_bound: splitting_lower_bound(c.re_y_interval),
            theta_rho: StokesEstimate::from_crossing(c).theta_rho,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn richardson_exact_for_polynomials() {
        let f = |r: f64| 1.6 + 0.3 / r - 0.7 / (r * r);
        let pts: Vec<(f64, f64)> = [7.0, 9.0, 11.0].iter().map(|r| (*r, f(*r))).collect();
        assert!((richardson(&pts).unwrap() - 1.6).abs() < 1e-12);
        assert!(richardson(&pts[..1]).is_none());
    }

    #[test]
    fn initial_set_radii() {
        let s = initial_set(1000.0, 7.12, -2000.0).unwrap();
        assert!(s.w_radius > 1.0e-9 && s.w_radius < 1.2e-9, "{}", s.w_radius);
        assert!(s.xy_radius > 2.6e-5 && s.xy_radius < 2.85e-5, "{}", s.xy_radius);
        assert!(s.boxes[4].contains(s.midpoint_state().unwrap()[4]));
    }

    #[test]
    fn initial_set_outside_tail() {
        assert!(matches!(initial_set(1000.0, 7.12, -500.0), Err(StokesError::NotCertified(_))));
        assert!(matches!(initial_set(1000.0, 7.0, -2000.0), Err(StokesError::NotCertified(_))));
    }
}
