//! Interval evaluation of the fixed-point constant cascade and the
//! contraction / self-map verdict.
//!
//! All quantities are intervals. A parameter typed by the user (say 6.24)
//! is enclosed by the two doubles around its nearest double, so the verdict
//! covers the decimal value too.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::error::CertificateError;
use crate::gamma::{gamma_table, sqrt_pi};
use crate::interval::RealInterval;

pub const KAPPA_STAR: f64 = 6.24;
pub const GAMMA_STAR: f64 = 0.5;
pub const RHO1_STAR: f64 = 38.0;
pub const RHO2_STAR: f64 = 1.9;
pub const ETA_STAR: f64 = 1000.0;
/// Limits on the tail ball radii used to build the initial set.
pub const B1_TILDE_MAX: f64 = 0.7;
pub const B2_TILDE_MAX: f64 = 0.71;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateParams {
    pub kappa: f64,
    pub gamma: f64,
    pub rho1: f64,
    pub rho2: f64,
    /// Tail cutoff; when set, every kappa-dependent estimate uses it instead.
    pub eta: Option<f64>,
}

impl CertificateParams {
    pub fn new(kappa: f64, gamma: f64, rho1: f64, rho2: f64) -> Self {
        CertificateParams {
            kappa,
            gamma,
            rho1,
            rho2,
            eta: None,
        }
    }

    pub fn with_eta(mut self, eta: f64) -> Self {
        self.eta = Some(eta);
        self
    }

    pub fn validate(&self) -> Result<(), CertificateError> {
        let bad = |m: String| Err(CertificateError::OutOfRange(m));
        let finite = [self.kappa, self.gamma, self.rho1, self.rho2]
            .iter()
            .chain(self.eta.iter())
            .all(|v| v.is_finite());
        if !finite {
            return bad("non-finite parameter".into());
        }
        if self.kappa < 3.0 {
            return bad(format!("kappa = {} < 3", self.kappa));
        }
        if !(self.gamma > 0.0 && self.gamma < gamma_limit().lo()) {
            return bad(format!("gamma = {} not in (0, arctan(sqrt3/2))", self.gamma));
        }
        if !(self.rho1 > 1.0 && self.rho1 < 60.0) {
            return bad(format!("rho1 = {} not in (1, 60)", self.rho1));
        }
        if !(self.rho2 > 1.0 && self.rho2 < 3.0) {
            return bad(format!("rho2 = {} not in (1, 3)", self.rho2));
        }
        if let Some(eta) = self.eta {
            if eta < self.kappa {
                return bad(format!("eta = {eta} < kappa = {}", self.kappa));
            }
        }
        Ok(())
    }

    /// The offset at which the estimates are evaluated.
    pub fn effective_kappa(&self) -> f64 {
        self.eta.unwrap_or(self.kappa)
    }
}

/// `arctan(sqrt(3)/2)`, the minimiser of `1/(sin s cos^(4/3) s)`.
pub fn gamma_limit() -> RealInterval {
    let r = RealInterval::point(3.0).sqrt().expect("3 > 0") / RealInterval::point(2.0);
    r.atan()
}

/// Enclosure of the decimal a user most likely meant by `x`.
pub fn enclose_param(x: f64) -> RealInterval {
    RealInterval::new(x.next_down(), x.next_up()).expect("finite")
}

/// Sector reach `kappa / cos(gamma)` on the imaginary axis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    pub kappa: f64,
    pub gamma: f64,
    pub rho_reach: RealInterval,
}

impl DomainSpec {
    pub fn new(kappa: f64, gamma: f64) -> Result<Self, CertificateError> {
        let cos = enclose_param(gamma).cos_monotone()?;
        Ok(DomainSpec {
            kappa,
            gamma,
            rho_reach: enclose_param(kappa) / cos,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZetaCascade {
    pub zeta: [RealInterval; 5],
    pub c1_0: RealInterval,
    pub c23_0: RealInterval,
}

fn r(p: i64, q: i64) -> RealInterval {
    RealInterval::ratio(p, q)
}

fn iv(x: f64) -> RealInterval {
    RealInterval::point(x)
}

fn positive(name: &str, v: RealInterval) -> Result<RealInterval, CertificateError> {
    if v.lo() > 0.0 {
        Ok(v)
    } else {
        Err(CertificateError::DenominatorNonpositive(name.to_string()))
    }
}

/// The five auxiliary bounds on the remainder at `Z = 0` and the constants
/// built from them.
pub fn zeta_cascade(kappa: RealInterval) -> Result<ZetaCascade, CertificateError> {
    if kappa.lo() < 1.0 {
        return Err(CertificateError::OutOfRange(format!("kappa = {kappa} < 1")));
    }
    let k2 = kappa.sqr();
    let q = r(16, 81) / k2;
    let sp = (RealInterval::ONE + q).sqrt()?;
    let sm = positive("1 - 16/(81 kappa^2)", RealInterval::ONE - q)?.sqrt()?;
    let three = iv(3.0);
    let z0 = q * (RealInterval::ONE + three * sp);
    let z1 = r(16, 81) * (RealInterval::ONE + three * sp);
    let z2 = q * (iv(6.0) * sp + iv(8.0) + r(128, 81) / k2);
    let z3 = r(16, 81) * (three / (iv(2.0) * sm) + iv(6.0) * sp + iv(6.0) + r(128, 81) / k2);
    let k4 = k2.sqr();
    let z4 = r(32, 81) / k2
        * (iv(10.0) + r(256, 81) / k2 + r(512, 2187) / k4
            + sp * (iv(12.0) + r(368, 81) / k2 + r(512 * 7, 6561) / k4));
    let d0 = positive("2 - zeta0", iv(2.0) - z0)?;
    let d2 = positive("8 - zeta2", iv(8.0) - z2)?;
    let d4 = positive("16 - zeta4", iv(16.0) - z4)?;
    let c23 = z1 / d0;
    let c1 = z3 / d2 + r(16, 81) / d0 + q * z3 / d4;
    Ok(ZetaCascade {
        zeta: [z0, z1, z2, z3, z4],
        c1_0: c1,
        c23_0: c23,
    })
}

fn gamma_of(n: u32, d: u32) -> RealInterval {
    gamma_table(n, d).expect("tabulated argument")
}

/// Bounds on the first Picard iterate, `(alpha0, beta0)`.
pub fn alpha_beta0(kappa: RealInterval) -> Result<(RealInterval, RealInterval), CertificateError> {
    let z = zeta_cascade(kappa)?;
    Ok(alpha_beta_from(kappa, &z))
}

fn alpha_beta_from(kappa: RealInterval, z: &ZetaCascade) -> (RealInterval, RealInterval) {
    let sp = sqrt_pi();
    let k2 = kappa.sqr();
    let a_coef = iv(32.0) * sp * gamma_of(7, 3) / (iv(729.0) * gamma_of(17, 6));
    let alpha0 = r(8, 243) + a_coef / k2 * z.c1_0;
    let b_const = r(2, 9) + iv(14.0) * sp * gamma_of(2, 3) / (iv(81.0) * gamma_of(7, 6));
    let b1 = sp * gamma_of(7, 6) / (iv(9.0) * gamma_of(5, 3));
    let b2 = iv(2.0) * sp * gamma_of(5, 3) / (iv(81.0) * gamma_of(13, 6));
    let beta0 = b_const + (b1 / kappa + b2 / k2) * z.c23_0;
    (alpha0, beta0)
}

/// `lim beta0 / alpha0` as kappa grows.
pub fn beta_alpha_limit() -> RealInterval {
    let sp = sqrt_pi();
    r(243, 8) * (r(2, 9) + iv(14.0) * sp * gamma_of(2, 3) / (iv(81.0) * gamma_of(7, 6)))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DerivativeCascade {
    pub alpha: RealInterval,
    pub beta: RealInterval,
    pub xi: [RealInterval; 6],
    pub eta: [RealInterval; 10],
    pub nu: [RealInterval; 6],
}

fn gate_below(name: &str, v: RealInterval, bound: f64) -> Result<(), CertificateError> {
    if v.hi() < bound {
        Ok(())
    } else {
        Err(CertificateError::GateFailed(format!("{name} < {bound} (upper bound {})", v.hi())))
    }
}

/// Bounds on `J`, the derivatives of `K` and the derivatives of `R` over the
/// ball of radii `(rho1 alpha0, rho2 beta0)`.
pub fn xi_eta_nu_cascade(
    kappa: RealInterval,
    rho1: RealInterval,
    rho2: RealInterval,
    alpha0: RealInterval,
    beta0: RealInterval,
) -> Result<DerivativeCascade, CertificateError> {
    let a = rho1 * alpha0;
    let b = rho2 * beta0;
    let k = kappa;
    let k2 = k.sqr();
    let k3 = k2 * k;
    let k4 = k2.sqr();
    let xi0 = (iv(16.0) + iv(216.0) * b) / iv(81.0) + iv(16.0) * b / (iv(27.0) * k)
        + (iv(16.0) * a + iv(48.0) * b.sqr()) / (iv(27.0) * k2)
        + iv(8.0) * a * b / (iv(9.0) * k3)
        + iv(4.0) * a.sqr() / (iv(9.0) * k4);
    let xi1 = (iv(32.0) + iv(144.0) * b) / iv(81.0) + iv(80.0) * b / (iv(81.0) * k)
        + (iv(64.0) * a + iv(192.0) * b.sqr()) / (iv(81.0) * k2)
        + iv(8.0) * a * b / (iv(9.0) * k3)
        + iv(8.0) * a.sqr() / (iv(27.0) * k4);
    let xi2 = r(16, 27) + iv(8.0) * b / (iv(9.0) * k) + iv(8.0) * a / (iv(9.0) * k2);
    let xi3 = r(4, 3) + iv(8.0) / (iv(27.0) * k) + iv(16.0) * b / (iv(9.0) * k2) + iv(4.0) * a / (iv(9.0) * k3);
    let xi4 = r(64, 81) + iv(8.0) * b / (iv(9.0) * k) + iv(16.0) * a / (iv(27.0) * k2);
    let xi5 = r(8, 9) + iv(40.0) / (iv(81.0) * k) + iv(64.0) * b / (iv(27.0) * k2) + iv(4.0) * a / (iv(9.0) * k3);

    gate_below("xi0/kappa^2", xi0 / k2, 1.0)?;
    let eta0 = (RealInterval::ONE - xi0 / k2).sqrt()?;
    let e3 = eta0.powi(3);
    let e5 = eta0.powi(5);
    let inner = iv(4.0) - xi0 / (eta0 * k2);
    if inner.lo() <= 0.0 {
        return Err(CertificateError::GateFailed("4 - xi0/(eta0 kappa^2) > 0".into()));
    }
    let six_e3 = iv(6.0) * e3;
    let nine_e3 = iv(9.0) * e3;
    let four_e5 = iv(4.0) * e5;
    let eta1 = iv(4.0) * xi0 / (iv(9.0) * eta0 * inner) + xi1 / six_e3 + a.sqr() / (iv(2.0) * k2);
    let eta2 = r(3, 2) * a + xi2 / six_e3;
    let eta3 = xi3 / six_e3;
    let eta4 = a + xi2 / nine_e3 + xi4 / six_e3 + xi1 * xi2 / (four_e5 * k2);
    let eta5 = xi3 / nine_e3 + xi5 / six_e3 + xi1 * xi3 / (four_e5 * k2);
    let eta6 = r(3, 2) + iv(4.0) / (iv(27.0) * e3 * k2) + xi2.sqr() / (four_e5 * k4);
    let eta7 = iv(2.0) / (iv(27.0) * e3) + xi2 * xi3 / (four_e5 * k);
    let eta8 = iv(5.0) / (iv(27.0) * e3) + xi3.sqr() / four_e5;
    let eta9 = RealInterval::ONE / nine_e3 + xi3.sqr() / four_e5;

    gate_below("eta2/kappa^2", eta2 / k2, 1.0)?;
    let nu0 = (RealInterval::ONE - eta2 / k2).sqr();
    let nu1 = eta4 / nu0 + eta2 * eta4 / (nu0 * k2) + eta1 * eta6 / nu0;
    let nu2 = eta5 / nu0 + eta2 * eta5 / (nu0 * k2) + eta1 * eta7 / (nu0 * k3);
    let two_b = iv(2.0) * b;
    let tail7 = b * eta7 / (nu0 * k) + two_b * eta2 * eta7 / (nu0 * k3) + eta3 * eta7 / (nu0 * k);
    let nu3 = eta7 / (nu0 * k) + eta2 * eta7 / (nu0 * k3) + b * eta6 / nu0 + two_b * eta2 * eta6 / (nu0 * k2)
        + eta3 * eta6 / nu0;
    let nu4 = eta8 / nu0 + eta2 * eta8 / (nu0 * k2) + eta2 / nu0 + eta2.sqr() / (nu0 * k2) + tail7;
    let nu5 = eta9 / nu0 + eta2 * eta9 / (nu0 * k2) + tail7;

    Ok(DerivativeCascade {
        alpha: a,
        beta: b,
        xi: [xi0, xi1, xi2, xi3, xi4, xi5],
        eta: [eta0, eta1, eta2, eta3, eta4, eta5, eta6, eta7, eta8, eta9],
        nu: [nu0, nu1, nu2, nu3, nu4, nu5],
    })
}

/// `1 / (sin g cos^(4/3) g)`.
pub fn sector_factor(gamma: RealInterval) -> Result<RealInterval, CertificateError> {
    let s = gamma.sin_monotone()?;
    let c = gamma.cos_monotone()?;
    Ok(RealInterval::ONE / (s * c * c.cbrt()))
}

/// `(nutilde[1..=5], L)`; index 0 of the array is `nutilde_1`.
pub fn lipschitz_l(
    kappa: RealInterval,
    gamma: RealInterval,
    nu: &[RealInterval; 6],
) -> Result<([RealInterval; 5], RealInterval), CertificateError> {
    let g = sqrt_pi() * gamma_of(4, 3) / (iv(2.0) * gamma_of(11, 6));
    let f = sector_factor(gamma)?;
    let nt = [g * nu[1], g * nu[2], f * nu[3], f * nu[4], f * nu[5]];
    let k2 = kappa.sqr();
    let l1 = nt[0] / k2 + iv(2.0) * nt[1];
    let l2 = (nt[2] + nt[3] + nt[4]) / k2;
    Ok((nt, l1.max(&l2)))
}

/// Self-map margins `(g1, g2)`.
pub fn wellposedness(
    kappa: RealInterval,
    rho1: RealInterval,
    rho2: RealInterval,
    alpha0: RealInterval,
    beta0: RealInterval,
    nutilde: &[RealInterval; 5],
) -> (RealInterval, RealInterval) {
    let k2 = kappa.sqr();
    let one = RealInterval::ONE;
    let g1 = (rho1 - one - nutilde[0] * rho1 / k2) * alpha0 - iv(2.0) * nutilde[1] * rho2 * beta0;
    let g2 = (rho2 - one - (nutilde[3] + nutilde[4]) * rho2 / k2) * beta0 - nutilde[2] * rho1 * alpha0 / k2;
    (g1, g2)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", content = "reason")]
pub enum Verdict {
    Certified,
    Failed(String),
}

impl Verdict {
    pub fn is_certified(&self) -> bool {
        matches!(self, Verdict::Certified)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub params: CertificateParams,
    pub zeta: ZetaCascade,
    pub alpha0: RealInterval,
    pub beta0: RealInterval,
    pub cascade: DerivativeCascade,
    pub nutilde: [RealInterval; 5],
    pub lipschitz: RealInterval,
    pub g1: RealInterval,
    pub g2: RealInterval,
    pub b1_tilde: RealInterval,
    pub b2_tilde: RealInterval,
    pub verdict: Verdict,
}

/// Full cascade and verdict.
pub fn certify(params: &CertificateParams) -> Result<CertificateReport, CertificateError> {
    params.validate()?;
    let kappa = enclose_param(params.effective_kappa());
    let gamma = enclose_param(params.gamma);
    let rho1 = enclose_param(params.rho1);
    let rho2 = enclose_param(params.rho2);
    let zeta = zeta_cascade(kappa)?;
    for (name, v, bound) in [("zeta0", zeta.zeta[0], 2.0), ("zeta2", zeta.zeta[2], 8.0), ("zeta4", zeta.zeta[4], 16.0)] {
        gate_below(name, v, bound)?;
    }
    let (alpha0, beta0) = alpha_beta_from(kappa, &zeta);
    let cascade = xi_eta_nu_cascade(kappa, rho1, rho2, alpha0, beta0)?;
    let (nutilde, lipschitz) = lipschitz_l(kappa, gamma, &cascade.nu)?;
    let (g1, g2) = wellposedness(kappa, rho1, rho2, alpha0, beta0, &nutilde);
    let mut reasons = Vec::new();
    if lipschitz.hi() >= 1.0 {
        reasons.push(format!("L upper bound {} >= 1", lipschitz.hi()));
    }
    if g1.lo() < 0.0 {
        reasons.push(format!("g1 lower bound {} < 0", g1.lo()));
    }
    if g2.lo() < 0.0 {
        reasons.push(format!("g2 lower bound {} < 0", g2.lo()));
    }
    let verdict = if reasons.is_empty() {
        Verdict::Certified
    } else {
        Verdict::Failed(reasons.join("; "))
    };
    Ok(CertificateReport {
        params: *params,
        zeta,
        alpha0,
        beta0,
        b1_tilde: rho1 * alpha0,
        b2_tilde: rho2 * beta0,
        cascade,
        nutilde,
        lipschitz,
        g1,
        g2,
        verdict,
    })
}

/// Scan `rho2` over `1.01, 1.02, ..., 2.99` with `rho1 = 20 rho2` and return
/// the certified report with the smallest ball whose radii satisfy the limits.
pub fn scan_rho2(
    kappa: f64,
    gamma: f64,
    eta: f64,
    b1_max: f64,
    b2_max: f64,
) -> Result<Option<CertificateReport>, CertificateError> {
    let grid: Vec<f64> = (101..300).map(|i| i as f64 / 100.0).collect();
    let reports: Vec<Option<CertificateReport>> = grid
        .par_iter()
        .map(|&rho2| {
            let p = CertificateParams::new(kappa, gamma, 20.0 * rho2, rho2).with_eta(eta);
            certify(&p).ok().filter(|rep| {
                rep.verdict.is_certified() && rep.b1_tilde.hi() <= b1_max && rep.b2_tilde.hi() <= b2_max
            })
        })
        .collect();
    CertificateParams::new(kappa, gamma, 20.0 * 1.01, 1.01)
        .with_eta(eta)
        .validate()?;
    Ok(reports.into_iter().flatten().next())
}

fn entry(v: &RealInterval, anchor: &str) -> Value {
    json!({ "lo": v.lo(), "hi": v.hi(), "anchor": anchor })
}

impl CertificateReport {
    /// Report document: every constant as a `{lo, hi, anchor}` triple.
    pub fn to_json(&self) -> Value {
        let mut m = Map::new();
        let p = &self.params;
        m.insert(
            "params".into(),
            json!({
                "kappa": p.kappa, "gamma": p.gamma, "rho1": p.rho1, "rho2": p.rho2, "eta": p.eta,
                "effective_kappa": p.effective_kappa(),
            }),
        );
        for (i, z) in self.zeta.zeta.iter().enumerate() {
            m.insert(format!("zeta{i}"), entry(z, "bound on the remainder at Z = 0"));
        }
        m.insert("C1_0".into(), entry(&self.zeta.c1_0, "|U^2 R1^0| bound"));
        m.insert("C23_0".into(), entry(&self.zeta.c23_0, "|U^2 R23^0| bound"));
        m.insert("alpha0".into(), entry(&self.alpha0, "first iterate, W weight 8/3"));
        m.insert("beta0".into(), entry(&self.beta0, "first iterate, X/Y weight 4/3"));
        m.insert("alpha".into(), entry(&self.cascade.alpha, "rho1 alpha0"));
        m.insert("beta".into(), entry(&self.cascade.beta, "rho2 beta0"));
        for (i, x) in self.cascade.xi.iter().enumerate() {
            m.insert(format!("xi{i}"), entry(x, "J and its derivatives over the ball"));
        }
        for (i, x) in self.cascade.eta.iter().enumerate() {
            m.insert(format!("etac{i}"), entry(x, "K derivatives over the ball"));
        }
        for (i, x) in self.cascade.nu.iter().enumerate() {
            m.insert(format!("nu{i}"), entry(x, "R derivatives over the ball"));
        }
        for (i, x) in self.nutilde.iter().enumerate() {
            m.insert(format!("nutilde{}", i + 1), entry(x, "Lipschitz weights after the integral operator"));
        }
        m.insert("L".into(), entry(&self.lipschitz, "Lipschitz constant of the fixed-point operator"));
        m.insert("g1".into(), entry(&self.g1, "self-map margin, W component"));
        m.insert("g2".into(), entry(&self.g2, "self-map margin, X/Y components"));
        m.insert("b1_tilde".into(), entry(&self.b1_tilde, "ball radius rho1 alpha0"));
        m.insert("b2_tilde".into(), entry(&self.b2_tilde, "ball radius rho2 beta0"));
        m.insert("verdict".into(), serde_json::to_value(&self.verdict).expect("verdict"));
        Value::Object(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zeta_at_kappa_one_is_admissible() {
        let z = zeta_cascade(RealInterval::ONE).unwrap();
        assert!(z.zeta[0].hi() < 2.0 && z.zeta[2].hi() < 8.0 && z.zeta[4].hi() < 16.0);
    }

    #[test]
    fn zeta_limits() {
        let z = zeta_cascade(iv(1e8)).unwrap();
        assert!(z.zeta[0].hi() < 1e-15);
        assert!((z.zeta[1].mid() - 64.0 / 81.0).abs() < 1e-14);
    }

    #[test]
    fn reach_below_rho0() {
        let d = DomainSpec::new(KAPPA_STAR, GAMMA_STAR).unwrap();
        assert!(d.rho_reach.hi() < 7.12);
        assert!(d.rho_reach.lo() > 7.11);
    }

    #[test]
    fn out_of_range() {
        for p in [
            CertificateParams::new(2.0, 0.5, 38.0, 1.9),
            CertificateParams::new(6.24, 0.8, 38.0, 1.9),
            CertificateParams::new(6.24, 0.5, 60.0, 1.9),
            CertificateParams::new(6.24, 0.5, 38.0, 3.0),
            CertificateParams::new(6.24, 0.5, 38.0, 1.9).with_eta(5.0),
        ] {
            assert!(matches!(certify(&p), Err(CertificateError::OutOfRange(_))), "{p:?}");
        }
    }

    #[test]
    fn gate_at_worst_corner() {
        let k = iv(3.0);
        let (a0, b0) = alpha_beta0(k).unwrap();
        let c = xi_eta_nu_cascade(k, iv(60.0), iv(3.0), a0, b0).unwrap();
        assert!(c.xi[0].hi() / 9.0 < 1.0);
    }

    #[test]
    fn eta0_is_one_without_xi() {
        let one = (RealInterval::ONE - RealInterval::ZERO / iv(9.0)).sqrt().unwrap();
        assert_eq!(one, RealInterval::ONE);
    }
}
