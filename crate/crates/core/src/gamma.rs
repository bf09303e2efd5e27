//! Enclosures of the Gamma function.
//!
//! The certificate only needs Gamma at eight sixths/thirds; those are stored
//! as 30-digit decimals and widened by one ulp. General arguments go through
//! an interval Stirling series after upward recurrence.

use crate::error::{CertificateError, IntervalError};
use crate::interval::RealInterval;

/// `(numerator, denominator, Gamma(numerator/denominator))`.
const TABLE: [(u32, u32, &str); 8] = [
    (2, 3, "1.35411793942640041694528802815"),
    (7, 6, "0.927719333630039200708349482535"),
    (4, 3, "0.892979511569249211218564313658"),
    (5, 3, "0.902745292950933611296858685436"),
    (11, 6, "0.940655858256771634384084241882"),
    (13, 6, "1.08233922256837906749307439629"),
    (7, 3, "1.19063934875899894829141908488"),
    (17, 6, "1.72453574013741466303748777678"),
];

fn reduce(n: u32, d: u32) -> (u32, u32) {
    let (mut a, mut b) = (n, d);
    while b != 0 {
        (a, b) = (b, a % b);
    }
    (n / a, d / a)
}

/// Tabulated enclosure of `Gamma(n/d)`, if `n/d` is one of the stored points.
pub fn gamma_table(n: u32, d: u32) -> Option<RealInterval> {
    let key = reduce(n, d);
    TABLE
        .iter()
        .find(|(tn, td, _)| (*tn, *td) == key)
        .map(|(_, _, s)| RealInterval::from_decimal(s))
}

pub fn sqrt_pi() -> RealInterval {
    RealInterval::pi().sqrt().expect("pi > 0")
}

// B_{2k} for k = 1..=9 as (numerator, denominator)
const BERNOULLI: [(i64, i64); 9] = [
    (1, 6),
    (-1, 30),
    (1, 42),
    (-1, 30),
    (5, 66),
    (-691, 2730),
    (7, 6),
    (-3617, 510),
    (43867, 798),
];

/// `ln Gamma(z)` for `z >= 10`.
fn ln_gamma_large(z: RealInterval) -> Result<RealInterval, IntervalError> {
    debug_assert!(z.lo() >= 10.0);
    let half = RealInterval::ratio(1, 2);
    let two_pi = RealInterval::pi() * RealInterval::point(2.0);
    let mut s = (z - half) * z.ln()? - z + half * two_pi.ln()?;
    let zinv = z.recip();
    let zinv2 = zinv.sqr();
    let mut zpow = zinv;
    let n = BERNOULLI.len() - 1;
    for (k, &(bn, bd)) in BERNOULLI.iter().take(n).enumerate() {
        let k = k as i64 + 1;
        let coef = RealInterval::ratio(bn, bd) / RealInterval::point((2 * k * (2 * k - 1)) as f64);
        s = s + coef * zpow;
        zpow = zpow * zinv2;
    }
    // first omitted term bounds the remainder for real positive z
    let (bn, bd) = BERNOULLI[n];
    let k = n as i64 + 1;
    let bound = (RealInterval::ratio(bn.abs(), bd) / RealInterval::point((2 * k * (2 * k - 1)) as f64))
        * RealInterval::point(zpow.hi());
    Ok(s + RealInterval::new(-bound.hi(), bound.hi()).expect("symmetric"))
}

/// Enclosure of `Gamma(x)` for `x > 0`.
pub fn gamma_interval(x: RealInterval) -> Result<RealInterval, IntervalError> {
    if x.lo() <= 0.0 {
        return Err(IntervalError::NegativeArgument(x.lo()));
    }
    let shift = (10.0 - x.lo()).max(0.0).ceil() as u32;
    let mut prod = RealInterval::ONE;
    for k in 0..shift {
        prod = prod * (x + RealInterval::point(k as f64));
    }
    let z = x + RealInterval::point(shift as f64);
    Ok(ln_gamma_large(z)?.exp() / prod)
}

/// `G = sqrt(pi) Gamma((e-1)/2) / (2 Gamma(e/2))` for a general exponent.
pub fn g_norm_constant(etaexp: RealInterval) -> Result<RealInterval, CertificateError> {
    if etaexp.lo() <= 1.0 {
        return Err(CertificateError::ExponentTooSmall(etaexp.lo()));
    }
    let half = RealInterval::ratio(1, 2);
    let a = gamma_interval((etaexp - RealInterval::ONE) * half)?;
    let b = gamma_interval(etaexp * half)?;
    Ok(sqrt_pi() * a / (RealInterval::point(2.0) * b))
}

/// The same constant for `e = n/3`, from the tabulated Gamma values.
pub fn g_norm_thirds(n: u32) -> Result<RealInterval, CertificateError> {
    if n <= 3 {
        return Err(CertificateError::ExponentTooSmall(n as f64 / 3.0));
    }
    let missing = || CertificateError::OutOfRange(format!("Gamma not tabulated for exponent {n}/3"));
    let a = gamma_table(n - 3, 6).ok_or_else(missing)?;
    let b = gamma_table(n, 6).ok_or_else(missing)?;
    Ok(sqrt_pi() * a / (RealInterval::point(2.0) * b))
}
