//! Rigorous Taylor integration with Lohner's doubleton representation.
//!
//! A set of complex states is kept in real coordinates
//! (`Re z0, Im z0, Re z1, ...`) as `c + C r0 + Q r`, with `c` a point,
//! `C` and `Q` point matrices, `r0` the fixed initial box and `r` a box
//! carried in the near-orthogonal frame `Q`. One step:
//!
//! * a Picard box `E` holds every trajectory over `[0, h]`;
//! * the centre is pushed through the Taylor polynomial, the remainder is
//!   `c_{p+1}(E) h^{p+1}`;
//! * the rest of the set is pushed through the interval Jacobian of the
//!   Taylor polynomial over the hull (mean value form);
//! * `Q` is re-orthogonalised by a QR factorisation of the midpoint image.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cbox::ComplexBox;
use crate::error::IntegratorError;
use crate::integrator::{step_from_coefficients, DomainGuard, IntegratorConfig, OdeSystem, SectionCrossing, TrajectoryRecord};
use crate::interval::RealInterval;
use crate::taylor::{horner, Dual};

type RI = RealInterval;

/// Dense interval matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct IMat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<RI>,
}

impl IMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        IMat {
            rows,
            cols,
            data: vec![RI::ZERO; rows * cols],
        }
    }

    pub fn from_point(m: &DMatrix<f64>) -> Self {
        let mut out = IMat::zeros(m.nrows(), m.ncols());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                out.data[i * m.ncols() + j] = RI::point(m[(i, j)]);
            }
        }
        out
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> RI {
        self.data[i * self.cols + j]
    }

    #[inline]
    fn set(&mut self, i: usize, j: usize, v: RI) {
        self.data[i * self.cols + j] = v;
    }

    pub fn mid(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.rows, self.cols, |i, j| self.get(i, j).mid())
    }

    pub fn mul(&self, o: &IMat) -> IMat {
        assert_eq!(self.cols, o.rows);
        let mut out = IMat::zeros(self.rows, o.cols);
        for i in 0..self.rows {
            for j in 0..o.cols {
                let mut s = RI::ZERO;
                for k in 0..self.cols {
                    s = s + self.get(i, k) * o.get(k, j);
                }
                out.set(i, j, s);
            }
        }
        out
    }

    pub fn mul_point(&self, o: &DMatrix<f64>) -> IMat {
        self.mul(&IMat::from_point(o))
    }

    pub fn mul_vec(&self, v: &[RI]) -> Vec<RI> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| (0..self.cols).fold(RI::ZERO, |s, k| s + self.get(i, k) * v[k]))
            .collect()
    }

    pub fn sub(&self, o: &DMatrix<f64>) -> IMat {
        let mut out = self.clone();
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(i, j, self.get(i, j) - RI::point(o[(i, j)]));
            }
        }
        out
    }
}

fn point_mul_vec(m: &DMatrix<f64>, v: &[RI]) -> Vec<RI> {
    IMat::from_point(m).mul_vec(v)
}

fn vec_add(a: &[RI], b: &[RI]) -> Vec<RI> {
    a.iter().zip(b).map(|(x, y)| *x + *y).collect()
}

fn to_real(z: &[ComplexBox]) -> Vec<RI> {
    z.iter().flat_map(|b| [b.re, b.im]).collect()
}

fn to_complex(v: &[RI]) -> Vec<ComplexBox> {
    v.chunks(2).map(|p| ComplexBox::new(p[0], p[1])).collect()
}

/// Real `2n x 2n` matrix of a complex-linear map given by its entries.
fn realify(j: &[Vec<ComplexBox>]) -> IMat {
    let n = j.len();
    let mut m = IMat::zeros(2 * n, 2 * n);
    for (i, row) in j.iter().enumerate() {
        for (k, e) in row.iter().enumerate() {
            m.set(2 * i, 2 * k, e.re);
            m.set(2 * i, 2 * k + 1, -e.im);
            m.set(2 * i + 1, 2 * k, e.im);
            m.set(2 * i + 1, 2 * k + 1, e.re);
        }
    }
    m
}

/// Enclosure of `Q^{-1}` for a nearly orthogonal `Q`:
/// with `E = I - Q^T Q` and `|E| <= d < 1`, `Q^{-1} = (I - E)^{-1} Q^T`
/// lies in `Q^T +- d/(1-d) max_k |Q_jk|` entrywise.
fn verified_inverse_orthogonal(q: &DMatrix<f64>) -> Result<IMat, IntegratorError> {
    let n = q.nrows();
    let qt = IMat::from_point(&q.transpose());
    let qtq = qt.mul(&IMat::from_point(q));
    let mut delta = RI::ZERO;
    for i in 0..n {
        let mut row = RI::ZERO;
        for j in 0..n {
            let e = if i == j { RI::ONE - qtq.get(i, j) } else { -qtq.get(i, j) };
            row = row + RI::point(e.mag());
        }
        delta = delta.max(&row);
    }
    if delta.hi() >= 0.5 {
        return Err(IntegratorError::EnclosureFailed);
    }
    let eps = (RI::point(delta.hi()) / (RI::ONE - RI::point(delta.hi()))).hi();
    let mut out = qt;
    for j in 0..n {
        let colmax = (0..n).map(|k| q[(j, k)].abs()).fold(0.0, f64::max);
        let pad = (RI::point(eps) * RI::point(colmax)).hi();
        for i in 0..n {
            let v = out.get(i, j).inflate(pad);
            out.set(i, j, v);
        }
    }
    Ok(out)
}

/// `c + C r0 + Q r` in real coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowEnclosure {
    pub t: RI,
    pub center: Vec<f64>,
    pub c_mat: Vec<f64>,
    pub r0: Vec<RI>,
    pub q: Vec<f64>,
    pub r: Vec<RI>,
}

impl FlowEnclosure {
    /// The set given by a box of complex states.
    pub fn from_boxes(boxes: &[ComplexBox]) -> Self {
        let real = to_real(boxes);
        let n = real.len();
        let center: Vec<f64> = real.iter().map(|x| x.mid()).collect();
        let r0 = real.iter().zip(&center).map(|(x, c)| *x - RI::point(*c)).collect();
        let eye = DMatrix::<f64>::identity(n, n);
        FlowEnclosure {
            t: RI::ZERO,
            center,
            c_mat: eye.as_slice().to_vec(),
            r0,
            q: eye.as_slice().to_vec(),
            r: vec![RI::ZERO; n],
        }
    }

    pub fn real_dim(&self) -> usize {
        self.center.len()
    }

    pub fn c_matrix(&self) -> DMatrix<f64> {
        let n = self.real_dim();
        DMatrix::from_column_slice(n, self.r0.len(), &self.c_mat)
    }

    pub fn q_matrix(&self) -> DMatrix<f64> {
        let n = self.real_dim();
        DMatrix::from_column_slice(n, n, &self.q)
    }

    /// `C r0 + Q r`.
    fn offset(&self) -> Vec<RI> {
        vec_add(&point_mul_vec(&self.c_matrix(), &self.r0), &point_mul_vec(&self.q_matrix(), &self.r))
    }

    pub fn hull_real(&self) -> Vec<RI> {
        self.offset()
            .iter()
            .zip(&self.center)
            .map(|(o, c)| *o + RI::point(*c))
            .collect()
    }

    pub fn hull(&self) -> Vec<ComplexBox> {
        to_complex(&self.hull_real())
    }

    pub fn center_complex(&self) -> Vec<Complex64> {
        self.center.chunks(2).map(|p| Complex64::new(p[0], p[1])).collect()
    }

    /// Largest real-coordinate width per complex component.
    pub fn widths(&self) -> Vec<f64> {
        self.hull().iter().map(|b| b.width()).collect()
    }
}

/// What a rigorous step keeps for evaluating the set at intermediate times.
#[derive(Clone, Debug)]
pub struct StepData {
    pub t0: RI,
    pub h: f64,
    pub start: FlowEnclosure,
    pub apriori: Vec<ComplexBox>,
    center_coeffs: Vec<Vec<ComplexBox>>,
    jac_coeffs: Vec<Vec<Dual<ComplexBox>>>,
    remainder: Vec<ComplexBox>,
    order: usize,
}

impl StepData {
    /// Enclosure of the flow of the starting set at every time in `tau`
    /// (a subinterval of `[0, h]`).
    pub fn set_at(&self, tau: RI) -> Vec<ComplexBox> {
        let tb = ComplexBox::real(tau);
        let mut y: Vec<ComplexBox> = self.center_coeffs.iter().map(|c| horner(c, tb)).collect();
        let tp = tau.powi(self.order as u32 + 1);
        for (yi, ri) in y.iter_mut().zip(&self.remainder) {
            *yi = *yi + ri.scale(tp);
        }
        let jt: Vec<Vec<ComplexBox>> = self
            .jac_coeffs
            .iter()
            .map(|c| {
                let d = horner(c, Dual::constant(tb));
                let n = self.center_coeffs.len();
                (0..n).map(|k| d.d.get(k).copied().unwrap_or(ComplexBox::ZERO)).collect()
            })
            .collect();
        let j = realify(&jt);
        let off = j.mul_vec(&self.start.offset());
        to_complex(&vec_add(&to_real(&y), &off))
    }
}

fn apriori_enclosure(sys: &OdeSystem, hull: &[ComplexBox], h: f64) -> Result<Vec<ComplexBox>, IntegratorError> {
    let hb = RI::new(0.0, h).map_err(|_| IntegratorError::InvalidConfig("negative step".into()))?;
    let grow = |e: &[ComplexBox]| -> Result<Vec<ComplexBox>, IntegratorError> {
        let f = sys.tape.eval(e)?;
        Ok(hull.iter().zip(&f).map(|(x, fx)| *x + fx.scale(hb)).collect())
    };
    let blow = |b: &ComplexBox| {
        let m = b.mag_upper();
        ComplexBox::new(
            b.re.blow(0.1, 1e-14 * m + 1e-300),
            b.im.blow(0.1, 1e-14 * m + 1e-300),
        )
    };
    let mut e: Vec<ComplexBox> = grow(hull)?.iter().map(blow).collect();
    for _ in 0..12 {
        let cand = match grow(&e) {
            Ok(c) => c,
            Err(IntegratorError::Field(_)) => return Err(IntegratorError::EnclosureFailed),
            Err(err) => return Err(err),
        };
        if cand.iter().zip(&e).all(|(c, x)| c.subset_of(x)) {
            return Ok(cand);
        }
        e = cand.iter().zip(&e).map(|(c, x)| blow(&c.hull(x))).collect();
    }
    Err(IntegratorError::EnclosureFailed)
}

/// Sort columns by their size in the set (largest first) and orthonormalise.
fn reorthogonalise(m: &DMatrix<f64>, r: &[RI]) -> DMatrix<f64> {
    let n = m.ncols();
    let mut idx: Vec<usize> = (0..n).collect();
    let score: Vec<f64> = (0..n).map(|j| m.column(j).norm() * r[j].mag()).collect();
    idx.sort_by(|a, b| score[*b].total_cmp(&score[*a]));
    let p = DMatrix::from_fn(m.nrows(), n, |i, j| m[(i, idx[j])]);
    let q = p.qr().q();
    if q.iter().all(|x| x.is_finite()) {
        q
    } else {
        DMatrix::identity(m.nrows(), n)
    }
}

/// The rigorous integrator, one Lohner step at a time.
pub struct RigorousIntegrator<'a> {
    pub sys: &'a OdeSystem,
    pub cfg: IntegratorConfig,
    pub enc: FlowEnclosure,
    pub guard: Option<DomainGuard>,
    pub steps: usize,
    h_next: f64,
}

impl<'a> RigorousIntegrator<'a> {
    pub fn new(sys: &'a OdeSystem, cfg: IntegratorConfig, enc: FlowEnclosure) -> Result<Self, IntegratorError> {
        cfg.validate()?;
        assert_eq!(enc.real_dim(), 2 * sys.dim());
        Ok(RigorousIntegrator {
            sys,
            h_next: cfg.h_init,
            cfg,
            enc,
            guard: None,
            steps: 0,
        })
    }

    pub fn with_guard(mut self, guard: Option<DomainGuard>) -> Self {
        self.guard = guard;
        self
    }

    /// One step of at most `h_cap`, halving on enclosure failure.
    pub fn step(&mut self, h_cap: f64) -> Result<StepData, IntegratorError> {
        if self.steps >= self.cfg.max_steps {
            return Err(IntegratorError::MaxStepsExceeded);
        }
        let n = self.sys.dim();
        let p = self.cfg.order;
        let center: Vec<ComplexBox> = self
            .enc
            .center_complex()
            .iter()
            .map(|z| ComplexBox::from_complex(*z))
            .collect();
        let center_coeffs = self.sys.tape.coefficients(&center, p)?;
        let mids: Vec<Vec<Complex64>> = center_coeffs.iter().map(|c| c.iter().map(|b| b.mid()).collect()).collect();
        let mut h = step_from_coefficients(&mids, &self.cfg).min(self.h_next * 2.0).min(h_cap);
        let hull = self.enc.hull();
        let apriori = loop {
            match apriori_enclosure(self.sys, &hull, h) {
                Ok(e) => break e,
                Err(IntegratorError::EnclosureFailed) => {
                    h *= 0.5;
                    if h < self.cfg.h_min.min(h_cap) {
                        return Err(IntegratorError::StepUnderflow(self.enc.t.mid()));
                    }
                }
                Err(e) => return Err(e),
            }
        };
        if let Some(g) = self.guard {
            g.check(self.enc.t.mid(), apriori[self.sys.section_var].im.hi())?;
        }
        let rem_coeffs = self.sys.tape.coefficients(&apriori, p + 1)?;
        let remainder: Vec<ComplexBox> = rem_coeffs.iter().map(|c| c[p + 1]).collect();
        let duals: Vec<Dual<ComplexBox>> = hull.iter().enumerate().map(|(i, b)| Dual::variable(*b, i, n)).collect();
        let jac_coeffs = self.sys.tape.coefficients(&duals, p)?;

        let data = StepData {
            t0: self.enc.t,
            h,
            start: self.enc.clone(),
            apriori,
            center_coeffs,
            jac_coeffs,
            remainder,
            order: p,
        };
        self.enc = self.advance(&data)?;
        self.h_next = h;
        self.steps += 1;
        Ok(data)
    }

    fn advance(&self, d: &StepData) -> Result<FlowEnclosure, IntegratorError> {
        let n = self.sys.dim();
        let hb = ComplexBox::point(d.h, 0.0);
        let hp = RI::point(d.h).powi(d.order as u32 + 1);
        let y: Vec<ComplexBox> = d
            .center_coeffs
            .iter()
            .zip(&d.remainder)
            .map(|(c, r)| horner(c, hb) + r.scale(hp))
            .collect();
        let jt: Vec<Vec<ComplexBox>> = d
            .jac_coeffs
            .iter()
            .map(|c| {
                let v = horner(c, Dual::constant(hb));
                (0..n).map(|k| v.d.get(k).copied().unwrap_or(ComplexBox::ZERO)).collect()
            })
            .collect();
        let j = realify(&jt);
        let y = to_real(&y);
        if !y.iter().all(|v| v.is_finite()) || !j.data.iter().all(|v| v.is_finite()) {
            return Err(IntegratorError::EnclosureFailed);
        }
        let center: Vec<f64> = y.iter().map(|v| v.mid()).collect();
        let e: Vec<RI> = y.iter().zip(&center).map(|(v, c)| *v - RI::point(*c)).collect();
        let start = &d.start;
        let jc = j.mul_point(&start.c_matrix());
        let c_new = jc.mid();
        let dc = jc.sub(&c_new);
        let jq = j.mul_point(&start.q_matrix());
        let q_new = reorthogonalise(&jq.mid(), &start.r);
        let q_inv = verified_inverse_orthogonal(&q_new)?;
        let carried = q_inv.mul(&jq).mul_vec(&start.r);
        let fresh = q_inv.mul_vec(&vec_add(&dc.mul_vec(&start.r0), &e));
        Ok(FlowEnclosure {
            t: start.t + RI::point(d.h),
            center,
            c_mat: c_new.as_slice().to_vec(),
            r0: start.r0.clone(),
            q: q_new.as_slice().to_vec(),
            r: vec_add(&carried, &fresh),
        })
    }

    pub fn record(&self) -> TrajectoryRecord {
        TrajectoryRecord {
            t: self.enc.t.mid(),
            mid: self.enc.center_complex(),
            widths: self.enc.widths(),
        }
    }

    /// Integrate until the set has crossed `{Re x_s = 0}` and return the
    /// Bolzano-bracketed crossing.
    pub fn to_section(
        &mut self,
        mut record: Option<&mut Vec<TrajectoryRecord>>,
    ) -> Result<SectionCrossing, IntegratorError> {
        let s = self.sys.section_var;
        if self.enc.hull()[s].re.hi() >= 0.0 {
            return Err(IntegratorError::InvalidConfig("initial set not before the section".into()));
        }
        if let Some(r) = record.as_deref_mut() {
            r.push(self.record());
        }
        // latest (step, tau) with the whole set strictly before the section
        let mut prev: Option<StepData> = None;
        loop {
            let hull = self.enc.hull();
            let re = hull[s].re;
            // aim just past the section so the step ends strictly beyond it
            let speed = self
                .sys
                .tape
                .eval(&hull)?
                .get(s)
                .map(|f| f.re.lo())
                .unwrap_or(0.0)
                .max(1e-3);
            let reach = (-re.lo()) / speed;
            let cap = (reach + 1e-3 + 10.0 * re.width()).max(self.cfg.h_min);
            let data = self.step(cap).map_err(|e| match e {
                IntegratorError::MaxStepsExceeded => IntegratorError::NoCrossing,
                e => e,
            })?;
            if let Some(r) = record.as_deref_mut() {
                r.push(self.record());
            }
            let end = self.enc.hull()[s].re;
            if end.hi() < 0.0 {
                prev = Some(data);
                continue;
            }
            if end.lo() <= 0.0 {
                // ends on the section: keep going, the negative side stays in `prev`
                if data.set_at(RI::ZERO)[s].re.hi() < 0.0 {
                    prev = Some(data);
                }
                continue;
            }
            return Ok(bracket_crossing(self.sys, &data, prev.as_ref()));
        }
    }
}

/// Bolzano bracketing inside the last step (falling back to the previous
/// step for the negative witness).
fn bracket_crossing(sys: &OdeSystem, data: &StepData, prev: Option<&StepData>) -> SectionCrossing {
    const BISECTIONS: usize = 8;
    let s = sys.section_var;
    let pos = |d: &StepData, t: f64| d.set_at(RI::point(t))[s].re.lo() > 0.0;
    let neg = |d: &StepData, t: f64| d.set_at(RI::point(t))[s].re.hi() < 0.0;
    let (mut a, mut b) = (0.0, data.h);
    for _ in 0..BISECTIONS {
        let m = 0.5 * (a + b);
        if pos(data, m) {
            b = m;
        } else {
            a = m;
        }
    }
    let tau_plus = b;
    let after = data.set_at(RI::point(tau_plus));
    if neg(data, 0.0) {
        let (mut a, mut b) = (0.0, tau_plus);
        for _ in 0..BISECTIONS {
            let m = 0.5 * (a + b);
            if neg(data, m) {
                a = m;
            } else {
                b = m;
            }
        }
        let tau = RI::new(a, tau_plus).expect("ordered");
        let state = data.set_at(tau);
        return SectionCrossing::from_state(sys, data.t0 + tau, state, data.set_at(RI::point(a)), after);
    }
    // the negative witness lies in the previous step
    let p = prev.expect("a step strictly before the section");
    let (mut a, mut b) = (0.0, p.h);
    for _ in 0..BISECTIONS {
        let m = 0.5 * (a + b);
        if neg(p, m) {
            a = m;
        } else {
            b = m;
        }
    }
    let tail = p.set_at(RI::new(a, p.h).expect("ordered"));
    let head = data.set_at(RI::new(0.0, tau_plus).expect("ordered"));
    let state = tail.iter().zip(&head).map(|(x, y)| x.hull(y)).collect();
    let t = (p.t0 + RI::point(a)).hull(&(data.t0 + RI::point(tau_plus)));
    SectionCrossing::from_state(sys, t, state, p.set_at(RI::point(a)), after)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrator::Mode;

    fn cx(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn inverse_of_rotation() {
        let th: f64 = 0.3;
        let q = DMatrix::from_row_slice(2, 2, &[th.cos(), -th.sin(), th.sin(), th.cos()]);
        let qi = verified_inverse_orthogonal(&q).unwrap();
        let prod = qi.mul_point(&q);
        assert!(prod.get(0, 0).contains(1.0) && prod.get(0, 1).contains(0.0));
    }

    #[test]
    fn apriori_for_growth() {
        let sys = OdeSystem::linear(&[vec![cx(1.0, 0.0)]]);
        let e = apriori_enclosure(&sys, &[ComplexBox::ONE], 0.1).unwrap();
        assert!(e[0].re.lo() <= 1.0 && e[0].re.hi() >= 0.1f64.exp());
    }

    #[test]
    fn apriori_for_constant_field() {
        let sys = OdeSystem::drift(1);
        let e = apriori_enclosure(&sys, &[ComplexBox::ZERO], 0.5).unwrap();
        assert!(e[0].re.contains(0.0) && e[0].re.contains(0.5));
    }

    #[test]
    fn rotation_returns() {
        let sys = OdeSystem::linear(&[vec![cx(0.0, 1.0)]]);
        let z0 = cx(0.6, -0.8);
        let enc = FlowEnclosure::from_boxes(&[ComplexBox::around(z0, 1e-10)]);
        let cfg = IntegratorConfig::fixed(20, 0.1, Mode::Rigorous);
        let mut it = RigorousIntegrator::new(&sys, cfg, enc).unwrap();
        let two_pi = 2.0 * std::f64::consts::PI;
        while it.enc.t.hi() < two_pi - 0.1 {
            it.step(0.1).unwrap();
        }
        let rest = two_pi - it.enc.t.mid();
        it.step(rest).unwrap();
        let h = it.enc.hull();
        // time is known to ~1e-15, the rotation is exact otherwise
        assert!(h[0].inflate(1e-14).contains(z0), "{:?}", h[0]);
        assert!(h[0].width() < 1e-9);
    }

    #[test]
    fn drift_bracket() {
        let sys = OdeSystem::drift(2);
        let enc = FlowEnclosure::from_boxes(&[ComplexBox::point(-5.0, -1.0), ComplexBox::ZERO]);
        let mut it = RigorousIntegrator::new(&sys, IntegratorConfig::default(), enc).unwrap();
        let c = it.to_section(None).unwrap();
        assert!(c.t_cross.contains(5.0));
        assert!(c.before[0].re.hi() < 0.0 && c.after[0].re.lo() > 0.0);
        assert!(c.u_at_section.im.contains(-1.0));
    }
}
