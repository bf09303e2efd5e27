//! Python bindings for `stokes_core`.
//!
//! Build with `maturin develop --features extension-module` or
//! `pip install --no-build-isolation .` from this directory.

use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use serde_json::Value;

use stokes_core::certificate::{certify as core_certify, CertificateParams};
use stokes_core::extended::{apply_s, eval_f, ExtendedState};
use stokes_core::integrator::{DomainGuard, IntegratorConfig, OdeSystem};
use stokes_core::quadrature::constant_a as core_constant_a;
use stokes_core::stokes::{fast_crossing, initial_set, CrossingSummary};
use stokes_core::{ComplexBox, RealInterval};

fn runtime<E: std::fmt::Display>(e: E) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

fn to_py<'py>(py: Python<'py>, v: &Value) -> PyResult<Bound<'py, PyAny>> {
    Ok(match v {
        Value::Null => py.None().into_bound(py),
        Value::Bool(b) => b.into_pyobject(py)?.to_owned().into_any(),
        Value::Number(n) => match n.as_i64() {
            Some(i) => i.into_pyobject(py)?.into_any(),
            None => n.as_f64().unwrap_or(f64::NAN).into_pyobject(py)?.into_any(),
        },
        Value::String(s) => s.into_pyobject(py)?.into_any(),
        Value::Array(a) => {
            let l = PyList::empty(py);
            for x in a {
                l.append(to_py(py, x)?)?;
            }
            l.into_any()
        }
        Value::Object(m) => {
            let d = PyDict::new(py);
            for (k, x) in m {
                d.set_item(k, to_py(py, x)?)?;
            }
            d.into_any()
        }
    })
}

/// Closed real interval with outward rounding.
#[pyclass(name = "Interval", frozen, from_py_object)]
#[derive(Clone, Copy)]
struct PyInterval(RealInterval);

#[pymethods]
impl PyInterval {
    #[new]
    #[pyo3(signature = (lo, hi=None))]
    fn new(lo: f64, hi: Option<f64>) -> PyResult<Self> {
        RealInterval::new(lo, hi.unwrap_or(lo))
            .map(PyInterval)
            .map_err(|e| PyValueError::new_err(e.to_string()))
    }

    #[getter]
    fn lo(&self) -> f64 {
        self.0.lo()
    }

    #[getter]
    fn hi(&self) -> f64 {
        self.0.hi()
    }

    fn mid(&self) -> f64 {
        self.0.mid()
    }

    fn width(&self) -> f64 {
        self.0.width()
    }

    fn contains(&self, x: f64) -> bool {
        self.0.contains(x)
    }

    fn sqrt(&self) -> PyResult<Self> {
        self.0.sqrt().map(PyInterval).map_err(|e| PyValueError::new_err(e.to_string()))
    }

    fn __add__(&self, o: &Self) -> Self {
        PyInterval(self.0 + o.0)
    }

    fn __sub__(&self, o: &Self) -> Self {
        PyInterval(self.0 - o.0)
    }

    fn __mul__(&self, o: &Self) -> Self {
        PyInterval(self.0 * o.0)
    }

    fn __truediv__(&self, o: &Self) -> PyResult<Self> {
        self.0.checked_div(o.0).map(PyInterval).map_err(|e| PyValueError::new_err(e.to_string()))
    }

    fn __neg__(&self) -> Self {
        PyInterval(-self.0)
    }

    fn __repr__(&self) -> String {
        format!("Interval({:e}, {:e})", self.0.lo(), self.0.hi())
    }
}

/// Rectangle in the complex plane.
#[pyclass(name = "ComplexBox", frozen, from_py_object)]
#[derive(Clone, Copy)]
struct PyComplexBox(ComplexBox);

#[pymethods]
impl PyComplexBox {
    #[new]
    fn new(re: PyInterval, im: PyInterval) -> Self {
        PyComplexBox(ComplexBox::new(re.0, im.0))
    }

    #[staticmethod]
    fn point(z: Complex64) -> Self {
        PyComplexBox(ComplexBox::from_complex(z))
    }

    #[getter]
    fn re(&self) -> PyInterval {
        PyInterval(self.0.re)
    }

    #[getter]
    fn im(&self) -> PyInterval {
        PyInterval(self.0.im)
    }

    fn mid(&self) -> Complex64 {
        self.0.mid()
    }

    fn contains(&self, z: Complex64) -> bool {
        self.0.contains(z)
    }

    fn abs(&self) -> PyInterval {
        PyInterval(self.0.abs())
    }

    fn __add__(&self, o: &Self) -> Self {
        PyComplexBox(self.0 + o.0)
    }

    fn __sub__(&self, o: &Self) -> Self {
        PyComplexBox(self.0 - o.0)
    }

    fn __mul__(&self, o: &Self) -> Self {
        PyComplexBox(self.0 * o.0)
    }

    fn __truediv__(&self, o: &Self) -> PyResult<Self> {
        self.0.checked_div(&o.0).map(PyComplexBox).map_err(|e| PyValueError::new_err(e.to_string()))
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.0)
    }
}

/// Interval check of the contraction constants; returns the full report as a dict.
#[pyfunction]
#[pyo3(signature = (kappa, gamma, rho1, rho2, eta=None))]
fn certify<'py>(
    py: Python<'py>,
    kappa: f64,
    gamma: f64,
    rho1: f64,
    rho2: f64,
    eta: Option<f64>,
) -> PyResult<Bound<'py, PyAny>> {
    let mut p = CertificateParams::new(kappa, gamma, rho1, rho2);
    p.eta = eta;
    let rep = core_certify(&p).map_err(runtime)?;
    to_py(py, &rep.to_json())
}

/// Enclosure `(lo, hi)` of the strip-width integral.
#[pyfunction]
#[pyo3(signature = (panels=stokes_core::quadrature::DEFAULT_PANELS))]
fn constant_a(panels: usize) -> PyResult<PyInterval> {
    core_constant_a(panels).map(PyInterval).map_err(runtime)
}

fn state_from(v: &[Complex64]) -> PyResult<ExtendedState<Complex64>> {
    if v.len() != 6 {
        return Err(PyValueError::new_err("expected six components (U, W, X, Y, A, B)"));
    }
    Ok(ExtendedState::from_slice(v))
}

/// Extended vector field at a point `(U, W, X, Y, A, B)`.
#[pyfunction]
fn extended_field(state: Vec<Complex64>) -> PyResult<Vec<Complex64>> {
    let d = eval_f(&state_from(&state)?).map_err(runtime)?;
    Ok(d.to_array().to_vec())
}

/// Image of a point under the reversing symmetry.
#[pyfunction]
fn symmetry(state: Vec<Complex64>) -> PyResult<Vec<Complex64>> {
    Ok(apply_s(&state_from(&state)?).to_array().to_vec())
}

/// Fast-mode crossing of `{Re U = 0}` from the centre of the certified box.
#[pyfunction]
#[pyo3(signature = (start_rho=7.2, re_u0=-2000.0, eta=1000.0, rho0=7.12, order=20))]
fn crossing<'py>(
    py: Python<'py>,
    start_rho: f64,
    re_u0: f64,
    eta: f64,
    rho0: f64,
    order: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let set = initial_set(eta, start_rho, re_u0).map_err(runtime)?;
    let cfg = IntegratorConfig {
        order,
        ..Default::default()
    };
    let x0 = set.midpoint_state().map_err(runtime)?;
    let c = fast_crossing(&OdeSystem::extended(), x0, &cfg, Some(DomainGuard { rho0 }), None).map_err(runtime)?;
    let s = CrossingSummary::new("fast", &c);
    let d = PyDict::new(py);
    d.set_item("t", s.t_cross.mid())?;
    d.set_item("im_u", s.im_u.mid())?;
    d.set_item("re_y", s.re_y.mid())?;
    d.set_item("theta_rho", s.theta_rho)?;
    Ok(d)
}

#[pymodule]
fn stokes_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyInterval>()?;
    m.add_class::<PyComplexBox>()?;
    m.add_function(wrap_pyfunction!(certify, m)?)?;
    m.add_function(wrap_pyfunction!(constant_a, m)?)?;
    m.add_function(wrap_pyfunction!(extended_field, m)?)?;
    m.add_function(wrap_pyfunction!(symmetry, m)?)?;
    m.add_function(wrap_pyfunction!(crossing, m)?)?;
    Ok(())
}
