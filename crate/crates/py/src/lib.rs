//! Python bindings. Reports come back as plain dicts built from the same
//! JSON documents the command-line tool prints.

use std::path::PathBuf;

use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList, PyTuple};
use serde_json::Value;

use s1geom::cli::{
    analyze_report, focal_report, gauss_probe_report, normal_form_report, trace_report, trajectory_report,
};
use s1geom::{Error, Jet, MapGerm};

create_exception!(s1geom, S1GeomError, PyException, "Domain, degeneracy, precondition or consistency failure.");

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Usage(_) | Error::Parse { .. } => PyValueError::new_err(e.to_string()),
        _ => S1GeomError::new_err((e.kind(), e.to_string())),
    }
}

fn to_py<'py>(py: Python<'py>, v: &Value) -> PyResult<Bound<'py, PyAny>> {
    Ok(match v {
        Value::Null => py.None().into_bound(py),
        Value::Bool(b) => b.into_pyobject(py)?.to_owned().into_any(),
        Value::Number(n) => match n.as_i64() {
            Some(i) if !n.is_f64() => i.into_pyobject(py)?.into_any(),
            _ => n.as_f64().unwrap_or(f64::NAN).into_pyobject(py)?.into_any(),
        },
        Value::String(s) => s.into_pyobject(py)?.into_any(),
        Value::Array(items) => {
            let list = PyList::empty(py);
            for x in items {
                list.append(to_py(py, x)?)?;
            }
            list.into_any()
        }
        Value::Object(map) => {
            let dict = PyDict::new(py);
            for (k, x) in map {
                dict.set_item(k, to_py(py, x)?)?;
            }
            dict.into_any()
        }
    })
}

fn report<'py>(py: Python<'py>, r: s1geom::Result<Value>) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &r.map_err(py_err)?)
}

/// Truncated multivariate power series.
#[pyclass(name = "Jet", module = "s1geom", skip_from_py_object)]
#[derive(Clone)]
struct PyJet {
    inner: Jet,
}

fn check_exponent(j: &Jet, e: &[usize]) -> PyResult<()> {
    if e.len() != j.nvars() || e.iter().sum::<usize>() > j.order() {
        return Err(PyValueError::new_err(format!("bad exponent {e:?}")));
    }
    Ok(())
}

fn wrap(j: s1geom::Result<Jet>) -> PyResult<PyJet> {
    Ok(PyJet { inner: j.map_err(py_err)? })
}

#[pymethods]
impl PyJet {
    /// The zero jet in `nvars` variables truncated at total degree `order`.
    #[new]
    fn new(nvars: usize, order: usize) -> PyResult<Self> {
        if nvars == 0 || nvars > s1geom::jet::MAX_VARS {
            return Err(PyValueError::new_err(format!("nvars must be 1..={}", s1geom::jet::MAX_VARS)));
        }
        Ok(PyJet { inner: Jet::zero(nvars, order) })
    }

    #[staticmethod]
    fn var(nvars: usize, order: usize, index: usize) -> PyResult<Self> {
        if index >= nvars {
            return Err(PyValueError::new_err("variable index out of range"));
        }
        Self::new(nvars, order)?;
        Ok(PyJet { inner: Jet::var(nvars, order, index) })
    }

    #[staticmethod]
    fn constant(nvars: usize, order: usize, value: f64) -> PyResult<Self> {
        Self::new(nvars, order)?;
        Ok(PyJet { inner: Jet::constant(nvars, order, value) })
    }

    #[getter]
    fn nvars(&self) -> usize {
        self.inner.nvars()
    }

    #[getter]
    fn order(&self) -> usize {
        self.inner.order()
    }

    fn coeff(&self, exponent: Vec<usize>) -> PyResult<f64> {
        check_exponent(&self.inner, &exponent)?;
        Ok(self.inner.coeff(&exponent))
    }

    fn set_coeff(&mut self, exponent: Vec<usize>, value: f64) -> PyResult<()> {
        check_exponent(&self.inner, &exponent)?;
        self.inner.set_coeff(&exponent, value);
        Ok(())
    }

    /// Coefficients in graded order.
    fn coeffs(&self) -> Vec<f64> {
        self.inner.coeffs().to_vec()
    }

    /// Nonzero terms as `(exponent, coefficient)` pairs.
    fn terms<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyList>> {
        let out = PyList::empty(py);
        let n = self.inner.nvars();
        for (e, c) in self.inner.terms().filter(|(_, c)| *c != 0.0) {
            out.append((PyTuple::new(py, &e[..n])?, c))?;
        }
        Ok(out)
    }

    fn eval(&self, point: Vec<f64>) -> PyResult<f64> {
        if point.len() != self.inner.nvars() {
            return Err(PyValueError::new_err("point has the wrong dimension"));
        }
        Ok(self.inner.eval(&point))
    }

    fn partial(&self, var: usize) -> PyResult<PyJet> {
        wrap(self.inner.partial(var))
    }

    fn compose(&self, inner: Vec<PyRef<'_, PyJet>>) -> PyResult<PyJet> {
        let jets: Vec<Jet> = inner.iter().map(|j| j.inner.clone()).collect();
        wrap(self.inner.compose(&jets))
    }

    fn sqrt(&self) -> PyResult<PyJet> {
        wrap(self.inner.sqrt())
    }

    fn recip(&self) -> PyResult<PyJet> {
        wrap(self.inner.recip())
    }

    fn __add__(&self, other: PyRef<'_, PyJet>) -> PyResult<PyJet> {
        wrap(self.inner.arith(&other.inner, s1geom::jet::ArithOp::Add))
    }

    fn __sub__(&self, other: PyRef<'_, PyJet>) -> PyResult<PyJet> {
        wrap(self.inner.arith(&other.inner, s1geom::jet::ArithOp::Sub))
    }

    fn __mul__(&self, other: PyRef<'_, PyJet>) -> PyResult<PyJet> {
        wrap(self.inner.arith(&other.inner, s1geom::jet::ArithOp::Mul))
    }

    fn __neg__(&self) -> PyJet {
        PyJet { inner: -&self.inner }
    }

    fn __eq__(&self, other: PyRef<'_, PyJet>) -> bool {
        self.inner == other.inner
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.inner)
    }
}

/// Map germ `(u, v, s) -> R^3` given by three expressions.
#[pyclass(name = "MapGerm", module = "s1geom", skip_from_py_object)]
#[derive(Clone)]
struct PyMapGerm {
    inner: MapGerm,
}

#[pymethods]
impl PyMapGerm {
    #[new]
    fn new(text: &str) -> PyResult<Self> {
        Ok(PyMapGerm { inner: MapGerm::parse(text).map_err(py_err)? })
    }

    fn components(&self) -> Vec<String> {
        self.inner.components().iter().map(|c| c.to_string()).collect()
    }

    #[pyo3(signature = (u, v, s = 0.0))]
    fn eval(&self, u: f64, v: f64, s: f64) -> PyResult<(f64, f64, f64)> {
        let p = self.inner.eval(u, v, s).map_err(py_err)?;
        Ok((p[0], p[1], p[2]))
    }

    /// Jets of the three components in `(u, v, s)` about `point`.
    #[pyo3(signature = (point = (0.0, 0.0, 0.0), order = 8))]
    fn jet(&self, point: (f64, f64, f64), order: usize) -> PyResult<Vec<PyJet>> {
        let js = self.inner.jet_at([point.0, point.1, point.2], order).map_err(py_err)?;
        Ok(js.into_iter().map(|inner| PyJet { inner }).collect())
    }

    fn __str__(&self) -> String {
        self.inner.to_string()
    }

    fn __repr__(&self) -> String {
        format!("MapGerm({:?})", self.inner.to_string())
    }
}

fn germ_of(obj: &Bound<'_, PyAny>) -> PyResult<MapGerm> {
    if let Ok(g) = obj.cast::<PyMapGerm>() {
        return Ok(g.borrow().inner.clone());
    }
    let text: String = obj.extract()?;
    MapGerm::parse(&text).map_err(py_err)
}

fn check_order(order: usize) -> PyResult<usize> {
    if (4..=12).contains(&order) {
        Ok(order)
    } else {
        Err(PyValueError::new_err(format!("order must be in 4..=12, got {order}")))
    }
}

/// Normal form and coefficient tables; optionally checks invariance under
/// `check_invariance` seeded random equivalences.
#[pyfunction]
#[pyo3(signature = (germ, order = 8, check_invariance = 0, seed = 0))]
fn reduce<'py>(
    py: Python<'py>,
    germ: &Bound<'py, PyAny>,
    order: usize,
    check_invariance: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let f = germ_of(germ)?;
    report(py, normal_form_report(&f, check_order(order)?, check_invariance, seed))
}

#[pyfunction]
#[pyo3(signature = (germ, point = (0.0, 0.0), s = 0.0, order = 8))]
fn analyze<'py>(
    py: Python<'py>,
    germ: &Bound<'py, PyAny>,
    point: (f64, f64),
    s: f64,
    order: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let f = germ_of(germ)?;
    report(py, analyze_report(&f, check_order(order)?, [point.0, point.1], s))
}

#[pyfunction]
#[pyo3(signature = (germ, grid = "0.1:0.5:7", order = 8, out = None))]
fn trace<'py>(
    py: Python<'py>,
    germ: &Bound<'py, PyAny>,
    grid: &str,
    order: usize,
    out: Option<PathBuf>,
) -> PyResult<Bound<'py, PyAny>> {
    let f = germ_of(germ)?;
    report(py, trace_report(&f, check_order(order)?, grid, out.as_deref()))
}

#[pyfunction]
#[pyo3(signature = (germ, s = 0.0, point = None, out = None))]
fn focal<'py>(
    py: Python<'py>,
    germ: &Bound<'py, PyAny>,
    s: f64,
    point: Option<(f64, f64)>,
    out: Option<PathBuf>,
) -> PyResult<Bound<'py, PyAny>> {
    let f = germ_of(germ)?;
    report(py, focal_report(&f, s, point.map(|p| [p.0, p.1]), out.as_deref()))
}

#[pyfunction]
#[pyo3(signature = (germ, s_tilde = 0.05, n_theta = 16, n_k = 8, order = 8))]
fn gauss_probe<'py>(
    py: Python<'py>,
    germ: &Bound<'py, PyAny>,
    s_tilde: f64,
    n_theta: usize,
    n_k: usize,
    order: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let f = germ_of(germ)?;
    report(py, gauss_probe_report(&f, check_order(order)?, s_tilde, n_theta, n_k))
}

#[pyfunction]
#[pyo3(signature = (germ, order = 8))]
fn trajectory<'py>(py: Python<'py>, germ: &Bound<'py, PyAny>, order: usize) -> PyResult<Bound<'py, PyAny>> {
    let f = germ_of(germ)?;
    report(py, trajectory_report(&f, check_order(order)?))
}

#[pymodule(name = "s1geom")]
fn s1geom_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyJet>()?;
    m.add_class::<PyMapGerm>()?;
    m.add("S1GeomError", m.py().get_type::<S1GeomError>())?;
    m.add_function(wrap_pyfunction!(reduce, m)?)?;
    m.add_function(wrap_pyfunction!(analyze, m)?)?;
    m.add_function(wrap_pyfunction!(trace, m)?)?;
    m.add_function(wrap_pyfunction!(focal, m)?)?;
    m.add_function(wrap_pyfunction!(gauss_probe, m)?)?;
    m.add_function(wrap_pyfunction!(trajectory, m)?)?;
    Ok(())
}
