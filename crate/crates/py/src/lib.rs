//! Python bindings for `ap3-core`.
//!
//! Sets cross the boundary as sorted lists of residues, functions as
//! [`GridFn`] objects. Structured results come back as plain dicts.

use ap3_core::{bohr, lambda, minimizer, r3, varnavides, zp};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn to_py(e: ap3_core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn json_dict<'py, T: serde::Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn field(p: u64) -> PyResult<zp::PrimeField> {
    zp::PrimeField::new(p).map_err(to_py)
}

fn set(p: u64, members: Vec<usize>) -> PyResult<zp::IndicatorSet> {
    let field = field(p)?;
    if let Some(&bad) = members.iter().find(|&&n| n >= field.p()) {
        return Err(PyValueError::new_err(format!("{bad} is not a residue mod {p}")));
    }
    Ok(zp::IndicatorSet::from_members(field, members))
}

/// The field of residues mod a prime.
#[pyclass(name = "PrimeField", frozen, from_py_object)]
#[derive(Clone)]
struct PyPrimeField(zp::PrimeField);

#[pymethods]
impl PyPrimeField {
    #[new]
    fn new(p: u64) -> PyResult<Self> {
        field(p).map(Self)
    }

    #[getter]
    fn p(&self) -> usize {
        self.0.p()
    }

    fn inv(&self, a: usize) -> PyResult<usize> {
        self.0.inv(a % self.0.p()).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!("PrimeField({})", self.0.p())
    }
}

/// A function on the field, either `[0, 1]`-valued or (with `real=True`) arbitrary.
#[pyclass(name = "GridFn", frozen, from_py_object)]
#[derive(Clone)]
struct PyGridFn(zp::GridFn);

#[pymethods]
impl PyGridFn {
    #[new]
    #[pyo3(signature = (p, values, real = false))]
    fn new(p: u64, values: Vec<f64>, real: bool) -> PyResult<Self> {
        let field = field(p)?;
        let f = if real { zp::GridFn::real(field, values) } else { zp::GridFn::density(field, values) };
        f.map(Self).map_err(to_py)
    }

    #[staticmethod]
    fn indicator(p: u64, members: Vec<usize>) -> PyResult<Self> {
        Ok(Self(set(p, members)?.as_gridfn()))
    }

    #[getter]
    fn p(&self) -> usize {
        self.0.p()
    }

    #[getter]
    fn values(&self) -> Vec<f64> {
        self.0.values().to_vec()
    }

    fn mean(&self) -> f64 {
        self.0.mean()
    }

    fn lambda_direct(&self) -> f64 {
        lambda::lambda_direct(&self.0)
    }

    fn lambda_spectral(&self) -> PyResult<f64> {
        lambda::lambda_spectral(&self.0).map_err(to_py)
    }

    /// `p^2` times the partial derivatives of Lambda.
    fn gradient(&self) -> Vec<f64> {
        lambda::gradient_field(&self.0).into_values()
    }

    /// Nearest indicator and its L1 distance.
    fn round(&self) -> (Vec<usize>, f64) {
        let (c, d) = minimizer::round_to_indicator(&self.0);
        (c.members(), d)
    }

    /// Best gradient sublevel set: `(level, members, distance)`.
    fn level_set(&self) -> (f64, Vec<usize>, f64) {
        let split = minimizer::extract_level_set(&self.0);
        (split.level, split.set.members(), split.distance)
    }

    #[pyo3(signature = (tol = 1e-6))]
    fn first_order<'py>(&self, py: Python<'py>, tol: f64) -> PyResult<Bound<'py, PyAny>> {
        let exempt = zp::IndicatorSet::empty(self.0.field());
        json_dict(py, &minimizer::check_first_order(&self.0, &exempt, tol))
    }

    /// Run the smoothing pipeline with the default parameter choices.
    fn bohr_pipeline<'py>(&self, py: Python<'py>, theta: f64) -> PyResult<Bound<'py, PyAny>> {
        let report = bohr::third_bullet_pipeline(&self.0, theta).map_err(to_py)?;
        json_dict(py, &report)
    }

    fn __len__(&self) -> usize {
        self.0.p()
    }

    fn __repr__(&self) -> String {
        format!("GridFn(p={}, mean={:.6})", self.0.p(), self.0.mean())
    }
}

#[pyfunction]
fn lambda_indicator(p: u64, members: Vec<usize>) -> PyResult<f64> {
    Ok(lambda::lambda_indicator(&set(p, members)?))
}

/// Ordered nondegenerate progressions `(a, d)`, `d != 0`, inside the set.
#[pyfunction]
fn count_t3(p: u64, members: Vec<usize>) -> PyResult<u64> {
    Ok(lambda::count_t3(&set(p, members)?))
}

/// Exact integer residual of the complement identity; always 0.
#[pyfunction]
fn complement_residual(p: u64, members: Vec<usize>) -> PyResult<i128> {
    Ok(lambda::complement_identity_residual_exact(&set(p, members)?))
}

#[pyfunction]
#[pyo3(signature = (p, theta, seed = 0, restarts = 8, max_iters = 200_000))]
fn minimize<'py>(
    py: Python<'py>,
    p: u64,
    theta: f64,
    seed: u64,
    restarts: usize,
    max_iters: usize,
) -> PyResult<(PyGridFn, Bound<'py, PyDict>)> {
    let mut config = minimizer::MinimizerConfig::new(theta).with_seed(seed).with_restarts(restarts);
    config.max_iters = max_iters;
    let state = minimizer::minimize(field(p)?, &config).map_err(to_py)?;
    let info = PyDict::new(py);
    info.set_item("lambda", state.lambda())?;
    info.set_item("converged", state.converged)?;
    info.set_item("iterations", state.iter)?;
    info.set_item("restart", state.restart)?;
    Ok((PyGridFn(state.f().clone()), info))
}

/// Exact `r_3([n])`: `(value, witness, method)`.
#[pyfunction]
#[pyo3(signature = (n, budget = r3::DEFAULT_BUDGET))]
fn r3_exact(n: usize, budget: u64) -> PyResult<(usize, Vec<usize>, &'static str)> {
    let c = r3::r3_exact(n, budget).map_err(to_py)?;
    Ok((c.value, c.witness.members().to_vec(), c.method.as_str()))
}

#[pyfunction]
fn behrend(n: usize) -> PyResult<Vec<usize>> {
    Ok(r3::behrend_construct(n).map_err(to_py)?.members().to_vec())
}

#[pyfunction]
fn is_ap_free(n: usize, members: Vec<usize>) -> PyResult<bool> {
    Ok(r3::is_ap_free(&r3::IntSet::new(n, members).map_err(to_py)?))
}

/// Members of the length-`n` progression family containing a fixed 3-AP.
#[pyfunction]
fn containment_count(n: usize, p: u64) -> PyResult<u64> {
    varnavides::containment_count(n, field(p)?).map_err(to_py)
}

#[pyfunction]
fn bohr_set(freqs: Vec<usize>, eps0: f64, p: u64) -> PyResult<Vec<usize>> {
    Ok(bohr::bohr_set(&freqs, eps0, field(p)?).map_err(to_py)?.members.members())
}

#[pymodule]
fn ap3(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", ap3_core::report::VERSION)?;
    m.add_class::<PyPrimeField>()?;
    m.add_class::<PyGridFn>()?;
    m.add_function(wrap_pyfunction!(lambda_indicator, m)?)?;
    m.add_function(wrap_pyfunction!(count_t3, m)?)?;
    m.add_function(wrap_pyfunction!(complement_residual, m)?)?;
    m.add_function(wrap_pyfunction!(minimize, m)?)?;
    m.add_function(wrap_pyfunction!(r3_exact, m)?)?;
    m.add_function(wrap_pyfunction!(behrend, m)?)?;
    m.add_function(wrap_pyfunction!(is_ap_free, m)?)?;
    m.add_function(wrap_pyfunction!(containment_count, m)?)?;
    m.add_function(wrap_pyfunction!(bohr_set, m)?)?;
    Ok(())
}
