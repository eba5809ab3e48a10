//! Python bindings: objectives, schedules, single optimizer steps, the rate
//! engine, and whole experiments driven by a TOML config.

use momentum_lab::cli::{execute, parse_config, verify_assumptions as verify, CliError};
use momentum_lab::diagnostics::{self, TimeAverageOrder};
use momentum_lab::optimizers::{self, map_shb_to_msgd as map_shb, AdagradNormState, MsgdState, SgdState, ShbState};
use momentum_lab::{catalog as objective_catalog, Objective, ParamVector, RngStream, StepSchedule};
use pyo3::exceptions::{PyFloatingPointError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use serde::Serialize;

fn value_err(e: impl ToString) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn diverged(e: optimizers::Divergence) -> PyErr {
    PyFloatingPointError::new_err(format!("iterate diverged at step {}", e.step))
}

/// Converts any serializable value into plain Python objects.
fn to_py<'py>(py: Python<'py>, value: &impl Serialize) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(value_err)?;
    py.import("json")?.call_method1("loads", (text,))
}

fn vector(xs: Vec<f64>) -> ParamVector {
    ParamVector::new(xs)
}

fn check_dim(obj: &Objective, theta: &[f64]) -> PyResult<()> {
    if theta.len() != obj.dim() {
        return Err(value_err(format!("expected {} coordinates, got {}", obj.dim(), theta.len())));
    }
    Ok(())
}

#[pyclass(name = "Objective", frozen, module = "sgdlab")]
#[derive(Clone)]
struct PyObjective {
    inner: Objective,
}

#[pymethods]
impl PyObjective {
    #[staticmethod]
    #[pyo3(signature = (c = 1.0, dim = 1))]
    fn quad(c: f64, dim: usize) -> PyResult<Self> {
        Ok(PyObjective { inner: Objective::quad(c, dim).map_err(value_err)? })
    }

    #[staticmethod]
    fn sin2() -> Self {
        PyObjective { inner: Objective::sin2() }
    }

    #[staticmethod]
    fn cos2() -> Self {
        PyObjective { inner: Objective::cos2() }
    }

    #[staticmethod]
    fn quartic() -> Self {
        PyObjective { inner: Objective::quartic() }
    }

    #[staticmethod]
    fn plateau() -> Self {
        PyObjective { inner: Objective::plateau() }
    }

    #[staticmethod]
    fn finite_sum_quad(centers: Vec<Vec<f64>>) -> PyResult<Self> {
        let centers = centers.into_iter().map(vector).collect();
        Ok(PyObjective { inner: Objective::finite_sum_quad(centers).map_err(value_err)? })
    }

    #[staticmethod]
    fn finite_sum_quad_hypercube(dim: usize) -> PyResult<Self> {
        Ok(PyObjective { inner: Objective::finite_sum_quad_hypercube(dim).map_err(value_err)? })
    }

    #[getter]
    fn id(&self) -> String {
        self.inner.id().to_string()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn infimum(&self) -> f64 {
        self.inner.infimum()
    }

    #[getter]
    fn known_lipschitz(&self) -> Option<f64> {
        self.inner.known_lipschitz()
    }

    /// `(lower, upper)` corners of the window constants are certified on.
    #[getter]
    fn window(&self) -> (Vec<f64>, Vec<f64>) {
        let w = self.inner.window();
        (w.lower.clone(), w.upper.clone())
    }

    fn eval(&self, theta: Vec<f64>) -> PyResult<f64> {
        check_dim(&self.inner, &theta)?;
        Ok(self.inner.eval(&vector(theta)))
    }

    fn grad(&self, theta: Vec<f64>) -> PyResult<Vec<f64>> {
        check_dim(&self.inner, &theta)?;
        Ok(self.inner.grad(&vector(theta)).as_slice().to_vec())
    }

    /// Distance from `theta` to the stationary set.
    fn distance(&self, theta: Vec<f64>) -> PyResult<f64> {
        check_dim(&self.inner, &theta)?;
        momentum_lab::objectives::distance_to_stationary_set(&self.inner, &vector(theta)).map_err(value_err)
    }

    fn __repr__(&self) -> String {
        format!("Objective({}, dim={})", self.inner.id(), self.inner.dim())
    }
}

#[pyclass(name = "Schedule", frozen, module = "sgdlab")]
#[derive(Clone, Copy)]
struct PySchedule {
    inner: StepSchedule,
}

#[pymethods]
impl PySchedule {
    #[staticmethod]
    fn constant(c0: f64) -> PyResult<Self> {
        Ok(PySchedule { inner: StepSchedule::constant(c0).map_err(value_err)? })
    }

    /// `c0 / (n + n0)^gamma`.
    #[staticmethod]
    #[pyo3(signature = (c0, gamma = 1.0, n0 = 0))]
    fn power(c0: f64, gamma: f64, n0: u64) -> PyResult<Self> {
        Ok(PySchedule { inner: StepSchedule::power(c0, gamma, n0).map_err(value_err)? })
    }

    #[staticmethod]
    #[pyo3(signature = (c0 = 1.0))]
    fn harmonic(c0: f64) -> PyResult<Self> {
        Ok(PySchedule { inner: StepSchedule::harmonic(c0).map_err(value_err)? })
    }

    fn value(&self, n: u64) -> PyResult<f64> {
        if n == 0 {
            return Err(value_err("steps are numbered from 1"));
        }
        Ok(self.inner.value(n))
    }

    fn partial_sum(&self, n: u64) -> f64 {
        self.inner.partial_sum(n)
    }

    /// Robbins-Monro classification as a dict.
    fn validate<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner.validate())
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.inner)
    }
}

#[pyclass(name = "RngStream", module = "sgdlab")]
struct PyRng {
    inner: RngStream,
}

#[pymethods]
impl PyRng {
    #[new]
    #[pyo3(signature = (base_seed, substream = 0))]
    fn new(base_seed: u64, substream: u64) -> Self {
        PyRng { inner: RngStream::new(base_seed, substream) }
    }

    fn uniform(&mut self) -> f64 {
        self.inner.uniform()
    }

    fn standard_normal(&mut self) -> f64 {
        self.inner.standard_normal()
    }
}

#[pyfunction]
fn catalog() -> Vec<PyObjective> {
    objective_catalog().into_iter().map(|inner| PyObjective { inner }).collect()
}

/// One SGD step, returning the new iterate.
#[pyfunction]
fn sgd_step(theta: Vec<f64>, grad: Vec<f64>, eps: f64) -> PyResult<Vec<f64>> {
    if theta.len() != grad.len() {
        return Err(value_err("theta and grad must have equal length"));
    }
    let mut s = SgdState::new(vector(theta));
    s.step(&vector(grad), eps).map_err(diverged)?;
    Ok(s.theta.as_slice().to_vec())
}

/// One momentum step `v ← αv + εg; θ ← θ − v`, returning `(θ, v)`.
#[pyfunction]
fn msgd_step(theta: Vec<f64>, v: Vec<f64>, grad: Vec<f64>, alpha: f64, eps: f64) -> PyResult<(Vec<f64>, Vec<f64>)> {
    if theta.len() != v.len() || theta.len() != grad.len() {
        return Err(value_err("theta, v and grad must have equal length"));
    }
    let mut s = MsgdState::new(vector(theta), vector(v));
    s.step(&vector(grad), alpha, eps).map_err(diverged)?;
    Ok((s.theta.as_slice().to_vec(), s.v.as_slice().to_vec()))
}

/// One heavy-ball step `v ← βv + (1−β)g; θ ← θ − γv`, returning `(θ, v)`.
#[pyfunction]
fn shb_step(theta: Vec<f64>, v: Vec<f64>, grad: Vec<f64>, beta: f64, gamma: f64) -> PyResult<(Vec<f64>, Vec<f64>)> {
    if theta.len() != v.len() || theta.len() != grad.len() {
        return Err(value_err("theta, v and grad must have equal length"));
    }
    let mut s = ShbState::new(vector(theta), vector(v));
    s.step(&vector(grad), beta, gamma).map_err(diverged)?;
    Ok((s.theta.as_slice().to_vec(), s.v.as_slice().to_vec()))
}

/// One norm-form AdaGrad step, returning `(θ, S)`.
#[pyfunction]
fn adagrad_norm_step(theta: Vec<f64>, s: f64, grad: Vec<f64>, alpha0: f64) -> PyResult<(Vec<f64>, f64)> {
    if theta.len() != grad.len() {
        return Err(value_err("theta and grad must have equal length"));
    }
    let mut state = AdagradNormState::new(vector(theta));
    state.s = s;
    state.step(&vector(grad), alpha0).map_err(diverged)?;
    Ok((state.theta.as_slice().to_vec(), state.s))
}

/// Heavy-ball coefficients in momentum form: `(α_n, ε_n)`.
#[pyfunction]
fn map_shb_to_msgd(gamma_n: f64, gamma_prev: f64, beta_n: f64) -> (f64, f64) {
    let m = map_shb(gamma_n, gamma_prev, beta_n);
    (m.alpha, m.epsilon)
}

#[pyfunction]
fn riemann_zeta(s: f64) -> f64 {
    diagnostics::riemann_zeta(s)
}

#[pyfunction]
fn compute_p(m: f64, schedule: PyRef<'_, PySchedule>) -> PyResult<f64> {
    diagnostics::compute_p(m, &schedule.inner).map_err(value_err)
}

/// `(order, q)` where order is `power`, `log_over_t` or `one_over_t`.
#[pyfunction]
fn classify_time_average_order(q: f64) -> (&'static str, Option<f64>) {
    match diagnostics::classify_time_average_order(q) {
        TimeAverageOrder::Power { q } => ("power", Some(q)),
        TimeAverageOrder::LogOverT => ("log_over_t", None),
        TimeAverageOrder::OneOverT => ("one_over_t", None),
    }
}

#[pyfunction]
fn time_average(series: Vec<f64>) -> Vec<f64> {
    diagnostics::time_average(&series)
}

#[pyfunction]
fn loglog_slope(ts: Vec<f64>, ys: Vec<f64>) -> PyResult<f64> {
    diagnostics::loglog_slope(&ts, &ys).map_err(value_err)
}

/// Fits `ln series[k]` against `Σ_{i≤n[k]} ε_i`.
#[pyfunction]
#[pyo3(signature = (n, series, schedule, burn_in = diagnostics::DEFAULT_BURN_IN))]
fn fit_decay_exponent<'py>(py: Python<'py>, n: Vec<u64>, series: Vec<f64>, schedule: PyRef<'_, PySchedule>, burn_in: f64) -> PyResult<Bound<'py, PyAny>> {
    let fit = diagnostics::fit_decay_exponent_with(&n, &series, |k| schedule.inner.value(k), burn_in).map_err(value_err)?;
    to_py(py, &fit)
}

/// `(passed, tail_increment_ratio)`.
#[pyfunction]
#[pyo3(signature = (series, tail_fraction = 0.5, tau = 0.05))]
fn plateau_check(series: Vec<f64>, tail_fraction: f64, tau: f64) -> PyResult<(bool, f64)> {
    let r = diagnostics::plateau_check(&series, tail_fraction, tau).map_err(value_err)?;
    Ok((r.pass, r.tail_increment_ratio))
}

fn cli_err(e: CliError) -> PyErr {
    value_err(e)
}

/// Runs the experiment a TOML config describes and returns a dict with the
/// `trajectory_csv`, the `summary` (parsed JSON) and the `exit_code`.
/// Nothing is written to disk.
#[pyfunction]
fn run_config<'py>(py: Python<'py>, config: &str) -> PyResult<Bound<'py, PyDict>> {
    let cfg = parse_config(config).map_err(cli_err)?;
    let result = py.detach(|| execute(&cfg)).map_err(cli_err)?;
    let out = PyDict::new(py);
    out.set_item("trajectory_csv", &result.csv)?;
    out.set_item("summary", py.import("json")?.call_method1("loads", (&result.json,))?)?;
    out.set_item("exit_code", result.exit_code())?;
    Ok(out)
}

/// Assumption constants and theorem applicability for a TOML config.
#[pyfunction]
fn verify_assumptions<'py>(py: Python<'py>, config: &str) -> PyResult<Bound<'py, PyAny>> {
    let cfg = parse_config(config).map_err(cli_err)?;
    let report = py.detach(|| verify(&cfg)).map_err(cli_err)?;
    to_py(py, &report)
}

#[pymodule]
fn sgdlab(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyObjective>()?;
    m.add_class::<PySchedule>()?;
    m.add_class::<PyRng>()?;
    m.add_function(wrap_pyfunction!(catalog, m)?)?;
    m.add_function(wrap_pyfunction!(sgd_step, m)?)?;
    m.add_function(wrap_pyfunction!(msgd_step, m)?)?;
    m.add_function(wrap_pyfunction!(shb_step, m)?)?;
    m.add_function(wrap_pyfunction!(adagrad_norm_step, m)?)?;
    m.add_function(wrap_pyfunction!(map_shb_to_msgd, m)?)?;
    m.add_function(wrap_pyfunction!(riemann_zeta, m)?)?;
    m.add_function(wrap_pyfunction!(compute_p, m)?)?;
    m.add_function(wrap_pyfunction!(classify_time_average_order, m)?)?;
    m.add_function(wrap_pyfunction!(time_average, m)?)?;
    m.add_function(wrap_pyfunction!(loglog_slope, m)?)?;
    m.add_function(wrap_pyfunction!(fit_decay_exponent, m)?)?;
    m.add_function(wrap_pyfunction!(plateau_check, m)?)?;
    m.add_function(wrap_pyfunction!(run_config, m)?)?;
    m.add_function(wrap_pyfunction!(verify_assumptions, m)?)?;
    Ok(())
}
