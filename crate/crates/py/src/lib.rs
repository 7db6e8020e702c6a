//! Python bindings for `delayfront-core`.

#![allow(clippy::wrong_self_convention, clippy::type_complexity)]

use num_complex::Complex64;
use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use serde::Serialize;
use serde_json::Value;

use delayfront_core::birth::BirthFunction as CoreBirth;
use delayfront_core::characteristic as ch;
use delayfront_core::experiments as ex;
use delayfront_core::grid::{Grid, History};
use delayfront_core::kernels::Kernel as CoreKernel;
use delayfront_core::level_set::level_set;
use delayfront_core::linear_solver::solve_linear as core_solve_linear;
use delayfront_core::nonlinear_solver::{solve_kpp, KppProblem};

create_exception!(delayfront, DelayfrontError, PyException);

fn py_err(e: delayfront_core::Error) -> PyErr {
    DelayfrontError::new_err(e.to_string())
}

fn json_to_py(py: Python<'_>, v: &Value) -> PyResult<Py<PyAny>> {
    Ok(match v {
        Value::Null => py.None(),
        Value::Bool(b) => b.into_pyobject(py)?.to_owned().into_any().unbind(),
        Value::Number(n) => match n.as_i64() {
            Some(i) => i.into_pyobject(py)?.into_any().unbind(),
            None => n.as_f64().unwrap_or(f64::NAN).into_pyobject(py)?.into_any().unbind(),
        },
        Value::String(s) => s.into_pyobject(py)?.into_any().unbind(),
        Value::Array(items) => {
            let list = PyList::empty(py);
            for item in items {
                list.append(json_to_py(py, item)?)?;
            }
            list.into_any().unbind()
        }
        Value::Object(map) => {
            let dict = PyDict::new(py);
            for (k, item) in map {
                dict.set_item(k, json_to_py(py, item)?)?;
            }
            dict.into_any().unbind()
        }
    })
}

fn to_py<T: Serialize>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    let v = serde_json::to_value(value).map_err(|e| DelayfrontError::new_err(e.to_string()))?;
    json_to_py(py, &v)
}

fn from_json<T: serde::de::DeserializeOwned>(text: &str, what: &str) -> PyResult<T> {
    serde_json::from_str(text).map_err(|e| DelayfrontError::new_err(format!("{what}: {e}")))
}

/// Dispersal kernel: a finite measure with exponential moments.
#[pyclass(frozen, skip_from_py_object, module = "delayfront")]
#[derive(Clone, Copy)]
struct Kernel(CoreKernel);

#[pymethods]
impl Kernel {
    #[staticmethod]
    #[pyo3(signature = (shift=0.0, mass=1.0))]
    fn dirac(shift: f64, mass: f64) -> PyResult<Self> {
        CoreKernel::dirac(shift, mass).map(Kernel).map_err(py_err)
    }

    #[staticmethod]
    #[pyo3(signature = (mean=0.0, stddev=1.0, mass=1.0))]
    fn gaussian(mean: f64, stddev: f64, mass: f64) -> PyResult<Self> {
        CoreKernel::gaussian(mean, stddev, mass).map(Kernel).map_err(py_err)
    }

    #[staticmethod]
    #[pyo3(signature = (mean, stddev=1.0, mass=1.0))]
    fn shifted_gaussian(mean: f64, stddev: f64, mass: f64) -> PyResult<Self> {
        CoreKernel::shifted_gaussian(mean, stddev, mass).map(Kernel).map_err(py_err)
    }

    #[staticmethod]
    #[pyo3(signature = (rate, mass=1.0))]
    fn laplace(rate: f64, mass: f64) -> PyResult<Self> {
        CoreKernel::laplace(rate, mass).map(Kernel).map_err(py_err)
    }

    #[staticmethod]
    #[pyo3(signature = (half_width, mass=1.0))]
    fn uniform(half_width: f64, mass: f64) -> PyResult<Self> {
        CoreKernel::uniform(half_width, mass).map(Kernel).map_err(py_err)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let k: CoreKernel = from_json(text, "kernel")?;
        k.validate().map_err(py_err)?;
        Ok(Kernel(k))
    }

    fn to_json(&self) -> String {
        serde_json::to_string(&self.0).expect("kernel serializes")
    }

    #[getter]
    fn mass(&self) -> f64 {
        self.0.mass
    }

    #[getter]
    fn mean(&self) -> f64 {
        self.0.mean()
    }

    #[getter]
    fn family(&self) -> &'static str {
        self.0.family.name()
    }

    /// `∫ k(y) e^{-zy} dy` for real `z` in the transform domain.
    fn laplace_transform(&self, z: f64) -> PyResult<f64> {
        self.0.laplace_transform(z).map_err(py_err)
    }

    fn fourier_transform(&self, xi: f64) -> Complex64 {
        self.0.fourier_transform(xi)
    }

    fn __repr__(&self) -> String {
        format!("Kernel({})", self.to_json())
    }
}

/// Birth function `g` with `g(κ) = κ` and `g(u) ≤ g'(0) u`.
#[pyclass(frozen, skip_from_py_object, module = "delayfront")]
#[derive(Clone, Copy)]
struct BirthFunction(CoreBirth);

#[pymethods]
impl BirthFunction {
    #[staticmethod]
    #[pyo3(signature = (p, a=1.0))]
    fn nicholson(p: f64, a: f64) -> PyResult<Self> {
        CoreBirth::nicholson(p, a).map(BirthFunction).map_err(py_err)
    }

    #[staticmethod]
    #[pyo3(signature = (p, a, q))]
    fn mackey_glass(p: f64, a: f64, q: f64) -> PyResult<Self> {
        CoreBirth::mackey_glass(p, a, q).map(BirthFunction).map_err(py_err)
    }

    #[staticmethod]
    fn linear_cap(slope: f64, cap: f64) -> PyResult<Self> {
        CoreBirth::linear_cap(slope, cap).map(BirthFunction).map_err(py_err)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let g: CoreBirth = from_json(text, "birth")?;
        g.validate().map_err(py_err)?;
        Ok(BirthFunction(g))
    }

    fn to_json(&self) -> String {
        serde_json::to_string(&self.0).expect("birth function serializes")
    }

    fn monotone_envelope(&self) -> Self {
        BirthFunction(self.0.monotone_envelope())
    }

    fn __call__(&self, u: f64) -> f64 {
        self.0.eval(u)
    }

    #[getter]
    fn gprime0(&self) -> f64 {
        self.0.gprime0()
    }

    #[getter]
    fn kappa(&self) -> f64 {
        self.0.kappa()
    }

    fn __repr__(&self) -> String {
        format!("BirthFunction({})", self.to_json())
    }
}

/// Drift `m`, linear rate `p` and delay `h` of the linear delayed equation.
#[pyclass(frozen, skip_from_py_object, module = "delayfront")]
#[derive(Clone, Copy)]
struct CharParams(ch::CharParams);

#[pymethods]
impl CharParams {
    #[new]
    fn new(m: f64, p: f64, h: f64) -> PyResult<Self> {
        ch::CharParams::new(m, p, h).map(CharParams).map_err(py_err)
    }

    #[getter]
    fn m(&self) -> f64 {
        self.0.m
    }

    #[getter]
    fn p(&self) -> f64 {
        self.0.p
    }

    #[getter]
    fn h(&self) -> f64 {
        self.0.h
    }

    fn __repr__(&self) -> String {
        format!("CharParams(m={}, p={}, h={})", self.0.m, self.0.p, self.0.h)
    }
}

#[pyclass(frozen, get_all, module = "delayfront")]
struct SpeedPair {
    c_minus: f64,
    c_plus: f64,
    lambda_minus: f64,
    lambda_plus: f64,
    residual: f64,
}

#[pymethods]
impl SpeedPair {
    fn __repr__(&self) -> String {
        format!(
            "SpeedPair(c_minus={}, c_plus={}, lambda_minus={}, lambda_plus={})",
            self.c_minus, self.c_plus, self.lambda_minus, self.lambda_plus
        )
    }
}

#[pyclass(frozen, get_all, module = "delayfront")]
struct Tangency {
    gamma_m: f64,
    z_m: f64,
    sigma_m: f64,
    residual_value: f64,
    residual_slope: f64,
}

#[pymethods]
impl Tangency {
    fn __repr__(&self) -> String {
        format!("Tangency(gamma_m={}, z_m={}, sigma_m={})", self.gamma_m, self.z_m, self.sigma_m)
    }
}

#[pyfunction]
fn halanay_root(re_mu: f64, k_abs: f64, h: f64) -> f64 {
    ch::halanay_root(re_mu, k_abs, h)
}

#[pyfunction]
fn critical_speeds(kernel: &Kernel, gprime0: f64, h: f64) -> PyResult<SpeedPair> {
    let s = ch::critical_speeds(&kernel.0, gprime0, h).map_err(py_err)?;
    Ok(SpeedPair {
        c_minus: s.c_minus,
        c_plus: s.c_plus,
        lambda_minus: s.lambda_minus,
        lambda_plus: s.lambda_plus,
        residual: s.residual,
    })
}

#[pyfunction]
fn tangency_solve(params: &CharParams, kernel: &Kernel) -> PyResult<Tangency> {
    let t = ch::tangency_solve(&params.0, &kernel.0).map_err(py_err)?;
    Ok(Tangency {
        gamma_m: t.gamma_m,
        z_m: t.z_m,
        sigma_m: t.sigma_m,
        residual_value: t.residual_value,
        residual_slope: t.residual_slope,
    })
}

/// `(l(z), lower, upper)` for each `z`, with the decay pair anchored at `z0`.
#[pyfunction]
#[pyo3(signature = (params, kernel, zs, z0=0.0))]
fn implicit_l(params: &CharParams, kernel: &Kernel, zs: Vec<f64>, z0: f64) -> PyResult<Vec<(f64, f64, f64)>> {
    let pair = ch::gamma_zero(&params.0, &kernel.0, z0).map_err(py_err)?;
    Ok(zs
        .iter()
        .map(|&z| {
            let (lo, hi) = ch::envelope_bounds(&params.0, &pair, &kernel.0, z);
            (ch::implicit_l(&params.0, &pair, &kernel.0, z), lo, hi)
        })
        .collect())
}

/// Linear delayed equation from a history constant in time; returns `(xs, [(t, values)])`.
#[pyfunction]
#[pyo3(signature = (params, kernel, length, initial, times, n_h=32))]
fn solve_linear(
    params: &CharParams,
    kernel: &Kernel,
    length: f64,
    initial: Vec<f64>,
    times: Vec<f64>,
    n_h: usize,
) -> PyResult<(Vec<f64>, Vec<(f64, Vec<f64>)>)> {
    let grid = Grid::new(length, initial.len()).map_err(py_err)?;
    let hist = History::constant(initial, n_h);
    let sol = core_solve_linear(&params.0, &kernel.0, &grid, &hist, &times).map_err(py_err)?;
    Ok((grid.xs().collect(), sol.fields.into_iter().map(|f| (f.time, f.values)).collect()))
}

/// Nonlinear delayed KPP run; returns `(xs, [(t, values, m_minus, m_plus)])` with
/// level-set crossings at `beta` (default `κ/2`).
#[pyfunction]
#[pyo3(signature = (kernel, birth, h, length, initial, times, n_h=32, beta=None))]
#[allow(clippy::too_many_arguments, clippy::type_complexity)]
fn simulate_kpp(
    kernel: &Kernel,
    birth: &BirthFunction,
    h: f64,
    length: f64,
    initial: Vec<f64>,
    times: Vec<f64>,
    n_h: usize,
    beta: Option<f64>,
) -> PyResult<(Vec<f64>, Vec<(f64, Vec<f64>, Option<f64>, Option<f64>)>)> {
    let grid = Grid::new(length, initial.len()).map_err(py_err)?;
    let kappa = birth.0.kappa();
    let problem = KppProblem::kpp(kernel.0, birth.0, grid, h)
        .and_then(|p| p.with_floor(ex::NOISE_FLOOR * kappa))
        .map_err(py_err)?;
    let dt = if h > 0.0 { h / n_h as f64 } else { 0.01 };
    let steps = if h > 0.0 { n_h } else { 0 };
    let sol = solve_kpp(&problem, &History::constant(initial, steps), dt, &times).map_err(py_err)?;
    let beta = beta.unwrap_or(0.5 * kappa);
    let rows = sol
        .fields
        .into_iter()
        .map(|f| {
            let c = level_set(&grid, &f, beta);
            (f.time, f.values, c.m_minus, c.m_plus)
        })
        .collect();
    Ok((grid.xs().collect(), rows))
}

fn config_or<T: serde::de::DeserializeOwned>(config: Option<&str>, name: &str, desk: impl FnOnce() -> T) -> PyResult<T> {
    match config {
        Some(text) => from_json(text, name),
        None => Ok(desk()),
    }
}

fn envelope<P: Serialize, M: Serialize>(name: &str, params: &P, metrics: &M) -> serde_json::Result<Value> {
    let metrics = serde_json::to_value(metrics)?;
    let verdict = metrics.get("verdict").cloned().unwrap_or_else(|| Value::from("diagnostic"));
    Ok(serde_json::json!({
        "name": name,
        "params": serde_json::to_value(params)?,
        "metrics": metrics,
        "verdict": verdict,
    }))
}

/// Runs a packaged experiment and returns `{name, params, metrics, verdict}` as a dict.
///
/// `config` is the JSON of the experiment's own configuration; desk defaults are used when omitted.
#[pyfunction]
#[pyo3(signature = (name, config=None))]
fn run_experiment(py: Python<'_>, name: &str, config: Option<&str>) -> PyResult<Py<PyAny>> {
    // The long runs release the interpreter.
    macro_rules! run {
        ($desk:expr, $f:expr) => {{
            let cfg = config_or(config, name, $desk)?;
            let r = py.detach(|| $f(&cfg)).map_err(py_err)?;
            envelope(name, &cfg, &r)
        }};
    }
    let report = match name {
        "mckean" => run!(ex::McKeanConfig::desk, ex::mckean_experiment),
        "logdrift" => {
            let cfg = config_or(config, name, ex::McKeanConfig::desk)?;
            let (speeds, fit) = py
                .detach(|| {
                    let r = ex::mckean_experiment(&cfg)?;
                    let fit = ex::logdrift_fit(&r.trace, r.speeds.c_plus, r.speeds.lambda_plus)?;
                    Ok::<_, delayfront_core::Error>((r.speeds, fit))
                })
                .map_err(py_err)?;
            envelope(name, &cfg, &serde_json::json!({"speeds": speeds, "fit": fit}))
        }
        "extinction" => run!(ex::ExtinctionConfig::desk, ex::extinction_experiment),
        "spreading" => run!(ex::SpreadingConfig::desk, ex::spreading_experiment),
        "bridge" => {
            let cfg = match config {
                Some(text) => from_json(text, name)?,
                None => ex::BridgeConfig::desk(CoreKernel::gaussian(0.0, 1.0, 1.0).map_err(py_err)?),
            };
            let r = py.detach(|| ex::moving_frame_bridge_check(&cfg)).map_err(py_err)?;
            envelope(name, &cfg, &r)
        }
        "asymptotics" => run!(ex::AsymptoticsConfig::desk, ex::asymptotics_experiment),
        "fisher" => run!(ex::FisherConfig::desk, ex::fisher_sanity),
        "fundamental" => run!(ex::FundamentalConfig::desk, ex::fundamental_experiment),
        "cross_validation" | "cross-validation" => run!(ex::CrossValidationConfig::desk, ex::cross_validation),
        other => return Err(DelayfrontError::new_err(format!("unknown experiment `{other}`"))),
    }
    .map_err(|e| DelayfrontError::new_err(e.to_string()))?;
    json_to_py(py, &report)
}

/// Invariant suite: list of `(name, passed, detail)`.
#[pyfunction]
fn verify(py: Python<'_>) -> Vec<(&'static str, bool, String)> {
    py.detach(delayfront_core::verify::run_suite)
        .into_iter()
        .map(|c| (c.name, c.passed, c.detail))
        .collect()
}

/// `serde` view of any report type, for callers that want the raw dict.
#[pyfunction]
fn speeds_report(py: Python<'_>, kernel: &Kernel, gprime0: f64, h: f64) -> PyResult<Py<PyAny>> {
    let s = ch::critical_speeds(&kernel.0, gprime0, h).map_err(py_err)?;
    to_py(py, &s)
}

#[pymodule]
fn delayfront(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("DelayfrontError", m.py().get_type::<DelayfrontError>())?;
    m.add_class::<Kernel>()?;
    m.add_class::<BirthFunction>()?;
    m.add_class::<CharParams>()?;
    m.add_class::<SpeedPair>()?;
    m.add_class::<Tangency>()?;
    m.add_function(wrap_pyfunction!(halanay_root, m)?)?;
    m.add_function(wrap_pyfunction!(critical_speeds, m)?)?;
    m.add_function(wrap_pyfunction!(speeds_report, m)?)?;
    m.add_function(wrap_pyfunction!(tangency_solve, m)?)?;
    m.add_function(wrap_pyfunction!(implicit_l, m)?)?;
    m.add_function(wrap_pyfunction!(solve_linear, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_kpp, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    Ok(())
}
