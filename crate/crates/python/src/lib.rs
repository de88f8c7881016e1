use std::path::PathBuf;

use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use minmax_tori::beltrami::{uniformize as uniformize_metric, MetricField};
use minmax_tori::bubbling::reduce_to_fundamental_domain;
use minmax_tori::harmonic::MapSlice;
use minmax_tori::periodic::Mark;
use minmax_tori::pipeline::{run_pipeline, scenario_library, Config};

fn py_err(e: minmax_tori::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn json_to_py<'py>(py: Python<'py>, value: &impl serde::Serialize) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

/// Flat mark and diagnostics of a metric given row-major as `g11, g12, g22`.
#[pyfunction]
#[allow(clippy::too_many_arguments)]
#[pyo3(signature = (g11, g12, g22, rows, cols, delta = 0.0, tol = 1e-10))]
fn uniformize<'py>(
    py: Python<'py>,
    g11: Vec<f64>,
    g12: Vec<f64>,
    g22: Vec<f64>,
    rows: usize,
    cols: usize,
    delta: f64,
    tol: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let g = MetricField::new(rows, cols, g11, g12, g22).map_err(py_err)?;
    let r = py.detach(|| uniformize_metric(&g, delta, tol)).map_err(py_err)?;
    let out = PyDict::new(py);
    out.set_item("tau", r.tau())?;
    out.set_item("residual", r.residual)?;
    out.set_item("iterations", r.iterations)?;
    out.set_item("conformal_defect", r.conformal_defect)?;
    Ok(out)
}

/// Reduces a mark into the fundamental domain; returns the reduced mark and
/// the matrix `(a, b, c, d)` taking the input to it.
#[pyfunction]
fn reduce_mark(tau: Complex64) -> PyResult<(Complex64, (i64, i64, i64, i64))> {
    let mark = Mark::new(tau).map_err(py_err)?;
    let p = reduce_to_fundamental_domain(mark).map_err(py_err)?;
    let m = p.matrix;
    Ok((p.tau.tau(), (m.a, m.b, m.c, m.d)))
}

/// Dirichlet energy and area of a map sampled row-major, `dim` values per node.
#[pyfunction]
#[pyo3(signature = (values, rows, cols, dim, tau = Complex64::new(0.0, 1.0)))]
fn energy_and_area(values: Vec<f64>, rows: usize, cols: usize, dim: usize, tau: Complex64) -> PyResult<(f64, f64)> {
    let mark = Mark::new(tau).map_err(py_err)?;
    let u = MapSlice::new(mark, rows, cols, dim, values).map_err(py_err)?;
    Ok(minmax_tori::harmonic::energy_and_area(&u))
}

#[pyfunction]
fn scenarios() -> Vec<&'static str> {
    scenario_library().iter().map(|s| s.name).collect()
}

/// Runs the pipeline. `config` is TOML text; `scenario` and `out` override it.
#[pyfunction]
#[pyo3(signature = (config = "", scenario = None, out = None))]
fn run<'py>(
    py: Python<'py>,
    config: &str,
    scenario: Option<String>,
    out: Option<PathBuf>,
) -> PyResult<Bound<'py, PyDict>> {
    let mut config = Config::from_toml(config).map_err(py_err)?;
    if let Some(name) = scenario {
        config.scenario = name;
    }
    if let Some(dir) = out {
        config.out = dir;
    }
    let summary = py.detach(|| run_pipeline(&config)).map_err(py_err)?;
    let result = PyDict::new(py);
    result.set_item("scenario", &summary.scenario)?;
    result.set_item("initial_max_energy", summary.initial_max_energy)?;
    result.set_item("rounds", json_to_py(py, &summary.history.rounds)?)?;
    result.set_item("initial_bubbles", json_to_py(py, &summary.initial_bubbles)?)?;
    result.set_item("bubbles", json_to_py(py, &summary.bubbles)?)?;
    result.set_item("out", summary.out)?;
    Ok(result)
}

#[pymodule]
#[pyo3(name = "minmax_tori")]
fn minmax_tori_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(uniformize, m)?)?;
    m.add_function(wrap_pyfunction!(reduce_mark, m)?)?;
    m.add_function(wrap_pyfunction!(energy_and_area, m)?)?;
    m.add_function(wrap_pyfunction!(scenarios, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    Ok(())
}
