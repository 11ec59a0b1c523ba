//! Python bindings. Results come back as plain dicts and lists.

use dfp_core::security::{self, SecurityParams};
use dfp_core::sim::{run_scenario as run, ScenarioConfig};
use dfp_core::{FinalitySchedule, Ratio};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyString;
use serde::Serialize;

fn value_error(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_py<'py>(py: Python<'py>, value: &impl Serialize) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

/// Accepts `"7/10"`, `"0.7"` or a float.
fn ratio(value: &Bound<'_, PyAny>) -> PyResult<Ratio> {
    if let Ok(s) = value.cast::<PyString>() {
        return s.to_str()?.parse().map_err(value_error);
    }
    Ratio::from_f64(value.extract::<f64>()?).map_err(value_error)
}

fn params(
    p_fraud: f64,
    p_detect_given_fraud: f64,
    p_window: f64,
    n_nodes: u64,
    p_node_challenge: f64,
) -> SecurityParams {
    SecurityParams {
        p_fraud,
        p_detect_given_fraud,
        p_window,
        n_nodes,
        p_node_challenge,
        p_participation: 1.0,
    }
}

/// Rows of the finality schedule, one per step.
#[pyfunction]
#[pyo3(signature = (t0_ms=500, r_t=None, c0=100, r_c=None, max_step=10))]
fn schedule_table<'py>(
    py: Python<'py>,
    t0_ms: u64,
    r_t: Option<&Bound<'py, PyAny>>,
    c0: u64,
    r_c: Option<&Bound<'py, PyAny>>,
    max_step: u32,
) -> PyResult<Bound<'py, PyAny>> {
    let r_t = r_t.map(ratio).transpose()?.unwrap_or(Ratio::integer(4));
    let r_c = match r_c {
        Some(v) => ratio(v)?,
        None => Ratio::new(7, 10).map_err(value_error)?,
    };
    let schedule = FinalitySchedule::new(t0_ms, r_t, c0, r_c, max_step).map_err(value_error)?;
    to_py(py, &schedule.table().map_err(value_error)?)
}

/// Closed-form probability that a commitment is challenged.
#[pyfunction]
#[pyo3(signature = (p_fraud, p_detect_given_fraud, p_window, n_nodes, p_node_challenge))]
fn p_challenge(
    p_fraud: f64,
    p_detect_given_fraud: f64,
    p_window: f64,
    n_nodes: u64,
    p_node_challenge: f64,
) -> PyResult<f64> {
    let p = params(p_fraud, p_detect_given_fraud, p_window, n_nodes, p_node_challenge);
    security::p_challenge(&p).map_err(value_error)
}

/// Monte Carlo estimate of the challenge probability as
/// `(estimate, std_error)`.
#[pyfunction]
#[pyo3(signature = (p_fraud, p_detect_given_fraud, p_window, n_nodes, p_node_challenge, trials=100_000, seed=1))]
#[allow(clippy::too_many_arguments)]
fn monte_carlo(
    py: Python<'_>,
    p_fraud: f64,
    p_detect_given_fraud: f64,
    p_window: f64,
    n_nodes: u64,
    p_node_challenge: f64,
    trials: u64,
    seed: u64,
) -> PyResult<(f64, f64)> {
    let p = params(p_fraud, p_detect_given_fraud, p_window, n_nodes, p_node_challenge);
    let est = py
        .detach(|| security::monte_carlo_p_challenge(&p, trials, seed))
        .map_err(value_error)?;
    Ok((est.estimate, est.std_error))
}

/// Runs a scenario given as TOML text. Returns the report, the per-commitment
/// records and the trace digest.
#[pyfunction]
fn run_scenario<'py>(py: Python<'py>, config_toml: &str) -> PyResult<Bound<'py, PyAny>> {
    let config = ScenarioConfig::from_toml_str(config_toml).map_err(value_error)?;
    let result = py
        .detach(|| run(&config))
        .map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    to_py(
        py,
        &serde_json::json!({
            "report": result.report,
            "commitments": result.commitments,
            "probes": result.probes,
        }),
    )
}

#[pymodule]
fn dfp(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(schedule_table, m)?)?;
    m.add_function(wrap_pyfunction!(p_challenge, m)?)?;
    m.add_function(wrap_pyfunction!(monte_carlo, m)?)?;
    m.add_function(wrap_pyfunction!(run_scenario, m)?)?;
    Ok(())
}
