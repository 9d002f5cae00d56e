use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use ftgadget::css::CheckType;
use ftgadget::decoder::graph_distance as slice_distance;
use ftgadget::experiment::{self, ExperimentConfig, P1Mode, Rounds, WeightMode};
use ftgadget::toric_partition::{Family, ToricSchedule};
use ftgadget::Error;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Config(_) | Error::Domain(_) => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn kind_of(kind: &str) -> PyResult<CheckType> {
    match kind {
        "z" | "Z" => Ok(CheckType::Z),
        "x" | "X" => Ok(CheckType::X),
        _ => Err(PyValueError::new_err(format!("kind must be 'z' or 'x', got {kind:?}"))),
    }
}

fn schedule(l: usize, mode: &str, m: Option<usize>) -> PyResult<ToricSchedule> {
    let family = Family::from_parts(mode, m).map_err(py_err)?;
    ToricSchedule::new(l, family).map_err(py_err)
}

/// JSON description of the gadget used at round `round`.
#[pyfunction]
#[pyo3(signature = (l, mode, m=None, round=1, kind="z"))]
fn build_gadget(l: usize, mode: &str, m: Option<usize>, round: u32, kind: &str) -> PyResult<String> {
    if round == 0 {
        return Err(PyValueError::new_err("rounds start at 1"));
    }
    let s = schedule(l, mode, m)?;
    let g = &s.sector(kind_of(kind)?).round(round).gadget;
    serde_json::to_string(g).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

/// Fewest decoder-graph edges from slice `t` to slice `t2`, or None.
#[pyfunction]
#[pyo3(signature = (l, mode, t, t2, m=None, kind="z"))]
fn graph_distance(l: usize, mode: &str, t: u32, t2: u32, m: Option<usize>, kind: &str) -> PyResult<Option<u32>> {
    if t == 0 || t2 < t {
        return Err(PyValueError::new_err("need 1 <= t <= t2"));
    }
    let s = schedule(l, mode, m)?;
    Ok(slice_distance(s.sector(kind_of(kind)?), t, t2))
}

/// Built-in property checks as (name, passed, detail) tuples.
#[pyfunction]
fn verify(py: Python<'_>, l: usize) -> PyResult<Vec<(String, bool, String)>> {
    let out = py.detach(|| experiment::verify_suite(l)).map_err(py_err)?;
    Ok(out.into_iter().map(|c| (c.name, c.passed, c.detail)).collect())
}

/// Runs one memory-experiment point and returns the result row as a dict.
#[pyfunction]
#[pyo3(signature = (
    l, p, mode, m=None, p1="equal", rounds="2L", alpha=1.0, decoder="mwpm",
    weights="unit", trials=1000, seed=0
))]
#[allow(clippy::too_many_arguments)]
fn run_point<'py>(
    py: Python<'py>,
    l: usize,
    p: f64,
    mode: &str,
    m: Option<usize>,
    p1: &str,
    rounds: &str,
    alpha: f64,
    decoder: &str,
    weights: &str,
    trials: u64,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let cfg = ExperimentConfig {
        sizes: vec![l],
        mode: Some(mode.to_string()),
        m,
        partition: None,
        p: vec![p],
        p1: p1.parse::<P1Mode>().map_err(py_err)?,
        rounds: rounds.parse::<Rounds>().map_err(py_err)?,
        alpha,
        decoder: decoder.parse().map_err(py_err)?,
        weights: weights.parse::<WeightMode>().map_err(py_err)?,
        trials,
        seed: Some(seed),
        output: None,
    };
    cfg.validate().map_err(py_err)?;
    let row = py.detach(|| experiment::run_point(&cfg, l, p)).map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("mode", &row.mode)?;
    d.set_item("L", row.l)?;
    d.set_item("m", row.m)?;
    d.set_item("p", row.p)?;
    d.set_item("p1", row.p1)?;
    d.set_item("decoder", &row.decoder)?;
    d.set_item("trials", row.trials)?;
    d.set_item("x_fail", row.x_fail)?;
    d.set_item("z_fail", row.z_fail)?;
    d.set_item("rate", row.rate)?;
    d.set_item("ci_lo", row.ci_lo)?;
    d.set_item("ci_hi", row.ci_hi)?;
    d.set_item("seed", row.seed)?;
    d.set_item("csv", row.csv_line())?;
    Ok(d)
}

#[pymodule]
fn ftgadget_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(build_gadget, m)?)?;
    m.add_function(wrap_pyfunction!(graph_distance, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(run_point, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
