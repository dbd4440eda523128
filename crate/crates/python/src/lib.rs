//! Python module `compat_fem`: scenario runs, refinement studies and the
//! space-pair diagnostics of the `compat-fem` crate.

use std::path::PathBuf;
use std::sync::Arc;

use compat_fem::diagnostics::{self, DiagnosticRecord, SpacePair};
use compat_fem::mesh::parse_mesh_shape;
use compat_fem::scenario::{self, ConvergenceStudy, ModelKind, ScenarioConfig, StudyModel};
use compat_fem::space::{make_space, parse_space_name};
use compat_fem::Error;
use pyo3::exceptions::{PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io(_) | Error::Csv(_) | Error::Json(_) => PyOSError::new_err(e.to_string()),
        e if e.is_config_error() => PyValueError::new_err(e.to_string()),
        e => PyRuntimeError::new_err(e.to_string()),
    }
}

fn pair(name: &str) -> PyResult<SpacePair> {
    name.parse().map_err(py_err)
}

fn record_dict<'py>(py: Python<'py>, r: &DiagnosticRecord) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("step", r.step)?;
    d.set_item("time", r.time)?;
    d.set_item("mass", r.mass)?;
    d.set_item("energy", r.energy)?;
    d.set_item("total_vorticity", r.total_vorticity)?;
    d.set_item("enstrophy", r.enstrophy)?;
    d.set_item("balance_residual", r.balance_residual)?;
    Ok(d)
}

/// Inf-sup constant of `pair` on each mesh size in `ne`.
#[pyfunction]
fn infsup(py: Python<'_>, pair_name: &str, ne: Vec<usize>) -> PyResult<Vec<f64>> {
    let p = pair(pair_name)?;
    py.detach(|| diagnostics::infsup_constants(p, &ne)).map_err(py_err)
}

/// Sorted frequencies of the 1D wave system and the number of zero modes.
#[pyfunction]
#[pyo3(signature = (pair_name, ne, length = 1.0))]
fn dispersion(py: Python<'_>, pair_name: &str, ne: usize, length: f64) -> PyResult<(Vec<f64>, usize)> {
    let p = pair(pair_name)?;
    let r = py
        .detach(|| diagnostics::dispersion_spectrum_1d(p, ne, length))
        .map_err(py_err)?;
    Ok((r.frequencies, r.n_zero))
}

/// `dim(v1)/dim(v2)` in lowest terms, e.g. `audit("rt0", "dg0", "4x4") == (2, 1)`.
#[pyfunction]
fn audit(v1: &str, v2: &str, mesh: &str) -> PyResult<(usize, usize)> {
    let mesh = Arc::new(parse_mesh_shape(mesh).map_err(py_err)?);
    let (f1, d1) = parse_space_name(v1).map_err(py_err)?;
    let (f2, d2) = parse_space_name(v2).map_err(py_err)?;
    let s1 = make_space(&mesh, f1, d1).map_err(py_err)?;
    let s2 = make_space(&mesh, f2, d2).map_err(py_err)?;
    let r = diagnostics::dof_ratio_audit(&s1, &s2).map_err(py_err)?;
    Ok((*r.numer(), *r.denom()))
}

/// Runs a scenario and writes its diagnostics CSV.
///
/// `config` is scenario-file text; `model` fixes the model (and its
/// defaults) up front; `overrides` are `key=value` strings applied last.
/// Returns a dict with `path`, `records` and `fields`.
#[pyfunction]
#[pyo3(signature = (config = "", model = None, overrides = Vec::new(), output_dir = None))]
fn run<'py>(
    py: Python<'py>,
    config: &str,
    model: Option<&str>,
    overrides: Vec<String>,
    output_dir: Option<PathBuf>,
) -> PyResult<Bound<'py, PyDict>> {
    let mut cfg = match model {
        Some(m) => {
            let mut cfg = ScenarioConfig::for_model(m.parse::<ModelKind>().map_err(py_err)?);
            cfg.apply_text(config).map_err(py_err)?;
            cfg
        }
        None => ScenarioConfig::parse(config).map_err(py_err)?,
    };
    for o in &overrides {
        cfg.apply_override(o).map_err(py_err)?;
    }
    let out = py
        .detach(|| match &output_dir {
            Some(dir) => scenario::run_scenario_in(&cfg, dir),
            None => scenario::run_scenario(&cfg),
        })
        .map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("path", out.diagnostics_path)?;
    let records = out
        .records
        .iter()
        .map(|r| record_dict(py, r))
        .collect::<PyResult<Vec<_>>>()?;
    d.set_item("records", records)?;
    d.set_item("fields", out.field_paths)?;
    Ok(d)
}

/// Refinement study; one dict per level with `cells`, `mesh_size`, `dt`,
/// `error` and `order` (None on the coarsest level).
#[pyfunction]
#[pyo3(signature = (model, degree = 1, levels = vec![8, 16, 32], cfl = 0.5, final_time = 0.25, amplitude = 0.1))]
fn convergence<'py>(
    py: Python<'py>,
    model: &str,
    degree: usize,
    levels: Vec<usize>,
    cfl: f64,
    final_time: f64,
    amplitude: f64,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let model = match model.parse::<ModelKind>().map_err(py_err)? {
        ModelKind::Wave1D => StudyModel::Wave1D { degree },
        ModelKind::SweLinear => StudyModel::SweGravityWave { degree },
        ModelKind::SweNonlinear => {
            return Err(PyValueError::new_err(
                "convergence studies support wave1d and swe-linear",
            ))
        }
    };
    let study = ConvergenceStudy {
        model,
        levels,
        cfl,
        final_time,
        amplitude,
    };
    let table = py.detach(|| scenario::convergence_study(&study)).map_err(py_err)?;
    table
        .rows
        .iter()
        .map(|r| {
            let d = PyDict::new(py);
            d.set_item("cells", r.cells)?;
            d.set_item("mesh_size", r.mesh_size)?;
            d.set_item("dt", r.dt)?;
            d.set_item("error", r.error)?;
            d.set_item("order", r.order)?;
            Ok(d)
        })
        .collect()
}

#[pymodule]
#[pyo3(name = "compat_fem")]
fn compat_fem_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(infsup, m)?)?;
    m.add_function(wrap_pyfunction!(dispersion, m)?)?;
    m.add_function(wrap_pyfunction!(audit, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(convergence, m)?)?;
    Ok(())
}
