use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Serialize;

use crate::diagnostics::{linear_record, nonlinear_record, wave1d_record, DiagnosticRecord};
use crate::error::{Error, Result};
use crate::mesh::{Mesh, Mesh1D, Mesh2D};
use crate::models::{SweModel, SweState, Wave1D};
use crate::space::FeFunction;

use super::config::{ModelKind, ScenarioConfig, Sweeps};
use super::presets::{swe_initial, wave1d_initial};

/// Environment variable that overrides `output_dir`.
pub const OUTPUT_DIR_ENV: &str = "COMPAT_FEM_OUTPUT_DIR";

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub records: Vec<DiagnosticRecord>,
    pub diagnostics_path: PathBuf,
    /// Field CSVs followed by the metadata sidecar, when `dump_fields` is set.
    pub field_paths: Vec<PathBuf>,
}

/// `output_dir` of the config, or the value of [`OUTPUT_DIR_ENV`] if set.
pub fn resolve_output_dir(config: &ScenarioConfig) -> PathBuf {
    match std::env::var_os(OUTPUT_DIR_ENV) {
        Some(dir) if !dir.is_empty() => PathBuf::from(dir),
        _ => config.output_dir.clone(),
    }
}

/// Run a scenario and write its outputs under [`resolve_output_dir`].
pub fn run_scenario(config: &ScenarioConfig) -> Result<RunOutput> {
    run_scenario_in(config, &resolve_output_dir(config))
}

/// Run a scenario and write `<name>.csv` (and field dumps) into `dir`.
///
/// Nothing is written unless every step succeeds.
pub fn run_scenario_in(config: &ScenarioConfig, dir: &Path) -> Result<RunOutput> {
    config.validate()?;
    let (records, fields) = simulate(config)?;
    fs::create_dir_all(dir)?;
    let diagnostics_path = dir.join(format!("{}.csv", config.name));
    write_records(&diagnostics_path, &records)?;
    let mut field_paths = Vec::new();
    if config.dump_fields {
        let mut meta = Vec::new();
        for (label, field) in &fields {
            let path = dir.join(format!("{}_{label}.csv", config.name));
            write_field(&path, field)?;
            meta.push(FieldMeta::new(label, field, &path));
            field_paths.push(path);
        }
        let sidecar = dir.join(format!("{}_fields.json", config.name));
        let doc = Sidecar {
            model: config.model.name(),
            time: records.last().map_or(0.0, |r| r.time),
            mesh: MeshMeta::new(fields[0].1.space().mesh()),
            fields: meta,
        };
        fs::write(&sidecar, serde_json::to_string_pretty(&doc)? + "\n")?;
        field_paths.push(sidecar);
    }
    Ok(RunOutput {
        records,
        diagnostics_path,
        field_paths,
    })
}

type Fields = Vec<(&'static str, FeFunction)>;

fn simulate(cfg: &ScenarioConfig) -> Result<(Vec<DiagnosticRecord>, Fields)> {
    let mut records = Vec::with_capacity(cfg.n_steps + 1);
    match cfg.model {
        ModelKind::Wave1D => {
            let mesh = Arc::new(Mesh::from(Mesh1D::uniform(cfg.lx, cfg.nx)?));
            let model = Wave1D::new(mesh, cfg.degree, cfg.solver_settings())?;
            let mut state = wave1d_initial(&model, cfg.initial_condition, cfg.amplitude)?;
            records.push(wave1d_record(&model, &state, 0));
            for step in 1..=cfg.n_steps {
                state = model.step(&state, cfg.dt)?;
                records.push(wave1d_record(&model, &state, step));
            }
            Ok((records, vec![("u", state.u), ("h", state.h)]))
        }
        ModelKind::SweLinear | ModelKind::SweNonlinear => {
            let mesh = Arc::new(Mesh::from(Mesh2D::periodic(cfg.lx, cfg.ly, cfg.nx, cfg.ny)?));
            let model = SweModel::new(mesh, cfg.degree, cfg.swe_params(), cfg.solver_settings())?;
            let linear = cfg.model == ModelKind::SweLinear;
            let mut state = swe_initial(&model, cfg.initial_condition, cfg.amplitude, !linear)?;
            let record = |state: &SweState, step| {
                if linear {
                    linear_record(&model, state, step)
                } else {
                    nonlinear_record(&model, state, step)
                }
            };
            records.push(record(&state, 0)?);
            for step in 1..=cfg.n_steps {
                state = match (linear, cfg.n_iter) {
                    (true, _) => model.step_linear(&state, cfg.dt)?,
                    (false, Sweeps::Fixed(n)) => model.step_nonlinear(&state, cfg.dt, n)?.0,
                    (false, Sweeps::Converged) => model.step_nonlinear_converged(&state, cfg.dt)?.0,
                };
                let rec = record(&state, step)?;
                if !rec.is_finite() {
                    return Err(Error::StateInvalid(format!("non-finite diagnostics at step {step}")));
                }
                records.push(rec);
            }
            Ok((records, vec![("u", state.u), ("h", state.h)]))
        }
    }
}

pub fn write_records(path: &Path, records: &[DiagnosticRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    if records.is_empty() {
        w.write_record(DiagnosticRecord::COLUMNS)?;
    }
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records(path: &Path) -> Result<Vec<DiagnosticRecord>> {
    let mut r = csv::Reader::from_path(path)?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    if header != DiagnosticRecord::COLUMNS {
        return Err(Error::invalid(format!("unexpected diagnostics header {header:?}")));
    }
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct FieldRow {
    pub kind: String,
    pub index: usize,
    pub value: f64,
}

/// Write `kind,index,value` rows, one per global DoF.
pub fn write_field(path: &Path, field: &FeFunction) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let space = field.space();
    for (index, &value) in field.coeffs().iter().enumerate() {
        w.serialize(FieldRow {
            kind: space.dof_entity(index).name().to_string(),
            index,
            value,
        })?;
    }
    w.flush()?;
    Ok(())
}

/// Coefficients from a field CSV, in DoF order.
pub fn read_field(path: &Path) -> Result<Vec<f64>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for (i, row) in r.deserialize::<FieldRow>().enumerate() {
        let row = row?;
        if row.index != i {
            return Err(Error::invalid(format!("row {i} has DoF index {}", row.index)));
        }
        out.push(row.value);
    }
    Ok(out)
}

#[derive(Serialize)]
struct Sidecar<'a> {
    model: &'a str,
    time: f64,
    mesh: MeshMeta,
    fields: Vec<FieldMeta>,
}

#[derive(Serialize)]
struct MeshMeta {
    dim: usize,
    extents: Vec<f64>,
    cells: Vec<usize>,
}

impl MeshMeta {
    fn new(mesh: &Mesh) -> Self {
        match mesh {
            Mesh::Interval(m) => Self {
                dim: 1,
                extents: vec![m.length()],
                cells: vec![m.n_elements()],
            },
            Mesh::Quad(m) => Self {
                dim: 2,
                extents: m.extents().to_vec(),
                cells: m.counts().to_vec(),
            },
        }
    }
}

#[derive(Serialize)]
struct FieldMeta {
    name: String,
    space: String,
    family: String,
    degree: usize,
    dim: usize,
    file: String,
}

impl FieldMeta {
    fn new(name: &str, field: &FeFunction, path: &Path) -> Self {
        let s = field.space();
        Self {
            name: name.to_string(),
            space: s.label(),
            family: s.family().name().to_string(),
            degree: s.degree(),
            dim: s.dim(),
            file: path
                .file_name()
                .map(|f| f.to_string_lossy().into_owned())
                .unwrap_or_default(),
        }
    }
}
