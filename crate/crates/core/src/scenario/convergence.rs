use std::fmt;
use std::sync::Arc;

use crate::diagnostics::l2_error;
use crate::error::{Error, Result};
use crate::mesh::{Mesh, Mesh1D, Mesh2D};
use crate::models::{SolverSettings, SweModel, SweParams, Wave1D};

use super::presets::{gravity_wave_exact, swe_initial, wave1d_exact, wave1d_initial, Preset};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StudyModel {
    /// 1D travelling wave, error in `u`.
    Wave1D { degree: usize },
    /// Linear SWE plane gravity wave with `f = 0`, error in `h`.
    SweGravityWave { degree: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceStudy {
    pub model: StudyModel,
    /// Cells per direction at each level.
    pub levels: Vec<usize>,
    /// `dt = cfl * Δx`.
    pub cfl: f64,
    pub final_time: f64,
    pub amplitude: f64,
}

impl ConvergenceStudy {
    pub fn new(model: StudyModel, levels: Vec<usize>) -> Self {
        Self {
            model,
            levels,
            cfl: 0.5,
            final_time: 0.25,
            amplitude: 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub cells: usize,
    pub mesh_size: f64,
    pub dt: f64,
    pub error: f64,
    /// Observed order against the previous level.
    pub order: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceTable {
    pub fn orders(&self) -> Vec<f64> {
        self.rows.iter().filter_map(|r| r.order).collect()
    }

    pub fn errors(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.error).collect()
    }

    pub fn strictly_decreasing(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].error < w[0].error)
    }
}

impl fmt::Display for ConvergenceTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:>6} {:>12} {:>12} {:>14} {:>8}",
            "cells", "mesh_size", "dt", "error", "order"
        )?;
        for r in &self.rows {
            let order = r.order.map_or_else(|| "-".to_string(), |o| format!("{o:.3}"));
            writeln!(
                f,
                "{:>6} {:>12.6e} {:>12.6e} {:>14.6e} {:>8}",
                r.cells, r.mesh_size, r.dt, r.error, order
            )?;
        }
        Ok(())
    }
}

/// `log(e_k / e_{k+1}) / log(n_{k+1} / n_k)` for consecutive levels.
pub fn observed_orders(cells: &[usize], errors: &[f64]) -> Vec<f64> {
    cells
        .windows(2)
        .zip(errors.windows(2))
        .map(|(n, e)| (e[0] / e[1]).ln() / (n[1] as f64 / n[0] as f64).ln())
        .collect()
}

pub fn convergence_study(study: &ConvergenceStudy) -> Result<ConvergenceTable> {
    if study.levels.len() < 3 {
        return Err(Error::invalid(format!(
            "a convergence study needs at least 3 levels, got {}",
            study.levels.len()
        )));
    }
    if study.levels.windows(2).any(|w| w[1] <= w[0]) || study.levels[0] == 0 {
        return Err(Error::invalid("levels must be positive and increasing"));
    }
    if !(study.cfl > 0.0 && study.final_time > 0.0) {
        return Err(Error::invalid("cfl and final_time must be positive"));
    }
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(study.levels.len());
    for &n in &study.levels {
        let (mesh_size, dt, error) = run_level(study, n)?;
        let order = rows
            .last()
            .map(|prev| observed_orders(&[prev.cells, n], &[prev.error, error])[0]);
        rows.push(ConvergenceRow {
            cells: n,
            mesh_size,
            dt,
            error,
            order,
        });
    }
    Ok(ConvergenceTable { rows })
}

fn run_level(study: &ConvergenceStudy, n: usize) -> Result<(f64, f64, f64)> {
    let length = 1.0;
    let dx = length / n as f64;
    let n_steps = (study.final_time / (study.cfl * dx)).ceil() as usize;
    let dt = study.final_time / n_steps as f64;
    let a = study.amplitude;
    match study.model {
        StudyModel::Wave1D { degree } => {
            let mesh = Arc::new(Mesh::from(Mesh1D::uniform(length, n)?));
            let model = Wave1D::new(mesh, degree, SolverSettings::default())?;
            let mut state = wave1d_initial(&model, Preset::TravellingWave, a)?;
            for _ in 0..n_steps {
                state = model.step(&state, dt)?;
            }
            let t = state.t;
            let err = l2_error(
                &state.u,
                |x| [wave1d_exact(Preset::TravellingWave, a, length, x[0], t).unwrap().0, 0.0],
                2,
            );
            Ok((dx, dt, err))
        }
        StudyModel::SweGravityWave { degree } => {
            let mesh = Arc::new(Mesh::from(Mesh2D::periodic(length, length, n, n)?));
            let params = SweParams {
                f: 0.0,
                g: 1.0,
                mean_depth: 1.0,
                apvm_tau: 0.0,
            };
            let model = SweModel::new(mesh, degree, params, SolverSettings::default())?;
            let mut state = swe_initial(&model, Preset::GravityWave, a, false)?;
            for _ in 0..n_steps {
                state = model.step_linear(&state, dt)?;
            }
            let t = state.t;
            let err = l2_error(&state.h, |x| [gravity_wave_exact(&params, a, length, x, t).1, 0.0], 2);
            Ok((dx, dt, err))
        }
    }
}
