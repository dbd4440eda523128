//! Flat `key = value` scenario files.
//!
//! Blank lines and lines starting with `#` are ignored. Every key is
//! optional; omitted keys take the defaults of [`ScenarioConfig::default`].

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::models::{SolverSettings, SweParams};

use super::presets::Preset;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    Wave1D,
    SweLinear,
    SweNonlinear,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Wave1D => "wave1d",
            ModelKind::SweLinear => "swe-linear",
            ModelKind::SweNonlinear => "swe-nonlinear",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "wave1d" => Ok(ModelKind::Wave1D),
            "swe-linear" => Ok(ModelKind::SweLinear),
            "swe-nonlinear" => Ok(ModelKind::SweNonlinear),
            other => Err(Error::invalid(format!(
                "unknown model `{other}` (expected wave1d, swe-linear or swe-nonlinear)"
            ))),
        }
    }
}

/// APVM time scale: a fixed value or half the time step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ApvmTau {
    Auto,
    Value(f64),
}

impl ApvmTau {
    pub fn resolve(self, dt: f64) -> f64 {
        match self {
            ApvmTau::Auto => 0.5 * dt,
            ApvmTau::Value(v) => v,
        }
    }
}

impl fmt::Display for ApvmTau {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ApvmTau::Auto => f.write_str("auto"),
            ApvmTau::Value(v) => write!(f, "{v:?}"),
        }
    }
}

/// Picard sweeps per nonlinear step: a fixed count or until converged.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sweeps {
    Fixed(usize),
    Converged,
}

impl fmt::Display for Sweeps {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sweeps::Fixed(n) => write!(f, "{n}"),
            Sweeps::Converged => f.write_str("converged"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub model: ModelKind,
    /// Interval length (1D) or domain width (2D).
    pub lx: f64,
    pub ly: f64,
    /// Cells in x (elements in 1D) and in y.
    pub nx: usize,
    pub ny: usize,
    /// CG degree `p` of the compatible pair or triple.
    pub degree: usize,
    pub f: f64,
    pub g: f64,
    pub mean_depth: f64,
    pub apvm_tau: ApvmTau,
    pub dt: f64,
    pub n_steps: usize,
    pub n_iter: Sweeps,
    pub initial_condition: Preset,
    pub amplitude: f64,
    pub output_dir: PathBuf,
    pub name: String,
    pub dump_fields: bool,
    pub mass_tol: f64,
    pub picard_tol: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            model: ModelKind::Wave1D,
            lx: 1.0,
            ly: 1.0,
            nx: 16,
            ny: 16,
            degree: 1,
            f: 5.0,
            g: 1.0,
            mean_depth: 1.0,
            apvm_tau: ApvmTau::Value(0.0),
            dt: 0.01,
            n_steps: 100,
            n_iter: Sweeps::Fixed(4),
            initial_condition: Preset::StandingWave,
            amplitude: 0.1,
            output_dir: PathBuf::from("output"),
            name: "run".into(),
            dump_fields: false,
            mass_tol: SolverSettings::default().mass_tol,
            picard_tol: SolverSettings::default().picard_tol,
        }
    }
}

impl ScenarioConfig {
    /// Defaults suited to a model, before any file is read.
    pub fn for_model(model: ModelKind) -> Self {
        let base = Self {
            model,
            name: model.name().to_string(),
            ..Self::default()
        };
        match model {
            ModelKind::Wave1D => base,
            ModelKind::SweLinear => Self {
                initial_condition: Preset::Geostrophic,
                ..base
            },
            ModelKind::SweNonlinear => Self {
                initial_condition: Preset::VortexPair,
                amplitude: 0.01,
                ..base
            },
        }
    }

    /// Parse a scenario file. Unset keys take the defaults of
    /// [`ScenarioConfig::for_model`] for the file's `model`.
    pub fn parse(text: &str) -> Result<Self> {
        let model = text
            .lines()
            .filter_map(|l| strip_comment(l).split_once('='))
            .find(|(k, _)| k.trim() == "model")
            .and_then(|(_, v)| v.trim().parse().ok())
            .unwrap_or(ModelKind::Wave1D);
        let mut cfg = Self::for_model(model);
        cfg.apply_text(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Apply `key = value` lines on top of the current values (no validation).
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = strip_comment(raw).trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::config(Some(i + 1), None, format!("expected `key = value`, got `{line}`")))?;
            self.set(key.trim(), value.trim())
                .map_err(|e| relabel(e, Some(i + 1)))?;
        }
        Ok(())
    }

    /// Apply a single `key=value` override.
    pub fn apply_override(&mut self, assignment: &str) -> Result<()> {
        let (key, value) = assignment
            .split_once('=')
            .ok_or_else(|| Error::config(None, None, format!("expected key=value, got `{assignment}`")))?;
        self.set(key.trim(), value.trim())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = |msg: String| Error::config(None, Some(key), msg);
        let num = |v: &str| v.parse::<f64>().map_err(|_| bad(format!("`{v}` is not a number")));
        let int = |v: &str| {
            v.parse::<usize>()
                .map_err(|_| bad(format!("`{v}` is not a non-negative integer")))
        };
        match key {
            "model" => self.model = value.parse().map_err(|e: Error| bad(inner(e)))?,
            "lx" | "length" => self.lx = num(value)?,
            "ly" => self.ly = num(value)?,
            "nx" | "ne" => self.nx = int(value)?,
            "ny" => self.ny = int(value)?,
            "degree" | "p" => self.degree = int(value)?,
            "f" => self.f = num(value)?,
            "g" => self.g = num(value)?,
            "H" | "mean_depth" => self.mean_depth = num(value)?,
            "apvm_tau" => {
                self.apvm_tau = if value == "auto" {
                    ApvmTau::Auto
                } else {
                    ApvmTau::Value(num(value)?)
                }
            }
            "dt" => self.dt = num(value)?,
            "n_steps" => self.n_steps = int(value)?,
            "n_iter" => {
                self.n_iter = if value == "converged" {
                    Sweeps::Converged
                } else {
                    Sweeps::Fixed(int(value)?)
                }
            }
            "initial_condition" | "preset" => {
                self.initial_condition = value.parse().map_err(|e: Error| bad(inner(e)))?
            }
            "amplitude" => self.amplitude = num(value)?,
            "output_dir" => self.output_dir = PathBuf::from(value),
            "name" => {
                if value.is_empty() || value.contains(['/', '\\']) {
                    return Err(bad(format!("`{value}` is not a valid file stem")));
                }
                self.name = value.to_string()
            }
            "dump_fields" => {
                self.dump_fields = value
                    .parse()
                    .map_err(|_| bad(format!("`{value}` is not true or false")))?
            }
            "mass_tol" => self.mass_tol = num(value)?,
            "picard_tol" => self.picard_tol = num(value)?,
            _ => return Err(Error::config(None, Some(key), "unknown key")),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |key: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::config(None, Some(key), format!("must be positive, got {v}")))
            }
        };
        positive("lx", self.lx)?;
        positive("ly", self.ly)?;
        positive("g", self.g)?;
        positive("H", self.mean_depth)?;
        positive("dt", self.dt)?;
        positive("mass_tol", self.mass_tol)?;
        positive("picard_tol", self.picard_tol)?;
        if !self.f.is_finite() {
            return Err(Error::config(None, Some("f"), "must be finite"));
        }
        if !self.amplitude.is_finite() {
            return Err(Error::config(None, Some("amplitude"), "must be finite"));
        }
        if let ApvmTau::Value(t) = self.apvm_tau {
            if !(t >= 0.0 && t.is_finite()) {
                return Err(Error::config(
                    None,
                    Some("apvm_tau"),
                    format!("must be non-negative, got {t}"),
                ));
            }
        }
        if self.nx == 0 || (self.model != ModelKind::Wave1D && self.ny == 0) {
            return Err(Error::config(None, Some("nx"), "cell counts must be positive"));
        }
        if self.n_iter == Sweeps::Fixed(0) {
            return Err(Error::config(None, Some("n_iter"), "at least one sweep is required"));
        }
        let degrees = match self.model {
            ModelKind::Wave1D => 1..=3,
            _ => 1..=2,
        };
        if !degrees.contains(&self.degree) {
            return Err(Error::config(
                None,
                Some("degree"),
                format!("degree {} is not supported by {}", self.degree, self.model),
            ));
        }
        let want_dim = if self.model == ModelKind::Wave1D { 1 } else { 2 };
        if self.initial_condition.dim() != want_dim {
            return Err(Error::config(
                None,
                Some("initial_condition"),
                format!("`{}` does not apply to {}", self.initial_condition, self.model),
            ));
        }
        Ok(())
    }

    pub fn swe_params(&self) -> SweParams {
        SweParams {
            f: self.f,
            g: self.g,
            mean_depth: self.mean_depth,
            apvm_tau: self.apvm_tau.resolve(self.dt),
        }
    }

    pub fn solver_settings(&self) -> SolverSettings {
        SolverSettings {
            mass_tol: self.mass_tol,
            picard_tol: self.picard_tol,
            ..SolverSettings::default()
        }
    }

    /// Serialise every key; parsing the result gives an identical value.
    pub fn to_config_string(&self) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            s.push_str(k);
            s.push_str(" = ");
            s.push_str(&v);
            s.push('\n');
        };
        put("model", self.model.to_string());
        put("lx", format!("{:?}", self.lx));
        put("ly", format!("{:?}", self.ly));
        put("nx", self.nx.to_string());
        put("ny", self.ny.to_string());
        put("degree", self.degree.to_string());
        put("f", format!("{:?}", self.f));
        put("g", format!("{:?}", self.g));
        put("H", format!("{:?}", self.mean_depth));
        put("apvm_tau", self.apvm_tau.to_string());
        put("dt", format!("{:?}", self.dt));
        put("n_steps", self.n_steps.to_string());
        put("n_iter", self.n_iter.to_string());
        put("initial_condition", self.initial_condition.to_string());
        put("amplitude", format!("{:?}", self.amplitude));
        put("output_dir", self.output_dir.display().to_string());
        put("name", self.name.clone());
        put("dump_fields", self.dump_fields.to_string());
        put("mass_tol", format!("{:?}", self.mass_tol));
        put("picard_tol", format!("{:?}", self.picard_tol));
        s
    }
}

fn inner(e: Error) -> String {
    match e {
        Error::InvalidArgument(m) => m,
        other => other.to_string(),
    }
}

fn strip_comment(line: &str) -> &str {
    line.split_once('#').map_or(line, |(l, _)| l)
}

fn relabel(e: Error, line: Option<usize>) -> Error {
    match e {
        Error::Config { key, message, .. } => Error::Config { line, key, message },
        other => other,
    }
}
