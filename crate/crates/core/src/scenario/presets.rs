//! Named initial conditions with closed forms.
//!
//! * `standing-wave` (1D): `u = A sin(kx) sin(kt)`, `h = A cos(kx) cos(kt)`.
//! * `travelling-wave` (1D): `u = h = A sin(k(x - t))`.
//! * `geostrophic` (2D): `ψ = A sin(2πx/Lx) sin(2πy/Ly)`, `u = ∇⊥ψ`,
//!   `g h = P(f ψ)`.
//! * `gravity-wave` (2D, exact for `f = 0`): `h = A cos(kx - ωt)`,
//!   `u = (gA/c) cos(kx - ωt) x̂` with `c = sqrt(gH)`, `ω = ck`.
//! * `vortex-pair` (2D): geostrophically initialised pair of opposite-signed
//!   periodic Gaussian vortices.
//!
//! Here `k = 2π/L` and, for 2D presets, the nonlinear model adds `H` to `h`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::models::{SweModel, SweParams, SweState, Wave1D, Wave1DState};
use crate::space::FeFunction;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Preset {
    StandingWave,
    TravellingWave,
    Geostrophic,
    GravityWave,
    VortexPair,
}

impl Preset {
    pub const ALL: [Preset; 5] = [
        Preset::StandingWave,
        Preset::TravellingWave,
        Preset::Geostrophic,
        Preset::GravityWave,
        Preset::VortexPair,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::StandingWave => "standing-wave",
            Preset::TravellingWave => "travelling-wave",
            Preset::Geostrophic => "geostrophic",
            Preset::GravityWave => "gravity-wave",
            Preset::VortexPair => "vortex-pair",
        }
    }

    pub fn dim(self) -> usize {
        match self {
            Preset::StandingWave | Preset::TravellingWave => 1,
            _ => 2,
        }
    }

    /// Whether a closed-form solution exists for all times.
    pub fn has_exact_solution(self, params: &SweParams) -> bool {
        match self {
            Preset::StandingWave | Preset::TravellingWave => true,
            Preset::GravityWave => params.f == 0.0,
            _ => false,
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s.trim())
            .ok_or_else(|| Error::invalid(format!("unknown initial condition `{s}`")))
    }
}

/// Exact 1D solution `(u, h)` at `(x, t)` on a periodic interval of length `l`.
pub fn wave1d_exact(preset: Preset, amplitude: f64, l: f64, x: f64, t: f64) -> Result<(f64, f64)> {
    let k = 2.0 * PI / l;
    match preset {
        Preset::StandingWave => Ok((
            amplitude * (k * x).sin() * (k * t).sin(),
            amplitude * (k * x).cos() * (k * t).cos(),
        )),
        Preset::TravellingWave => {
            let v = amplitude * (k * (x - t)).sin();
            Ok((v, v))
        }
        _ => Err(Error::invalid(format!("`{preset}` is not a 1D initial condition"))),
    }
}

pub fn wave1d_initial(model: &Wave1D, preset: Preset, amplitude: f64) -> Result<Wave1DState> {
    let l = model.v0().mesh().as_interval().expect("interval mesh").length();
    wave1d_exact(preset, amplitude, l, 0.0, 0.0)?;
    model.initial_state(
        |x| wave1d_exact(preset, amplitude, l, x, 0.0).unwrap().0,
        |x| wave1d_exact(preset, amplitude, l, x, 0.0).unwrap().1,
    )
}

/// Exact plane gravity wave `(u, h)` for `f = 0` on a domain of width `lx`.
pub fn gravity_wave_exact(params: &SweParams, amplitude: f64, lx: f64, x: [f64; 2], t: f64) -> ([f64; 2], f64) {
    let c = (params.g * params.mean_depth).sqrt();
    let k = 2.0 * PI / lx;
    let phase = (k * x[0] - c * k * t).cos();
    ([params.g * amplitude / c * phase, 0.0], amplitude * phase)
}

/// Streamfunction of the balanced presets.
pub fn streamfunction(preset: Preset, amplitude: f64, extents: [f64; 2]) -> Result<Box<dyn Fn([f64; 2]) -> f64>> {
    let [lx, ly] = extents;
    match preset {
        Preset::Geostrophic => Ok(Box::new(move |x: [f64; 2]| {
            amplitude * (2.0 * PI * x[0] / lx).sin() * (2.0 * PI * x[1] / ly).sin()
        })),
        Preset::VortexPair => {
            // periodic Gaussian of angular width s centred at c
            let bump = move |x: [f64; 2], c: [f64; 2]| {
                let s2 = 0.3f64 * 0.3;
                let ax = (2.0 * PI * (x[0] - c[0] * lx) / lx).cos() - 1.0;
                let ay = (2.0 * PI * (x[1] - c[1] * ly) / ly).cos() - 1.0;
                ((ax + ay) / s2).exp()
            };
            Ok(Box::new(move |x: [f64; 2]| {
                amplitude * (bump(x, [0.35, 0.55]) - bump(x, [0.65, 0.45]))
            }))
        }
        _ => Err(Error::invalid(format!("`{preset}` has no streamfunction"))),
    }
}

/// Initial shallow water state. With `full_depth` the mean depth `H` is
/// added to `h` (nonlinear model); otherwise `h` is the perturbation.
pub fn swe_initial(model: &SweModel, preset: Preset, amplitude: f64, full_depth: bool) -> Result<SweState> {
    let mesh = model.v0().mesh();
    let extents = mesh.as_quad().expect("quadrilateral mesh").extents();
    let mut state = match preset {
        Preset::Geostrophic | Preset::VortexPair => {
            let psi = streamfunction(preset, amplitude, extents)?;
            let psi = FeFunction::interpolate_scalar(model.v0(), psi)?;
            model.geostrophic_init(&psi)?
        }
        Preset::GravityWave => {
            let p = *model.params();
            let u = FeFunction::interpolate_vector(model.v1(), |x| {
                gravity_wave_exact(&p, amplitude, extents[0], x, 0.0).0
            })?;
            let h = FeFunction::interpolate_scalar(model.v2(), |x| {
                gravity_wave_exact(&p, amplitude, extents[0], x, 0.0).1
            })?;
            SweState { u, h, t: 0.0 }
        }
        _ => return Err(Error::invalid(format!("`{preset}` is not a 2D initial condition"))),
    };
    if full_depth {
        let mean = FeFunction::constant(model.v2(), model.params().mean_depth)?;
        state
            .h
            .coeffs_mut()
            .iter_mut()
            .zip(mean.coeffs())
            .for_each(|(h, m)| *h += m);
    }
    Ok(state)
}
