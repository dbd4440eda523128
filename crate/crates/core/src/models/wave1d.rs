use std::sync::Arc;

use crate::assembly::Assembler;
use crate::error::{Error, Result};
use crate::linalg::{dot, SpdSolver};
use crate::mesh::Mesh;
use crate::space::{make_space, Family, FeFunction, FunctionSpace};
use crate::sparse::SparseMatrix;

use super::{check_dt, LinearMidpoint, SolverSettings};

/// Periodic 1D wave system `u_t + h_x = 0`, `h_t + u_x = 0` with `u` in
/// `CG(p)` and `h` in `DG(p-1)`:
///
/// `M0 u' = D h`, `M1 h' = -D^T u`, where `D_ij = ∫ N_i' Ñ_j`.
#[derive(Debug, Clone)]
pub struct Wave1D {
    v0: Arc<FunctionSpace>,
    v1: Arc<FunctionSpace>,
    m0: SpdSolver,
    m1: SpdSolver,
    d: SparseMatrix,
    stepper: LinearMidpoint,
}

#[derive(Debug, Clone)]
pub struct Wave1DState {
    pub u: FeFunction,
    pub h: FeFunction,
    pub t: f64,
}

impl Wave1D {
    pub fn new(mesh: Arc<Mesh>, p: usize, settings: SolverSettings) -> Result<Self> {
        if mesh.dim() != 1 {
            return Err(Error::invalid("the wave model needs an interval mesh"));
        }
        if p == 0 {
            return Err(Error::UnsupportedSpace("CG0 does not exist".into()));
        }
        let v0 = make_space(&mesh, Family::Cg, p)?;
        let v1 = make_space(&mesh, Family::Dg, p - 1)?;
        let asm = Assembler::default();
        let m0 = asm.mass(&v0, None)?;
        let m1 = asm.mass(&v1, None)?;
        let d = asm.grad_1d(&v0, &v1)?;
        let stepper = LinearMidpoint::new(m0.clone(), d.clone(), &m1, &v1, None, 1.0, 1.0, settings)?;
        Ok(Self {
            m0: SpdSolver::new(m0, settings.cg()),
            m1: SpdSolver::new(m1, settings.cg()),
            v0,
            v1,
            d,
            stepper,
        })
    }

    pub fn v0(&self) -> &Arc<FunctionSpace> {
        &self.v0
    }

    pub fn v1(&self) -> &Arc<FunctionSpace> {
        &self.v1
    }

    pub fn grad_matrix(&self) -> &SparseMatrix {
        &self.d
    }

    pub fn mass0(&self) -> &SparseMatrix {
        self.m0.matrix()
    }

    pub fn mass1(&self) -> &SparseMatrix {
        self.m1.matrix()
    }

    /// State from analytic initial profiles.
    pub fn initial_state(&self, u: impl Fn(f64) -> f64, h: impl Fn(f64) -> f64) -> Result<Wave1DState> {
        Ok(Wave1DState {
            u: FeFunction::interpolate_scalar(&self.v0, |x| u(x[0]))?,
            h: FeFunction::interpolate_scalar(&self.v1, |x| h(x[0]))?,
            t: 0.0,
        })
    }

    pub fn zero_state(&self) -> Wave1DState {
        Wave1DState {
            u: FeFunction::zeros(&self.v0),
            h: FeFunction::zeros(&self.v1),
            t: 0.0,
        }
    }

    /// `(M0^{-1} D h, -M1^{-1} D^T u)`
    pub fn rate(&self, u: &[f64], h: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let du = self.m0.solve(&self.d.mul_vec(h), None)?;
        let mut dh = self.m1.solve(&self.d.tr_mul_vec(u), None)?;
        dh.iter_mut().for_each(|v| *v = -*v);
        Ok((du, dh))
    }

    /// One implicit midpoint step.
    pub fn step(&self, state: &Wave1DState, dt: f64) -> Result<Wave1DState> {
        check_dt(dt)?;
        self.check_state(state)?;
        let (u, h) = self.stepper.step(state.u.coeffs(), state.h.coeffs(), dt)?;
        Ok(Wave1DState {
            u: FeFunction::from_coeffs(&self.v0, u)?,
            h: FeFunction::from_coeffs(&self.v1, h)?,
            t: state.t + dt,
        })
    }

    /// `½ (u^T M0 u + h^T M1 h)`
    pub fn energy(&self, state: &Wave1DState) -> f64 {
        let u = state.u.coeffs();
        let h = state.h.coeffs();
        0.5 * (dot(u, &self.m0.matrix().mul_vec(u)) + dot(h, &self.m1.matrix().mul_vec(h)))
    }

    /// `∫ h`
    pub fn mass(&self, state: &Wave1DState) -> f64 {
        self.m1.matrix().mul_vec(state.h.coeffs()).iter().sum()
    }

    fn check_state(&self, state: &Wave1DState) -> Result<()> {
        if state.u.space().dim() != self.v0.dim() || state.h.space().dim() != self.v1.dim() {
            return Err(Error::invalid("state does not belong to this model's spaces"));
        }
        Ok(())
    }
}

pub fn step_wave1d(model: &Wave1D, state: &Wave1DState, dt: f64) -> Result<Wave1DState> {
    model.step(state, dt)
}
