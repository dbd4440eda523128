//! Time steppers: the 1D compatible wave system and the linear and nonlinear
//! rotating shallow water equations.
//!
//! All steppers use the implicit midpoint rule. The linear models eliminate
//! `h` and solve for `u`; the nonlinear model performs Picard sweeps.

mod swe;
mod wave1d;

pub use swe::{apply_apvm, NonlinearStepInfo, SweModel, SweParams, SweState};
pub use wave1d::{step_wave1d, Wave1D, Wave1DState};

use std::sync::Mutex;

use crate::error::{Error, Result};
use crate::linalg::{block_diagonal_inverse, cg_solve_with, norm, SolveReport};
use crate::space::FunctionSpace;
use crate::sparse::SparseMatrix;

/// Tolerances shared by the steppers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    /// Relative residual for mass-matrix CG solves.
    pub mass_tol: f64,
    pub mass_max_iter: usize,
    /// Relative increment at which linear midpoint iterations stop.
    pub picard_tol: f64,
    pub picard_max_iter: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            mass_tol: 1e-13,
            mass_max_iter: 5_000,
            picard_tol: 1e-13,
            picard_max_iter: 500,
        }
    }
}

impl SolverSettings {
    pub(crate) fn cg(&self) -> crate::linalg::CgOptions {
        crate::linalg::CgOptions {
            tol: self.mass_tol,
            max_iter: self.mass_max_iter,
        }
    }
}

/// Implicit midpoint for the linear systems `M_u u' = -C u + a E h`,
/// `M_h h' = -b E^T u` with a block-diagonal `M_h`.
///
/// Eliminating `h1` leaves `(M_u + s² a b E M_h^{-1} E^T) u1 = r - s C (u0 + u1)`
/// with `s = dt/2`; the `C` term is iterated to `picard_tol`.
#[derive(Debug)]
pub(crate) struct LinearMidpoint {
    m_u: SparseMatrix,
    e: SparseMatrix,
    m_h_inv: SparseMatrix,
    /// `E M_h^{-1} E^T`
    schur: SparseMatrix,
    coriolis: Option<SparseMatrix>,
    a: f64,
    b: f64,
    settings: SolverSettings,
    cache: Mutex<Option<(f64, SparseMatrix)>>,
}

impl Clone for LinearMidpoint {
    fn clone(&self) -> Self {
        Self {
            m_u: self.m_u.clone(),
            e: self.e.clone(),
            m_h_inv: self.m_h_inv.clone(),
            schur: self.schur.clone(),
            coriolis: self.coriolis.clone(),
            a: self.a,
            b: self.b,
            settings: self.settings,
            cache: Mutex::new(self.cache.lock().unwrap_or_else(|e| e.into_inner()).clone()),
        }
    }
}

impl LinearMidpoint {
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn new(
        m_u: SparseMatrix,
        e: SparseMatrix,
        m_h: &SparseMatrix,
        h_space: &FunctionSpace,
        coriolis: Option<SparseMatrix>,
        a: f64,
        b: f64,
        settings: SolverSettings,
    ) -> Result<Self> {
        let m_h_inv = block_diagonal_inverse(m_h, (0..h_space.mesh().n_cells()).map(|c| h_space.cell_dofs(c).0))?;
        let schur = e.matmul(&m_h_inv).matmul(&e.transpose());
        Ok(Self {
            m_u,
            e,
            m_h_inv,
            schur,
            coriolis,
            a,
            b,
            settings,
            cache: Mutex::new(None),
        })
    }

    fn operator(&self, s: f64) -> SparseMatrix {
        let mut cache = self.cache.lock().unwrap_or_else(|e| e.into_inner());
        match &*cache {
            Some((cached, op)) if *cached == s => op.clone(),
            _ => {
                let op = self.m_u.add_scaled(1.0, &self.schur, s * s * self.a * self.b);
                *cache = Some((s, op.clone()));
                op
            }
        }
    }

    pub(crate) fn step(&self, u0: &[f64], h0: &[f64], dt: f64) -> Result<(Vec<f64>, Vec<f64>)> {
        check_dt(dt)?;
        let s = 0.5 * dt;
        let (a, b) = (self.a, self.b);
        let op = self.operator(s);
        let mu = self.m_u.mul_vec(u0);
        let eh = self.e.mul_vec(h0);
        let pu = self.schur.mul_vec(u0);
        let base: Vec<f64> = (0..u0.len())
            .map(|i| mu[i] + 2.0 * s * a * eh[i] - s * s * a * b * pu[i])
            .collect();
        let opts = self.settings.cg();
        let u1 = match &self.coriolis {
            None => cg_solve_with(&op, &base, Some(u0), opts, None)?.0,
            Some(c) => {
                let cu0 = c.mul_vec(u0);
                let mut u = u0.to_vec();
                let mut rel = f64::INFINITY;
                let mut converged = false;
                for _ in 0..self.settings.picard_max_iter {
                    let cu = c.mul_vec(&u);
                    let rhs: Vec<f64> = (0..u.len()).map(|i| base[i] - s * (cu0[i] + cu[i])).collect();
                    let next = cg_solve_with(&op, &rhs, Some(&u), opts, None)?.0;
                    let diff: f64 = next.iter().zip(&u).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
                    let scale = norm(&next).max(norm(u0));
                    u = next;
                    rel = if scale == 0.0 { 0.0 } else { diff / scale };
                    if rel <= self.settings.picard_tol {
                        converged = true;
                        break;
                    }
                    if !rel.is_finite() {
                        break;
                    }
                }
                if !converged {
                    return Err(Error::SolverFailure {
                        context: format!("implicit midpoint Coriolis iteration (time step {dt:e} may be too large)"),
                        report: SolveReport {
                            iterations: self.settings.picard_max_iter,
                            relative_residual: rel,
                            converged: false,
                        },
                    });
                }
                u
            }
        };
        let sum: Vec<f64> = u0.iter().zip(&u1).map(|(x, y)| x + y).collect();
        let dh = self.m_h_inv.mul_vec(&self.e.tr_mul_vec(&sum));
        let h1 = h0.iter().zip(&dh).map(|(h, d)| h - s * b * d).collect();
        Ok((u1, h1))
    }
}

pub(crate) fn check_dt(dt: f64) -> Result<()> {
    if dt > 0.0 && dt.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("time step must be positive, got {dt}")))
    }
}
