use std::sync::Arc;

use crate::assembly::{
    assemble_perpgrad, gradients_at_quadrature, load_at_quadrature, rule_for, values_at_quadrature, Assembler, Weight,
};
use crate::error::{Error, Result};
use crate::linalg::{cg_solve_with, dot, SpdSolver};
use crate::mesh::Mesh;
use crate::quadrature::QuadratureRule;
use crate::space::{make_space, Family, FeFunction, FunctionSpace};
use crate::sparse::SparseMatrix;

use super::{check_dt, LinearMidpoint, SolverSettings};

/// Physical parameters of the f-plane shallow water equations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweParams {
    /// Coriolis parameter.
    pub f: f64,
    /// Gravitational acceleration.
    pub g: f64,
    /// Mean layer depth `H`.
    pub mean_depth: f64,
    /// APVM time scale; zero disables the stabilisation.
    pub apvm_tau: f64,
}

impl Default for SweParams {
    fn default() -> Self {
        Self {
            f: 1.0,
            g: 1.0,
            mean_depth: 1.0,
            apvm_tau: 0.0,
        }
    }
}

impl SweParams {
    pub fn validate(&self) -> Result<()> {
        if !self.f.is_finite() {
            return Err(Error::invalid("f must be finite"));
        }
        if !(self.g > 0.0 && self.g.is_finite()) {
            return Err(Error::invalid(format!("g must be positive, got {}", self.g)));
        }
        if !(self.mean_depth > 0.0 && self.mean_depth.is_finite()) {
            return Err(Error::invalid(format!("H must be positive, got {}", self.mean_depth)));
        }
        if !(self.apvm_tau >= 0.0 && self.apvm_tau.is_finite()) {
            return Err(Error::invalid(format!(
                "apvm_tau must be non-negative, got {}",
                self.apvm_tau
            )));
        }
        Ok(())
    }
}

/// Velocity in `RT(p-1)` and depth in `DG(p-1)`. For the linear model `h` is
/// the perturbation about `H`; for the nonlinear model it is the full depth.
#[derive(Debug, Clone)]
pub struct SweState {
    pub u: FeFunction,
    pub h: FeFunction,
    pub t: f64,
}

/// Fields used by the last Picard sweep of a nonlinear step.
#[derive(Debug, Clone)]
pub struct NonlinearStepInfo {
    /// Potential vorticity diagnosed from the midpoint state.
    pub q_mid: FeFunction,
    /// APVM-modified PV at the model quadrature points.
    pub q_tilde: Vec<f64>,
    /// Mass flux projected from the midpoint state.
    pub flux: FeFunction,
}

/// Compatible `(CG(p), RT(p-1), DG(p-1))` discretisation on a doubly
/// periodic quadrilateral mesh, with every operator assembled up front.
#[derive(Debug, Clone)]
pub struct SweModel {
    v0: Arc<FunctionSpace>,
    v1: Arc<FunctionSpace>,
    v2: Arc<FunctionSpace>,
    params: SweParams,
    settings: SolverSettings,
    rule: QuadratureRule,
    m0: SparseMatrix,
    m1: SpdSolver,
    m2: SpdSolver,
    div: SparseMatrix,
    perpgrad: SparseMatrix,
    vort: SparseMatrix,
    coriolis: SparseMatrix,
    f_load: Vec<f64>,
    linear: LinearMidpoint,
}

impl SweModel {
    pub fn new(mesh: Arc<Mesh>, p: usize, params: SweParams, settings: SolverSettings) -> Result<Self> {
        params.validate()?;
        if mesh.dim() != 2 {
            return Err(Error::invalid("the shallow water model needs a quadrilateral mesh"));
        }
        if !(1..=2).contains(&p) {
            return Err(Error::UnsupportedSpace(format!(
                "compatible triple of degree {p} (supported: 1, 2)"
            )));
        }
        let v0 = make_space(&mesh, Family::Cg, p)?;
        let v1 = make_space(&mesh, Family::Rt, p - 1)?;
        let v2 = make_space(&mesh, Family::Dg, p - 1)?;
        let asm = Assembler::default();
        let m0 = asm.mass(&v0, None)?;
        let m1 = asm.mass(&v1, None)?;
        let m2 = asm.mass(&v2, None)?;
        let div = asm.div(&v1, &v2)?;
        let perpgrad = assemble_perpgrad(&v0, &v1)?;
        let vort = asm.vort_rhs(&v0, &v1)?;
        let coriolis = asm.perp_mass(&v1, Weight::Constant(params.f))?;
        let f_load: Vec<f64> = m0.mul_vec(&vec![params.f; v0.dim()]);
        let rule = rule_for(&[&v0, &v1, &v2], 0);
        let linear = LinearMidpoint::new(
            m1.clone(),
            div.transpose(),
            &m2,
            &v2,
            (params.f != 0.0).then(|| coriolis.clone()),
            params.g,
            params.mean_depth,
            settings,
        )?;
        Ok(Self {
            m1: SpdSolver::new(m1, settings.cg()),
            m2: SpdSolver::new(m2, settings.cg()),
            v0,
            v1,
            v2,
            params,
            settings,
            rule,
            m0,
            div,
            perpgrad,
            vort,
            coriolis,
            f_load,
            linear,
        })
    }

    pub fn params(&self) -> &SweParams {
        &self.params
    }

    pub fn settings(&self) -> &SolverSettings {
        &self.settings
    }

    pub fn v0(&self) -> &Arc<FunctionSpace> {
        &self.v0
    }

    pub fn v1(&self) -> &Arc<FunctionSpace> {
        &self.v1
    }

    pub fn v2(&self) -> &Arc<FunctionSpace> {
        &self.v2
    }

    /// Quadrature rule on which nonlinear products are evaluated.
    pub fn rule(&self) -> &QuadratureRule {
        &self.rule
    }

    pub fn mass0(&self) -> &SparseMatrix {
        &self.m0
    }

    pub fn mass1(&self) -> &SparseMatrix {
        self.m1.matrix()
    }

    pub fn mass2(&self) -> &SparseMatrix {
        self.m2.matrix()
    }

    /// `B_ij = ∫ φ_i ∇·w_j`
    pub fn div_matrix(&self) -> &SparseMatrix {
        &self.div
    }

    /// `G`: CG coefficients to RT coefficients of `∇⊥ψ`.
    pub fn perpgrad_matrix(&self) -> &SparseMatrix {
        &self.perpgrad
    }

    /// `W_ij = ∫ ∇⊥γ_i · w_j`
    pub fn vort_matrix(&self) -> &SparseMatrix {
        &self.vort
    }

    /// `C(f)`
    pub fn coriolis_matrix(&self) -> &SparseMatrix {
        &self.coriolis
    }

    pub fn state(&self, u: Vec<f64>, h: Vec<f64>, t: f64) -> Result<SweState> {
        Ok(SweState {
            u: FeFunction::from_coeffs(&self.v1, u)?,
            h: FeFunction::from_coeffs(&self.v2, h)?,
            t,
        })
    }

    pub fn solve_m1(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        self.m1.solve(rhs, None)
    }

    pub fn solve_m2(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        self.m2.solve(rhs, None)
    }

    fn check_state(&self, state: &SweState) -> Result<()> {
        if state.u.space().dim() != self.v1.dim()
            || state.h.space().dim() != self.v2.dim()
            || !state.u.space().same_mesh(&self.v1)
            || !state.h.space().same_mesh(&self.v2)
        {
            return Err(Error::invalid("state does not belong to this model's spaces"));
        }
        Ok(())
    }

    /// Balanced state `u = ∇⊥ψ`, `g h = P_2(f ψ)` (h is the perturbation).
    pub fn geostrophic_init(&self, psi: &FeFunction) -> Result<SweState> {
        if psi.space().family() != Family::Cg || psi.space().dim() != self.v0.dim() || !psi.space().same_mesh(&self.v0)
        {
            return Err(Error::invalid("streamfunction must live in the model's CG space"));
        }
        let u = self.perpgrad.mul_vec(psi.coeffs());
        let psi_q = values_at_quadrature(psi, &self.rule);
        let (f, g) = (self.params.f, self.params.g);
        let rhs = load_at_quadrature(&self.v2, &self.rule, |c, q, _| {
            [f * psi_q[c * self.rule.len() + q][0] / g, 0.0]
        });
        let h = self.m2.solve(&rhs, None)?;
        self.state(u, h, 0.0)
    }

    /// Linear right-hand side `(M1^{-1}(-C(f) u + g B^T h), -H M2^{-1} B u)`.
    pub fn linear_rate(&self, u: &[f64], h: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let g = self.params.g;
        let mut ru = self.div.tr_mul_vec(h);
        let cu = self.coriolis.mul_vec(u);
        ru.iter_mut().zip(&cu).for_each(|(r, c)| *r = g * *r - c);
        let du = self.m1.solve(&ru, None)?;
        let mut dh = self.m2.solve(&self.div.mul_vec(u), None)?;
        dh.iter_mut().for_each(|v| *v *= -self.params.mean_depth);
        Ok((du, dh))
    }

    /// One implicit midpoint step of the linear f-plane equations.
    pub fn step_linear(&self, state: &SweState, dt: f64) -> Result<SweState> {
        check_dt(dt)?;
        self.check_state(state)?;
        let (u, h) = self.linear.step(state.u.coeffs(), state.h.coeffs(), dt)?;
        self.state(u, h, state.t + dt)
    }

    /// `½ (H u^T M1 u + g h^T M2 h)`
    pub fn linear_energy(&self, state: &SweState) -> f64 {
        let u = state.u.coeffs();
        let h = state.h.coeffs();
        0.5 * (self.params.mean_depth * dot(u, &self.m1.matrix().mul_vec(u))
            + self.params.g * dot(h, &self.m2.matrix().mul_vec(h)))
    }

    /// `||M1^{-1}(-C(f) u + g B^T h)||_{M1} / ||u||_{M1}` (unnormalised when `u = 0`).
    pub fn balance_residual(&self, state: &SweState) -> Result<f64> {
        self.check_state(state)?;
        let u = state.u.coeffs();
        let (r, _) = self.linear_rate(u, state.h.coeffs())?;
        let m1 = self.m1.matrix();
        let num = dot(&r, &m1.mul_vec(&r)).max(0.0).sqrt();
        let den = dot(u, &m1.mul_vec(u)).max(0.0).sqrt();
        Ok(if den > 0.0 { num / den } else { num })
    }

    fn check_positive(&self, h: &FeFunction) -> Result<()> {
        let vals = values_at_quadrature(h, &self.rule);
        match vals.iter().position(|v| !(v[0] > 0.0)) {
            None => Ok(()),
            Some(k) => Err(Error::StateInvalid(format!(
                "depth is {} at quadrature point {} of cell {}",
                vals[k][0],
                k % self.rule.len(),
                k / self.rule.len()
            ))),
        }
    }

    /// PV `q` in V0 from `∫ γ q h = -∫ ∇⊥γ·u + ∫ γ f`.
    pub fn diagnose_q(&self, u: &FeFunction, h: &FeFunction) -> Result<FeFunction> {
        self.check_positive(h)?;
        let m0h = Assembler::default().mass(&self.v0, Some(Weight::Field(h)))?;
        let rhs = self.pv_rhs(u.coeffs());
        let (q, _) = cg_solve_with(&m0h, &rhs, None, self.settings.cg(), None)?;
        FeFunction::from_coeffs(&self.v0, q)
    }

    /// `-W u + ∫ γ f`, which equals `∫ γ q h` for the diagnosed `q`.
    pub fn pv_rhs(&self, u: &[f64]) -> Vec<f64> {
        let wu = self.vort.mul_vec(u);
        self.f_load.iter().zip(&wu).map(|(f, w)| f - w).collect()
    }

    /// Mass flux: the V1 projection of `h u`.
    pub fn compute_flux(&self, u: &FeFunction, h: &FeFunction) -> Result<FeFunction> {
        let uq = values_at_quadrature(u, &self.rule);
        let hq = values_at_quadrature(h, &self.rule);
        let nq = self.rule.len();
        let rhs = load_at_quadrature(&self.v1, &self.rule, |c, q, _| {
            let k = c * nq + q;
            [hq[k][0] * uq[k][0], hq[k][0] * uq[k][1]]
        });
        FeFunction::from_coeffs(&self.v1, self.m1.solve(&rhs, None)?)
    }

    /// APVM-modified PV at the model quadrature points.
    pub fn apvm(&self, q: &FeFunction, u: &FeFunction, tau: f64) -> Result<Vec<f64>> {
        apply_apvm(q, u, tau, &self.rule)
    }

    /// `P_2(½|u|²)`
    fn kinetic_projection(&self, uq: &[[f64; 2]]) -> Result<Vec<f64>> {
        let nq = self.rule.len();
        let rhs = load_at_quadrature(&self.v2, &self.rule, |c, q, _| {
            let v = uq[c * nq + q];
            [0.5 * (v[0] * v[0] + v[1] * v[1]), 0.0]
        });
        self.m2.solve(&rhs, None)
    }

    /// One nonlinear step: implicit midpoint approximated by `n_iter` Picard
    /// sweeps, each evaluating PV, flux and Bernoulli potential at the
    /// current midpoint estimate.
    pub fn step_nonlinear(&self, state: &SweState, dt: f64, n_iter: usize) -> Result<(SweState, NonlinearStepInfo)> {
        if n_iter == 0 {
            return Err(Error::invalid("at least one Picard sweep is required"));
        }
        self.sweep(state, dt, Sweeps::Fixed(n_iter))
    }

    /// Nonlinear step with Picard sweeps repeated until the relative
    /// increment of `(u, h)` falls below the model's `picard_tol`.
    pub fn step_nonlinear_converged(&self, state: &SweState, dt: f64) -> Result<(SweState, NonlinearStepInfo)> {
        self.sweep(state, dt, Sweeps::Converged)
    }

    fn sweep(&self, state: &SweState, dt: f64, sweeps: Sweeps) -> Result<(SweState, NonlinearStepInfo)> {
        check_dt(dt)?;
        self.check_state(state)?;
        let n_iter = match sweeps {
            Sweeps::Fixed(n) => n,
            Sweeps::Converged => self.settings.picard_max_iter,
        };
        let u0 = state.u.coeffs();
        let h0 = state.h.coeffs();
        let mut u1 = u0.to_vec();
        let mut h1 = h0.to_vec();
        let mut info = None;
        let mut increment = f64::INFINITY;
        let mut converged = false;
        let g = self.params.g;
        for _ in 0..n_iter {
            let um = FeFunction::from_coeffs(&self.v1, avg(u0, &u1))?;
            let hm = FeFunction::from_coeffs(&self.v2, avg(h0, &h1))?;
            let q = self.diagnose_q(&um, &hm)?;
            let flux = self.compute_flux(&um, &hm)?;
            let q_tilde = self.apvm(&q, &um, self.params.apvm_tau)?;
            let c = Assembler::default().perp_mass(
                &self.v1,
                Weight::Quadrature {
                    rule: &self.rule,
                    values: &q_tilde,
                },
            )?;
            let kinetic = self.kinetic_projection(&values_at_quadrature(&um, &self.rule))?;
            let bernoulli: Vec<f64> = hm.coeffs().iter().zip(&kinetic).map(|(h, k)| g * h + k).collect();
            let mut ru = self.div.tr_mul_vec(&bernoulli);
            let cf = c.mul_vec(flux.coeffs());
            ru.iter_mut().zip(&cf).for_each(|(r, c)| *r -= c);
            let du = self.m1.solve(&ru, None)?;
            let dh = self.m2.solve(&self.div.mul_vec(flux.coeffs()), None)?;
            let u_next: Vec<f64> = u0.iter().zip(&du).map(|(u, d)| u + dt * d).collect();
            let h_next: Vec<f64> = h0.iter().zip(&dh).map(|(h, d)| h - dt * d).collect();
            increment = (sq_dist(&u_next, &u1) + sq_dist(&h_next, &h1)).sqrt()
                / (dot(&u_next, &u_next) + dot(&h_next, &h_next))
                    .sqrt()
                    .max(f64::MIN_POSITIVE);
            u1 = u_next;
            h1 = h_next;
            info = Some(NonlinearStepInfo {
                q_mid: q,
                q_tilde,
                flux,
            });
            if matches!(sweeps, Sweeps::Converged) && increment <= self.settings.picard_tol {
                converged = true;
                break;
            }
        }
        if matches!(sweeps, Sweeps::Converged) && !converged {
            return Err(Error::SolverFailure {
                context: format!("nonlinear midpoint iteration (time step {dt:e} may be too large)"),
                report: crate::linalg::SolveReport {
                    iterations: n_iter,
                    relative_residual: increment,
                    converged: false,
                },
            });
        }
        let next = self.state(u1, h1, state.t + dt)?;
        Ok((next, info.expect("at least one sweep ran")))
    }

    /// Trapezoidal PV and flux of a step: `F̄ = (F0 + F1)/2` and `q̃` built
    /// from `q̄ = (q0 + q1)/2` advected by `ū = (u0 + u1)/2`.
    pub fn trapezoidal_pv_terms(&self, before: &SweState, after: &SweState) -> Result<(FeFunction, Vec<f64>)> {
        let q0 = self.diagnose_q(&before.u, &before.h)?;
        let q1 = self.diagnose_q(&after.u, &after.h)?;
        let f0 = self.compute_flux(&before.u, &before.h)?;
        let f1 = self.compute_flux(&after.u, &after.h)?;
        let qbar = FeFunction::from_coeffs(&self.v0, avg(q0.coeffs(), q1.coeffs()))?;
        let ubar = FeFunction::from_coeffs(&self.v1, avg(before.u.coeffs(), after.u.coeffs()))?;
        let fbar = FeFunction::from_coeffs(&self.v1, avg(f0.coeffs(), f1.coeffs()))?;
        let q_tilde = self.apvm(&qbar, &ubar, self.params.apvm_tau)?;
        Ok((fbar, q_tilde))
    }

    /// Residual of the discrete PV flux law over one step,
    /// `max_i |∫ γ_i Δ(qh)/dt - ∫ ∇γ_i·F q̃| / (max_i |∫ γ_i Δ(qh)/dt| + max_i |∫ ∇γ_i·F q̃|)`.
    ///
    /// `∫ γ_i Δ(qh)` is taken from the PV equation itself, `-W Δu`, so
    /// solver noise in `q` is not amplified by `1/dt`.
    pub fn pv_consistency_residual(
        &self,
        before: &SweState,
        after: &SweState,
        dt: f64,
        flux: &FeFunction,
        q_tilde: &[f64],
    ) -> Result<f64> {
        check_dt(dt)?;
        self.check_state(before)?;
        self.check_state(after)?;
        let nq = self.rule.len();
        if q_tilde.len() != nq * self.v0.mesh().n_cells() {
            return Err(Error::invalid("q_tilde must hold one value per model quadrature point"));
        }
        let du: Vec<f64> = after
            .u
            .coeffs()
            .iter()
            .zip(before.u.coeffs())
            .map(|(a, b)| a - b)
            .collect();
        let rate: Vec<f64> = self.vort.mul_vec(&du).iter().map(|w| -w / dt).collect();
        let fq = values_at_quadrature(flux, &self.rule);
        // ∫ ∇γ_i·F q̃, assembled as a load with integrand (F q̃) against gradients
        let mut eb = crate::space::ElementBasis::for_rule(&self.v0, &self.rule);
        let mut transport = vec![0.0; self.v0.dim()];
        for cell in 0..self.v0.mesh().n_cells() {
            eb.reinit(cell);
            let det = eb.geometry().det();
            let (dofs, _) = self.v0.cell_dofs(cell);
            for q in 0..nq {
                let k = cell * nq + q;
                let w = self.rule.weights()[q] * det * q_tilde[k];
                for (i, &gi) in dofs.iter().enumerate() {
                    let gr = eb.grad(q, i);
                    transport[gi] += w * (gr[0] * fq[k][0] + gr[1] * fq[k][1]);
                }
            }
        }
        let maxabs = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let diff: Vec<f64> = rate.iter().zip(&transport).map(|(a, b)| a - b).collect();
        let scale = maxabs(&rate) + maxabs(&transport);
        Ok(if scale > 0.0 { maxabs(&diff) / scale } else { 0.0 })
    }
}

#[derive(Debug, Clone, Copy)]
enum Sweeps {
    Fixed(usize),
    Converged,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn avg(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| 0.5 * (x + y)).collect()
}

/// `q̃ = q - τ u·∇q` at the points of `rule`, indexed `cell * rule.len() + q`.
pub fn apply_apvm(q: &FeFunction, u: &FeFunction, tau: f64, rule: &QuadratureRule) -> Result<Vec<f64>> {
    if !(tau >= 0.0) {
        return Err(Error::invalid(format!("apvm tau must be non-negative, got {tau}")));
    }
    if q.space().is_vector() || !u.space().is_vector() {
        return Err(Error::invalid("APVM needs a scalar PV and a vector velocity"));
    }
    q.space().ensure_same_mesh(u.space())?;
    let qv = values_at_quadrature(q, rule);
    if tau == 0.0 {
        return Ok(qv.into_iter().map(|v| v[0]).collect());
    }
    let gq = gradients_at_quadrature(q, rule);
    let uv = values_at_quadrature(u, rule);
    Ok(qv
        .iter()
        .zip(&gq)
        .zip(&uv)
        .map(|((q, g), u)| q[0] - tau * (u[0] * g[0] + u[1] * g[1]))
        .collect())
}
