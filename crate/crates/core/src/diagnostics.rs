//! Conserved quantities, inf-sup constants, 1D dispersion spectra, balance
//! residuals and DoF-ratio audits.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::assembly::{quadrature_points, rule_for, values_at_quadrature, Assembler};
use crate::error::{Error, Result};
use crate::linalg::{generalized_eigen, orthogonal_complement, symmetrize, DENSE_CAP};
use crate::mesh::{Mesh, Mesh1D, Mesh2D};
use crate::models::{SweModel, SweParams, SweState, Wave1D, Wave1DState};
use crate::quadrature::QuadratureRule;
use crate::space::{make_space, Family, FeFunction, FunctionSpace};
use crate::sparse::SparseMatrix;

/// One row of a run's diagnostics CSV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticRecord {
    pub step: usize,
    pub time: f64,
    pub mass: f64,
    pub energy: f64,
    pub total_vorticity: f64,
    pub enstrophy: f64,
    pub balance_residual: f64,
}

impl DiagnosticRecord {
    pub const COLUMNS: [&'static str; 7] = [
        "step",
        "time",
        "mass",
        "energy",
        "total_vorticity",
        "enstrophy",
        "balance_residual",
    ];

    pub fn is_finite(&self) -> bool {
        [
            self.time,
            self.mass,
            self.energy,
            self.total_vorticity,
            self.enstrophy,
            self.balance_residual,
        ]
        .iter()
        .all(|v| v.is_finite())
    }
}

/// `∫h`, `∫ h/2 (|u|² + g h)`, `∫ q h` and `∫ q² h` for a full-depth state.
///
/// `step` and `balance_residual` are left at zero.
pub fn conserved_quantities(state: &SweState, q: &FeFunction, params: &SweParams) -> Result<DiagnosticRecord> {
    let cells: Vec<usize> = (0..state.h.space().mesh().n_cells()).collect();
    conserved_quantities_over(state, q, params, &cells, 0)
}

/// As [`conserved_quantities`], restricted to a subset of cells and using
/// `extra` additional quadrature points per direction.
pub fn conserved_quantities_over(
    state: &SweState,
    q: &FeFunction,
    params: &SweParams,
    cells: &[usize],
    extra: usize,
) -> Result<DiagnosticRecord> {
    let (u, h) = (&state.u, &state.h);
    u.space().ensure_same_mesh(h.space())?;
    q.space().ensure_same_mesh(h.space())?;
    if !u.space().is_vector() || h.space().is_vector() || q.space().is_vector() {
        return Err(Error::invalid("expected vector u, scalar h and scalar q"));
    }
    let rule = rule_for(&[q.space(), u.space(), h.space()], extra);
    let nq = rule.len();
    let uq = values_at_quadrature(u, &rule);
    let hq = values_at_quadrature(h, &rule);
    let qq = values_at_quadrature(q, &rule);
    let (_, wq) = quadrature_points(h.space(), &rule);
    let mut rec = DiagnosticRecord {
        step: 0,
        time: state.t,
        mass: 0.0,
        energy: 0.0,
        total_vorticity: 0.0,
        enstrophy: 0.0,
        balance_residual: 0.0,
    };
    for &cell in cells {
        for k in cell * nq..(cell + 1) * nq {
            let (w, h, q) = (wq[k], hq[k][0], qq[k][0]);
            let u2 = uq[k][0] * uq[k][0] + uq[k][1] * uq[k][1];
            rec.mass += w * h;
            rec.energy += w * 0.5 * h * (u2 + params.g * h);
            rec.total_vorticity += w * q * h;
            rec.enstrophy += w * q * q * h;
        }
    }
    Ok(rec)
}

/// Diagnostics of a nonlinear run at one step.
pub fn nonlinear_record(model: &SweModel, state: &SweState, step: usize) -> Result<DiagnosticRecord> {
    let q = model.diagnose_q(&state.u, &state.h)?;
    let mut rec = conserved_quantities(state, &q, model.params())?;
    rec.step = step;
    Ok(rec)
}

/// Diagnostics of a linear run: mass `∫h`, energy `½∫(H|u|² + g h²)`, and PV
/// integrals evaluated with the total depth `H + h`.
pub fn linear_record(model: &SweModel, state: &SweState, step: usize) -> Result<DiagnosticRecord> {
    let params = model.params();
    let mut depth = FeFunction::constant(state.h.space(), params.mean_depth)?;
    depth
        .coeffs_mut()
        .iter_mut()
        .zip(state.h.coeffs())
        .for_each(|(d, h)| *d += h);
    let total = SweState {
        u: state.u.clone(),
        h: depth,
        t: state.t,
    };
    let q = model.diagnose_q(&total.u, &total.h)?;
    let full = conserved_quantities(&total, &q, params)?;
    Ok(DiagnosticRecord {
        step,
        time: state.t,
        mass: model.mass2().mul_vec(state.h.coeffs()).iter().sum(),
        energy: model.linear_energy(state),
        total_vorticity: full.total_vorticity,
        enstrophy: full.enstrophy,
        balance_residual: model.balance_residual(state)?,
    })
}

/// Diagnostics of the 1D wave system: mass `∫h`, quadratic energy, and
/// zeros for the quantities that have no 1D analogue.
pub fn wave1d_record(model: &Wave1D, state: &Wave1DState, step: usize) -> DiagnosticRecord {
    DiagnosticRecord {
        step,
        time: state.t,
        mass: model.mass(state),
        energy: model.energy(state),
        total_vorticity: 0.0,
        enstrophy: 0.0,
        balance_residual: 0.0,
    }
}

pub fn balance_residual(model: &SweModel, state: &SweState) -> Result<f64> {
    model.balance_residual(state)
}

/// Space pairs for which inf-sup constants and dispersion spectra are defined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SpacePair {
    /// 1D `(CG1, DG0)`
    Cg1Dg0,
    /// 1D `(CG2, DG1)`
    Cg2Dg1,
    /// 1D `(CG1, CG1)` with the colocated derivative `∫ N_i N_j'`
    ColocatedCg1,
    /// 2D `(RT0, DG0)`
    Rt0Dg0,
    /// 2D `(RT1, DG1)`
    Rt1Dg1,
}

impl SpacePair {
    pub const ALL: [SpacePair; 5] = [
        SpacePair::Cg1Dg0,
        SpacePair::Cg2Dg1,
        SpacePair::ColocatedCg1,
        SpacePair::Rt0Dg0,
        SpacePair::Rt1Dg1,
    ];

    pub fn label(self) -> &'static str {
        match self {
            SpacePair::Cg1Dg0 => "cg1-dg0",
            SpacePair::Cg2Dg1 => "cg2-dg1",
            SpacePair::ColocatedCg1 => "colocated-cg1",
            SpacePair::Rt0Dg0 => "rt0-dg0",
            SpacePair::Rt1Dg1 => "rt1-dg1",
        }
    }

    pub fn dim(self) -> usize {
        match self {
            SpacePair::Rt0Dg0 | SpacePair::Rt1Dg1 => 2,
            _ => 1,
        }
    }
}

impl fmt::Display for SpacePair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for SpacePair {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SpacePair::ALL
            .into_iter()
            .find(|p| p.label() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| {
                Error::invalid(format!(
                    "unknown space pair `{s}` (expected one of cg1-dg0, cg2-dg1, colocated-cg1, rt0-dg0, rt1-dg1)"
                ))
            })
    }
}

/// Matrices defining the inf-sup quotient `hᵀ P w / (|w|_K ||h||_M)`.
struct InfSupForms {
    /// Pairing, rows indexed by `h`, columns by `w`.
    pairing: DMatrix<f64>,
    /// Gram matrix of the derivative or divergence seminorm on `w`.
    seminorm: DMatrix<f64>,
    /// Mass matrix on `h`.
    mass: DMatrix<f64>,
    /// Coefficients of the constant function in the `h` space.
    h_constant: Vec<f64>,
}

fn infsup_forms(pair: SpacePair, n: usize) -> Result<InfSupForms> {
    let asm = Assembler::default();
    let dense = |m: SparseMatrix| m.to_dense();
    let mesh: Arc<Mesh> = match pair.dim() {
        1 => Arc::new(Mesh1D::uniform(1.0, n)?.into()),
        _ => Arc::new(Mesh2D::periodic(1.0, 1.0, n, n)?.into()),
    };
    let (w_space, h_space, pairing) = match pair {
        SpacePair::Cg1Dg0 | SpacePair::Cg2Dg1 => {
            let p = if pair == SpacePair::Cg1Dg0 { 1 } else { 2 };
            let v0 = make_space(&mesh, Family::Cg, p)?;
            let v1 = make_space(&mesh, Family::Dg, p - 1)?;
            let d = asm.grad_1d(&v0, &v1)?;
            (v0, v1, dense(d.transpose()))
        }
        SpacePair::ColocatedCg1 => {
            let v0 = make_space(&mesh, Family::Cg, 1)?;
            let d = asm.colocated_grad_1d(&v0)?;
            (Arc::clone(&v0), v0, dense(d))
        }
        SpacePair::Rt0Dg0 | SpacePair::Rt1Dg1 => {
            let k = if pair == SpacePair::Rt0Dg0 { 0 } else { 1 };
            let v1 = make_space(&mesh, Family::Rt, k)?;
            let v2 = make_space(&mesh, Family::Dg, k)?;
            let b = asm.div(&v1, &v2)?;
            (v1, v2, dense(b))
        }
    };
    let size = w_space.dim().max(h_space.dim());
    if size > DENSE_CAP {
        return Err(Error::TooLarge { size, cap: DENSE_CAP });
    }
    Ok(InfSupForms {
        pairing,
        seminorm: dense(asm.stiffness(&w_space)?),
        mass: dense(asm.mass(&h_space, None)?),
        h_constant: FeFunction::constant(&h_space, 1.0)?.into_coeffs(),
    })
}

/// `(R, L_K)` with the columns of `R` spanning the range of `K` and
/// `Rᵀ K R = L_K L_Kᵀ`.
fn seminorm_range(k: &DMatrix<f64>, dim: usize) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    if dim == 1 {
        // the only kernel of the periodic derivative Gram matrix is the constant
        let r = orthogonal_complement(&vec![1.0; k.nrows()]);
        let kr = symmetrize(&(r.transpose() * k * &r));
        let l = nalgebra::Cholesky::new(kr)
            .ok_or_else(|| Error::InvalidMatrix("seminorm Gram matrix is singular off the constants".into()))?
            .l();
        return Ok((r, l));
    }
    let eig = SymmetricEigen::new(symmetrize(k));
    let max = eig.eigenvalues.amax();
    let keep: Vec<usize> = (0..eig.eigenvalues.len())
        .filter(|&i| eig.eigenvalues[i] > 1e-10 * max)
        .collect();
    let mut r = DMatrix::zeros(k.nrows(), keep.len());
    let mut l = DMatrix::zeros(keep.len(), keep.len());
    for (c, &i) in keep.iter().enumerate() {
        r.set_column(c, &eig.eigenvectors.column(i));
        l[(c, c)] = eig.eigenvalues[i].sqrt();
    }
    Ok((r, l))
}

/// Orthonormal-in-`M` coordinates for mean-zero `h`: `(Q, L_M)` with
/// `(M·1)ᵀ Q = 0` and `Qᵀ M Q = L_M L_Mᵀ`.
fn mean_zero_coordinates(mass: &DMatrix<f64>, constant: &[f64]) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let m1 = mass * nalgebra::DVector::from_column_slice(constant);
    let q = orthogonal_complement(m1.as_slice());
    let mq = symmetrize(&(q.transpose() * mass * &q));
    let l = nalgebra::Cholesky::new(mq)
        .ok_or_else(|| Error::InvalidMatrix("mass matrix is not positive definite".into()))?
        .l();
    Ok((q, l))
}

/// Discrete inf-sup constant of a space pair on a uniform periodic mesh with
/// `n` cells per direction:
///
/// `min_{h ⟂ 1} max_w hᵀ P w / (|w|_K ||h||_M)`,
///
/// computed as the smallest singular value of `L_M⁻¹ Qᵀ P R L_K⁻ᵀ`.
pub fn infsup_constant(pair: SpacePair, n: usize) -> Result<f64> {
    let forms = infsup_forms(pair, n)?;
    let (q, lm) = mean_zero_coordinates(&forms.mass, &forms.h_constant)?;
    let (r, lk) = seminorm_range(&forms.seminorm, pair.dim())?;
    if q.ncols() > r.ncols() {
        // more constraints than test directions: some h pairs to nothing
        return Ok(0.0);
    }
    let pr = q.transpose() * &forms.pairing * r;
    let left = lm
        .solve_lower_triangular(&pr)
        .ok_or_else(|| Error::InvalidMatrix("singular mass factor".into()))?;
    let a = lk
        .solve_lower_triangular(&left.transpose())
        .ok_or_else(|| Error::InvalidMatrix("singular seminorm factor".into()))?;
    let sv = a.svd(false, false).singular_values;
    Ok(sv.iter().copied().fold(f64::INFINITY, f64::min))
}

/// Inf-sup constant from the Schur pencil `(P K⁺ Pᵀ) h = λ M h` with the
/// constant deflated: `sqrt(λ_min)`.
///
/// Loses about half the digits of [`infsup_constant`] near zero.
pub fn infsup_constant_schur(pair: SpacePair, n: usize) -> Result<f64> {
    let forms = infsup_forms(pair, n)?;
    let (r, lk) = seminorm_range(&forms.seminorm, pair.dim())?;
    // K⁺ restricted to range(R): R (L_K L_Kᵀ)⁻¹ Rᵀ
    let pr = &forms.pairing * r;
    let y = lk
        .solve_lower_triangular(&pr.transpose())
        .ok_or_else(|| Error::InvalidMatrix("singular seminorm factor".into()))?;
    let schur = y.transpose() * y;
    let eig = generalized_eigen(&symmetrize(&schur), &forms.mass, Some(&forms.h_constant), DENSE_CAP)?;
    Ok(eig.values[0].max(0.0).sqrt())
}

pub fn infsup_constants(pair: SpacePair, ns: &[usize]) -> Result<Vec<f64>> {
    ns.iter().map(|&n| infsup_constant(pair, n)).collect()
}

/// Frequencies of the periodic 1D wave system with unit wave speed.
#[derive(Debug, Clone, PartialEq)]
pub struct DispersionResult {
    pub label: String,
    /// `|ω|` per mode, ascending.
    pub frequencies: Vec<f64>,
    /// Modes with `|ω| <= 1e-8 max |ω|`.
    pub n_zero: usize,
}

impl DispersionResult {
    /// Smallest frequency above the zero threshold.
    pub fn lowest_nonzero(&self) -> Option<f64> {
        self.frequencies.get(self.n_zero).copied()
    }
}

pub const ZERO_FREQUENCY_THRESHOLD: f64 = 1e-8;

/// Matrices `(A, M_u, M_h)` such that `ω²` are the eigenvalues of
/// `(A M_h⁻¹ Aᵀ, M_u)`.
fn dispersion_forms(pair: SpacePair, ne: usize, length: f64) -> Result<(DMatrix<f64>, DMatrix<f64>, DMatrix<f64>)> {
    if pair.dim() != 1 {
        return Err(Error::UnsupportedSpace(format!(
            "dispersion spectra are 1D only, got {pair}"
        )));
    }
    let mesh: Arc<Mesh> = Arc::new(Mesh1D::uniform(length, ne)?.into());
    let asm = Assembler::default();
    match pair {
        SpacePair::ColocatedCg1 => {
            let v = make_space(&mesh, Family::Cg, 1)?;
            check_cap(v.dim())?;
            let m = asm.mass(&v, None)?.to_dense();
            let d = asm.colocated_grad_1d(&v)?.to_dense();
            Ok((d, m.clone(), m))
        }
        _ => {
            let p = if pair == SpacePair::Cg1Dg0 { 1 } else { 2 };
            let v0 = make_space(&mesh, Family::Cg, p)?;
            let v1 = make_space(&mesh, Family::Dg, p - 1)?;
            check_cap(v0.dim().max(v1.dim()))?;
            Ok((
                asm.grad_1d(&v0, &v1)?.to_dense(),
                asm.mass(&v0, None)?.to_dense(),
                asm.mass(&v1, None)?.to_dense(),
            ))
        }
    }
}

fn check_cap(n: usize) -> Result<()> {
    if n > DENSE_CAP {
        Err(Error::TooLarge {
            size: n,
            cap: DENSE_CAP,
        })
    } else {
        Ok(())
    }
}

fn classify(label: &str, mut frequencies: Vec<f64>, threshold: f64) -> DispersionResult {
    frequencies.sort_by(f64::total_cmp);
    let max = frequencies.last().copied().unwrap_or(0.0);
    let n_zero = frequencies.iter().filter(|&&w| w <= threshold * max).count();
    DispersionResult {
        label: label.to_string(),
        frequencies,
        n_zero,
    }
}

/// Frequencies `|ω|` of `M_u u' = A h`, `M_h h' = -Aᵀ u` on a periodic
/// interval of the given length, as singular values of `L_h⁻¹ Aᵀ L_u⁻ᵀ`.
pub fn dispersion_spectrum_1d(pair: SpacePair, ne: usize, length: f64) -> Result<DispersionResult> {
    let (a, mu, mh) = dispersion_forms(pair, ne, length)?;
    let chol = |m: DMatrix<f64>| {
        nalgebra::Cholesky::new(m)
            .map(|c| c.l())
            .ok_or_else(|| Error::InvalidMatrix("mass matrix is not positive definite".into()))
    };
    let lu = chol(mu)?;
    let lh = chol(mh)?;
    let x = lh
        .solve_lower_triangular(&a.transpose())
        .ok_or_else(|| Error::InvalidMatrix("singular mass factor".into()))?;
    let y = lu
        .solve_lower_triangular(&x.transpose())
        .ok_or_else(|| Error::InvalidMatrix("singular mass factor".into()))?;
    let sv = y.svd(false, false).singular_values;
    Ok(classify(
        pair.label(),
        sv.iter().copied().collect(),
        ZERO_FREQUENCY_THRESHOLD,
    ))
}

/// Working with `ω²` resolves zero frequencies only to about `sqrt(ε)`.
const PENCIL_ZERO_THRESHOLD: f64 = 1e-6;

/// Same spectrum from the generalised eigenproblem
/// `(A M_h⁻¹ Aᵀ) v = ω² M_u v`.
pub fn dispersion_spectrum_1d_pencil(pair: SpacePair, ne: usize, length: f64) -> Result<DispersionResult> {
    let (a, mu, mh) = dispersion_forms(pair, ne, length)?;
    let mh_inv = mh
        .try_inverse()
        .ok_or_else(|| Error::InvalidMatrix("singular mass matrix".into()))?;
    let s = symmetrize(&(&a * mh_inv * a.transpose()));
    let eig = generalized_eigen(&s, &mu, None, DENSE_CAP)?;
    let omegas = eig.values.iter().map(|l| l.max(0.0).sqrt()).collect();
    Ok(classify(pair.label(), omegas, PENCIL_ZERO_THRESHOLD))
}

/// `dim(V1) / dim(V2)` as an exact fraction.
pub fn dof_ratio_audit(v1: &FunctionSpace, v2: &FunctionSpace) -> Result<Ratio<usize>> {
    v1.ensure_same_mesh(v2)?;
    if v2.dim() == 0 {
        return Err(Error::invalid("empty space"));
    }
    Ok(Ratio::new(v1.dim(), v2.dim()))
}

pub fn format_ratio(r: &Ratio<usize>) -> String {
    format!("ratio = {}/{}", r.numer(), r.denom())
}

/// `||u_h - u||_{L²}` using `extra` quadrature points beyond the default rule.
pub fn l2_error(field: &FeFunction, exact: impl Fn([f64; 2]) -> [f64; 2], extra: usize) -> f64 {
    let rule = rule_for(&[field.space()], extra);
    l2_error_with_rule(field, exact, &rule)
}

fn l2_error_with_rule(field: &FeFunction, exact: impl Fn([f64; 2]) -> [f64; 2], rule: &QuadratureRule) -> f64 {
    let vals = values_at_quadrature(field, rule);
    let (xs, ws) = quadrature_points(field.space(), rule);
    let scalar = !field.space().is_vector();
    vals.iter()
        .zip(&xs)
        .zip(&ws)
        .map(|((v, &x), w)| {
            let e = exact(x);
            let d0 = v[0] - e[0];
            let d1 = if scalar { 0.0 } else { v[1] - e[1] };
            w * (d0 * d0 + d1 * d1)
        })
        .sum::<f64>()
        .sqrt()
}
