//! Element-loop assembly of the bilinear forms used by the discretisations.
//!
//! Local blocks are accumulated cell by cell in ascending cell order and
//! scattered through the signed DoF maps, so the CSR output is reproducible
//! bit for bit.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::quadrature::QuadratureRule;
use crate::space::{ElementBasis, Family, FeFunction, FunctionSpace};
use crate::sparse::{SparseMatrix, TripletBuilder};

/// Scalar coefficient multiplying an integrand.
#[derive(Clone, Copy)]
pub enum Weight<'a> {
    Constant(f64),
    Field(&'a FeFunction),
    /// Values at the points of `rule`, indexed `cell * rule.len() + q`.
    Quadrature {
        rule: &'a QuadratureRule,
        values: &'a [f64],
    },
}

impl Weight<'_> {
    fn degree(&self) -> usize {
        match self {
            Weight::Field(f) => f.space().max_basis_degree(),
            _ => 0,
        }
    }

    fn check(&self, space: &FunctionSpace) -> Result<()> {
        match self {
            Weight::Field(f) => {
                if f.space().is_vector() {
                    return Err(Error::invalid("weight must be a scalar field"));
                }
                f.space().ensure_same_mesh(space)
            }
            Weight::Quadrature { rule, values } => {
                if values.len() != rule.len() * space.mesh().n_cells() {
                    return Err(Error::invalid(format!(
                        "quadrature weight has {} values, expected {}",
                        values.len(),
                        rule.len() * space.mesh().n_cells()
                    )));
                }
                Ok(())
            }
            Weight::Constant(_) => Ok(()),
        }
    }
}

/// Gauss rule that integrates products of the given spaces exactly, with
/// `extra` additional points per direction.
pub fn rule_for(spaces: &[&FunctionSpace], extra: usize) -> QuadratureRule {
    let dim = spaces[0].mesh().dim();
    let deg = spaces.iter().map(|s| s.max_basis_degree()).max().unwrap_or(0);
    QuadratureRule::for_degree(dim, deg, extra)
}

/// Assembly settings; `extra_points` adds Gauss points per direction.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Assembler {
    pub extra_points: usize,
}

impl Assembler {
    pub fn new(extra_points: usize) -> Self {
        Self { extra_points }
    }

    fn rule(&self, spaces: &[&FunctionSpace], weight: Option<&Weight<'_>>) -> QuadratureRule {
        if let Some(Weight::Quadrature { rule, .. }) = weight {
            return (*rule).clone();
        }
        let base = rule_for(spaces, self.extra_points);
        let wdeg = weight.map_or(0, Weight::degree);
        let deg = spaces.iter().map(|s| s.max_basis_degree()).max().unwrap_or(0);
        if wdeg > deg {
            QuadratureRule::for_degree(base.dim(), wdeg, self.extra_points)
        } else {
            base
        }
    }

    /// `A_ij = sum_cells sum_q w_q |J| c(x_q) k(test, trial, q, i, j)`.
    fn bilinear(
        &self,
        test: &Arc<FunctionSpace>,
        trial: &Arc<FunctionSpace>,
        weight: Option<&Weight<'_>>,
        kernel: impl Fn(&ElementBasis, &ElementBasis, usize, usize, usize) -> f64,
    ) -> Result<SparseMatrix> {
        test.ensure_same_mesh(trial)?;
        if let Some(w) = weight {
            w.check(test)?;
        }
        let rule = self.rule(&[test, trial], weight);
        let mut eb_test = ElementBasis::for_rule(test, &rule);
        let mut eb_trial = ElementBasis::for_rule(trial, &rule);
        let mut wfield = weight.and_then(|w| match w {
            Weight::Field(f) => Some((ElementBasis::for_rule(f.space(), &rule), f.coeffs())),
            _ => None,
        });
        let nq = rule.len();
        let (ni, nj) = (test.n_local(), trial.n_local());
        let mut local = vec![0.0; ni * nj];
        let mut cq = vec![1.0; nq];
        let mut buf = Vec::new();
        let mut b = TripletBuilder::new(test.dim(), trial.dim());
        for cell in 0..test.mesh().n_cells() {
            eb_test.reinit(cell);
            eb_trial.reinit(cell);
            match weight {
                None => {}
                Some(Weight::Constant(c)) => cq.iter_mut().for_each(|v| *v = *c),
                Some(Weight::Field(_)) => {
                    let (eb, coeffs) = wfield.as_mut().expect("field weight basis");
                    eb.reinit(cell);
                    eb.field_values(coeffs, &mut buf);
                    cq.iter_mut().zip(&buf).for_each(|(c, v)| *c = v[0]);
                }
                Some(Weight::Quadrature { values, .. }) => cq.copy_from_slice(&values[cell * nq..(cell + 1) * nq]),
            }
            let det = eb_test.geometry().det();
            local.iter_mut().for_each(|v| *v = 0.0);
            for q in 0..nq {
                let wq = rule.weights()[q] * det * cq[q];
                if wq == 0.0 {
                    continue;
                }
                for i in 0..ni {
                    for j in 0..nj {
                        local[i * nj + j] += wq * kernel(&eb_test, &eb_trial, q, i, j);
                    }
                }
            }
            let (rows, _) = test.cell_dofs(cell);
            let (cols, _) = trial.cell_dofs(cell);
            for (i, &r) in rows.iter().enumerate() {
                for (j, &c) in cols.iter().enumerate() {
                    b.add(r, c, local[i * nj + j]);
                }
            }
        }
        Ok(b.build())
    }

    /// `M_ij = ∫ c N_i·N_j`; vector spaces use the dot product.
    pub fn mass(&self, space: &Arc<FunctionSpace>, weight: Option<Weight<'_>>) -> Result<SparseMatrix> {
        self.bilinear(space, space, weight.as_ref(), |a, b, q, i, j| {
            dot(a.value(q, i), b.value(q, j))
        })
    }

    /// `D̃_ij = ∫ N_i' Ñ_j` with `N_i` in a 1D CG space and `Ñ_j` in a 1D DG space.
    pub fn grad_1d(&self, v0: &Arc<FunctionSpace>, v1: &Arc<FunctionSpace>) -> Result<SparseMatrix> {
        if v0.mesh().dim() != 1 || v0.family() != Family::Cg || v1.family() != Family::Dg {
            return Err(Error::UnsupportedSpace(format!(
                "1D gradient pairing needs (CG, DG) on an interval, got ({}, {})",
                v0.label(),
                v1.label()
            )));
        }
        self.bilinear(v0, v1, None, |a, b, q, i, j| a.grad(q, i)[0] * b.value(q, j)[0])
    }

    /// Colocated `D_ij = ∫ N_i N_j'` on a 1D CG space.
    pub fn colocated_grad_1d(&self, v0: &Arc<FunctionSpace>) -> Result<SparseMatrix> {
        if v0.mesh().dim() != 1 || v0.family() != Family::Cg {
            return Err(Error::UnsupportedSpace(format!(
                "colocated derivative needs CG on an interval, got {}",
                v0.label()
            )));
        }
        self.bilinear(v0, v0, None, |a, b, q, i, j| a.value(q, i)[0] * b.grad(q, j)[0])
    }

    /// `B_ij = ∫ φ_i ∇·w_j`, rows in DG, columns in RT.
    pub fn div(&self, v1: &Arc<FunctionSpace>, v2: &Arc<FunctionSpace>) -> Result<SparseMatrix> {
        if v1.family() != Family::Rt || v2.family() != Family::Dg || v1.degree() != v2.degree() {
            return Err(Error::UnsupportedSpace(format!(
                "divergence pairing needs (RT(k), DG(k)), got ({}, {})",
                v1.label(),
                v2.label()
            )));
        }
        self.bilinear(v2, v1, None, |a, b, q, i, j| a.value(q, i)[0] * b.div(q, j))
    }

    /// `C(c)_ij = ∫ c w_i·w_j⊥` with `u⊥ = (-u_2, u_1)`.
    pub fn perp_mass(&self, v1: &Arc<FunctionSpace>, weight: Weight<'_>) -> Result<SparseMatrix> {
        if !v1.is_vector() {
            return Err(Error::UnsupportedSpace(format!(
                "perp mass needs RT, got {}",
                v1.label()
            )));
        }
        self.bilinear(v1, v1, Some(&weight), |a, b, q, i, j| {
            let wi = a.value(q, i);
            let wj = b.value(q, j);
            wi[1] * wj[0] - wi[0] * wj[1]
        })
    }

    /// `W_ij = ∫ ∇⊥γ_i · w_j`, rows in CG, columns in RT.
    pub fn vort_rhs(&self, v0: &Arc<FunctionSpace>, v1: &Arc<FunctionSpace>) -> Result<SparseMatrix> {
        check_compatible(v0, v1)?;
        self.bilinear(v0, v1, None, |a, b, q, i, j| dot(a.perp_grad(q, i), b.value(q, j)))
    }

    /// `∫ ∇N_i·∇N_j` for scalar spaces, `∫ (∇·w_i)(∇·w_j)` for RT.
    pub fn stiffness(&self, space: &Arc<FunctionSpace>) -> Result<SparseMatrix> {
        if space.is_vector() {
            self.bilinear(space, space, None, |a, b, q, i, j| a.div(q, i) * b.div(q, j))
        } else {
            if space.family() == Family::Dg && space.degree() == 0 {
                return Err(Error::UnsupportedSpace("stiffness of DG0 vanishes identically".into()));
            }
            self.bilinear(space, space, None, |a, b, q, i, j| dot(a.grad(q, i), b.grad(q, j)))
        }
    }

    /// `b_i = ∫ N_i·f` for an analytic integrand (scalar spaces use component 0).
    pub fn load(&self, space: &Arc<FunctionSpace>, f: impl Fn([f64; 2]) -> [f64; 2]) -> Vec<f64> {
        let rule = self.rule(&[space], None);
        load_at_quadrature(space, &rule, |_, _, x| f(x))
    }
}

fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn check_compatible(v0: &FunctionSpace, v1: &FunctionSpace) -> Result<()> {
    let ok = v0.mesh().dim() == 2
        && v0.family() == Family::Cg
        && v1.family() == Family::Rt
        && v0.degree() == v1.degree() + 1;
    if ok {
        v0.ensure_same_mesh(v1)
    } else {
        Err(Error::UnsupportedSpace(format!(
            "({}, {}) is not a compatible (CG(p), RT(p-1)) pair",
            v0.label(),
            v1.label()
        )))
    }
}

/// `b_i = sum_cells sum_q w_q |J| N_i(x_q)·f(cell, q, x_q)`.
///
/// Scalar spaces pair with component 0 of `f`.
pub fn load_at_quadrature(
    space: &Arc<FunctionSpace>,
    rule: &QuadratureRule,
    mut f: impl FnMut(usize, usize, [f64; 2]) -> [f64; 2],
) -> Vec<f64> {
    let mut eb = ElementBasis::for_rule(space, rule);
    let mut out = vec![0.0; space.dim()];
    let mut local = vec![0.0; space.n_local()];
    for cell in 0..space.mesh().n_cells() {
        eb.reinit(cell);
        let geom = *eb.geometry();
        let det = geom.det();
        local.iter_mut().for_each(|v| *v = 0.0);
        for (q, (&xi, &w)) in rule.points().iter().zip(rule.weights()).enumerate() {
            let fx = f(cell, q, geom.to_physical(xi));
            for (i, l) in local.iter_mut().enumerate() {
                *l += w * det * dot(eb.value(q, i), fx);
            }
        }
        let (dofs, _) = space.cell_dofs(cell);
        for (&g, l) in dofs.iter().zip(&local) {
            out[g] += l;
        }
    }
    out
}

/// Values of a field at every quadrature point, indexed `cell * rule.len() + q`.
pub fn values_at_quadrature(field: &FeFunction, rule: &QuadratureRule) -> Vec<[f64; 2]> {
    sample(field, rule, |eb, c, out| eb.field_values(c, out))
}

/// Physical gradients of a scalar field at every quadrature point.
pub fn gradients_at_quadrature(field: &FeFunction, rule: &QuadratureRule) -> Vec<[f64; 2]> {
    sample(field, rule, |eb, c, out| eb.field_gradients(c, out))
}

/// Physical quadrature points and `w_q |J|` weights, indexed like
/// [`values_at_quadrature`].
pub fn quadrature_points(space: &FunctionSpace, rule: &QuadratureRule) -> (Vec<[f64; 2]>, Vec<f64>) {
    let mesh = space.mesh();
    let mut xs = Vec::with_capacity(mesh.n_cells() * rule.len());
    let mut ws = Vec::with_capacity(mesh.n_cells() * rule.len());
    for cell in 0..mesh.n_cells() {
        let g = mesh.cell_geometry(cell);
        for (&xi, &w) in rule.points().iter().zip(rule.weights()) {
            xs.push(g.to_physical(xi));
            ws.push(w * g.det());
        }
    }
    (xs, ws)
}

fn sample(
    field: &FeFunction,
    rule: &QuadratureRule,
    eval: impl Fn(&ElementBasis, &[f64], &mut Vec<[f64; 2]>),
) -> Vec<[f64; 2]> {
    let space = field.space();
    let mut eb = ElementBasis::for_rule(space, rule);
    let mut out = Vec::with_capacity(space.mesh().n_cells() * rule.len());
    let mut buf = Vec::new();
    for cell in 0..space.mesh().n_cells() {
        eb.reinit(cell);
        eval(&eb, field.coeffs(), &mut buf);
        out.extend_from_slice(&buf);
    }
    out
}

/// Exact `∇⊥` embedding `G: CG(p) -> RT(p-1)`: `G ψ` holds the RT
/// coefficients of `∇⊥ψ`.
///
/// On the reference cell the pulled-back field is `(-ψ̂_ŷ, ψ̂_x̂)`
/// independently of the cell size, so one local block serves every cell.
pub fn assemble_perpgrad(v0: &Arc<FunctionSpace>, v1: &Arc<FunctionSpace>) -> Result<SparseMatrix> {
    check_compatible(v0, v1)?;
    let n0 = v0.n_local();
    let per_basis: Vec<Vec<f64>> = (0..n0)
        .map(|j| {
            v1.apply_functionals(&|xi| {
                let g = v0.reference_gradients(xi)[j];
                [-g[1], g[0]]
            })
        })
        .collect();
    let mut visits = vec![0usize; v1.dim()];
    for cell in 0..v1.mesh().n_cells() {
        for &g in v1.cell_dofs(cell).0 {
            visits[g] += 1;
        }
    }
    let mut b = TripletBuilder::new(v1.dim(), v0.dim());
    for cell in 0..v1.mesh().n_cells() {
        let (rows, signs) = v1.cell_dofs(cell);
        let (cols, _) = v0.cell_dofs(cell);
        for (a, (&r, &s)) in rows.iter().zip(signs).enumerate() {
            let scale = s / visits[r] as f64;
            for (j, &c) in cols.iter().enumerate() {
                let v = per_basis[j][a];
                if v != 0.0 {
                    b.add(r, c, scale * v);
                }
            }
        }
    }
    Ok(b.build())
}

pub fn assemble_mass(space: &Arc<FunctionSpace>, weight: Option<&FeFunction>) -> Result<SparseMatrix> {
    Assembler::default().mass(space, weight.map(Weight::Field))
}

pub fn assemble_grad_1d(v0: &Arc<FunctionSpace>, v1: &Arc<FunctionSpace>) -> Result<SparseMatrix> {
    Assembler::default().grad_1d(v0, v1)
}

pub fn assemble_colocated_grad_1d(v0: &Arc<FunctionSpace>) -> Result<SparseMatrix> {
    Assembler::default().colocated_grad_1d(v0)
}

pub fn assemble_div(v1: &Arc<FunctionSpace>, v2: &Arc<FunctionSpace>) -> Result<SparseMatrix> {
    Assembler::default().div(v1, v2)
}

pub fn assemble_perp_mass(v1: &Arc<FunctionSpace>, weight: Weight<'_>) -> Result<SparseMatrix> {
    Assembler::default().perp_mass(v1, weight)
}

pub fn assemble_vort_rhs(v0: &Arc<FunctionSpace>, v1: &Arc<FunctionSpace>) -> Result<SparseMatrix> {
    Assembler::default().vort_rhs(v0, v1)
}

pub fn assemble_stiffness(space: &Arc<FunctionSpace>) -> Result<SparseMatrix> {
    Assembler::default().stiffness(space)
}
