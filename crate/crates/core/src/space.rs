//! Finite element spaces: `CG(p)` and `DG(p)` on intervals, and the
//! compatible quadrilateral family `CG(p)`, `RT(p-1)`, `DG(p-1)` for
//! `p in {1, 2}`.
//!
//! Scalar spaces use nodal Lagrange bases (equispaced nodes including the
//! cell boundary for CG, interior nodes `(k + 1/2) / (p + 1)` for DG).
//!
//! `RT(k)` on the reference square has `x`-component in `Q(k+1, k)` and
//! `y`-component in `Q(k, k+1)`. Its degrees of freedom are edge-normal flux
//! moments against shifted Legendre polynomials of degree `<= k`, using the
//! local outward normal, plus (for `k = 1`) the interior moments of the
//! `x`-component against `{1, y}` and of the `y`-component against `{1, x}`.
//! The parameter along an edge increases with the global coordinate, so a
//! shared edge moment differs between its two cells only by the orientation
//! sign recorded in the DoF map. The contravariant Piola map on a rectangle
//! of size `dx * dy` reduces to `u = (u_hat_x / dy, u_hat_y / dx)`, which
//! preserves edge fluxes.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::mesh::{CellGeometry, Mesh, BOTTOM, LEFT, RIGHT, TOP};
use crate::poly::{lagrange_basis, shifted_legendre, Poly2};
use crate::quadrature::{gauss_legendre, QuadratureRule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    /// Continuous Lagrange.
    Cg,
    /// Discontinuous Lagrange.
    Dg,
    /// Raviart–Thomas (quadrilaterals only).
    Rt,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Cg => "CG",
            Family::Dg => "DG",
            Family::Rt => "RT",
        }
    }
}

/// Parses a space name such as `cg2`, `DG0` or `rt1` into family and degree.
pub fn parse_space_name(s: &str) -> Result<(Family, usize)> {
    let s = s.trim().to_ascii_lowercase();
    let (family, degree) = s.split_at(s.find(|c: char| c.is_ascii_digit()).unwrap_or(s.len()));
    let family = match family {
        "cg" => Family::Cg,
        "dg" => Family::Dg,
        "rt" => Family::Rt,
        _ => {
            return Err(Error::InvalidArgument(format!(
                "unknown space `{s}` (expected e.g. cg1, dg0, rt0)"
            )))
        }
    };
    let degree = degree
        .parse()
        .map_err(|_| Error::InvalidArgument(format!("space `{s}` lacks a degree")))?;
    Ok((family, degree))
}

/// Geometric entity a global DoF is attached to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DofEntity {
    Vertex,
    Edge,
    Cell,
}

impl DofEntity {
    pub fn name(self) -> &'static str {
        match self {
            DofEntity::Vertex => "vertex",
            DofEntity::Edge => "edge",
            DofEntity::Cell => "cell",
        }
    }
}

#[derive(Debug, Clone)]
enum ReferenceBasis {
    Scalar(Vec<Poly2>),
    Vector(Vec<[Poly2; 2]>),
}

#[derive(Debug, Clone, Copy)]
enum Functional {
    Node([f64; 2]),
    EdgeMoment { side: usize, legendre: usize },
    InteriorMoment { component: usize, weight: [usize; 2] },
}

/// Points per direction used to evaluate RT functionals; exact for
/// polynomial integrands of degree <= 11 per direction.
const FUNCTIONAL_POINTS: usize = 6;

#[derive(Debug, Clone)]
pub struct FunctionSpace {
    mesh: Arc<Mesh>,
    family: Family,
    degree: usize,
    dim: usize,
    basis: ReferenceBasis,
    functionals: Vec<Functional>,
    n_local: usize,
    cell_dofs: Vec<usize>,
    cell_signs: Vec<f64>,
}

impl FunctionSpace {
    pub fn new(mesh: Arc<Mesh>, family: Family, degree: usize) -> Result<Self> {
        let supported = match (mesh.dim(), family) {
            (1, Family::Dg) => degree <= 3,
            (1, Family::Cg) => (1..=3).contains(&degree),
            (2, Family::Cg) => (1..=2).contains(&degree),
            (2, Family::Dg) | (2, Family::Rt) => degree <= 1,
            _ => false,
        };
        if !supported {
            return Err(Error::UnsupportedSpace(format!(
                "{}{} on a {}D mesh",
                family.name(),
                degree,
                mesh.dim()
            )));
        }
        let (basis, functionals) = match (mesh.dim(), family) {
            (1, _) => scalar_reference_1d(family, degree),
            (2, Family::Rt) => rt_reference(degree),
            (2, _) => scalar_reference_2d(family, degree),
            _ => unreachable!(),
        };
        let n_local = functionals.len();
        let (dim, cell_dofs, cell_signs) = build_dof_map(&mesh, family, degree, n_local);
        Ok(Self {
            mesh,
            family,
            degree,
            dim,
            basis,
            functionals,
            n_local,
            cell_dofs,
            cell_signs,
        })
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// 1 for scalar spaces, 2 for RT.
    pub fn value_rank(&self) -> usize {
        match self.family {
            Family::Rt => 2,
            _ => 1,
        }
    }

    pub fn is_vector(&self) -> bool {
        self.family == Family::Rt
    }

    pub fn n_local(&self) -> usize {
        self.n_local
    }

    /// Highest polynomial degree of any basis function in one direction.
    pub fn max_basis_degree(&self) -> usize {
        match self.family {
            Family::Rt => self.degree + 1,
            _ => self.degree,
        }
    }

    pub fn label(&self) -> String {
        format!("{}{}", self.family.name(), self.degree)
    }

    pub fn same_mesh(&self, other: &FunctionSpace) -> bool {
        Arc::ptr_eq(&self.mesh, &other.mesh) || *self.mesh == *other.mesh
    }

    pub(crate) fn ensure_same_mesh(&self, other: &FunctionSpace) -> Result<()> {
        if self.same_mesh(other) {
            Ok(())
        } else {
            Err(Error::invalid(format!(
                "spaces {} and {} live on different meshes",
                self.label(),
                other.label()
            )))
        }
    }

    /// Global indices and orientation signs of a cell's local DoFs.
    pub fn cell_dofs(&self, cell: usize) -> (&[usize], &[f64]) {
        let r = cell * self.n_local..(cell + 1) * self.n_local;
        (&self.cell_dofs[r.clone()], &self.cell_signs[r])
    }

    pub fn dof_map(&self, element: usize) -> Result<(Vec<usize>, Vec<f64>)> {
        if element >= self.mesh.n_cells() {
            return Err(Error::invalid(format!(
                "element {element} out of range (mesh has {})",
                self.mesh.n_cells()
            )));
        }
        let (d, s) = self.cell_dofs(element);
        Ok((d.to_vec(), s.to_vec()))
    }

    pub fn dof_entity(&self, index: usize) -> DofEntity {
        match (&*self.mesh, self.family) {
            (_, Family::Dg) => DofEntity::Cell,
            (Mesh::Interval(_), _) => {
                if index % self.degree == 0 {
                    DofEntity::Vertex
                } else {
                    DofEntity::Cell
                }
            }
            (Mesh::Quad(m), Family::Cg) => {
                let p = self.degree;
                let row = p * m.counts()[0];
                let (a, b) = (index % row, index / row);
                match (a % p == 0, b % p == 0) {
                    (true, true) => DofEntity::Vertex,
                    (false, false) => DofEntity::Cell,
                    _ => DofEntity::Edge,
                }
            }
            (Mesh::Quad(m), Family::Rt) => {
                if index < m.n_edges() * (self.degree + 1) {
                    DofEntity::Edge
                } else {
                    DofEntity::Cell
                }
            }
        }
    }

    /// Tabulate the reference basis at reference points.
    pub fn tabulate(&self, points: &[[f64; 2]]) -> Result<BasisTable> {
        let d = self.mesh.dim();
        for p in points {
            let inside = |v: f64| (0.0..=1.0).contains(&v);
            let ok = inside(p[0]) && if d == 1 { p[1] == 0.0 } else { inside(p[1]) };
            if !ok {
                return Err(Error::Domain(format!(
                    "point {p:?} outside the reference element [0,1]^{d}"
                )));
            }
        }
        Ok(self.tabulate_unchecked(points))
    }

    /// Reference gradients of the scalar basis at one point, without the
    /// domain check (used when sampling functionals on cell edges).
    pub(crate) fn reference_gradients(&self, xi: [f64; 2]) -> Vec<[f64; 2]> {
        let t = self.tabulate_unchecked(&[xi]);
        (0..t.n_basis).map(|i| t.gradient(0, i)).collect()
    }

    fn tabulate_unchecked(&self, points: &[[f64; 2]]) -> BasisTable {
        let n = self.n_local;
        let mut values = Vec::with_capacity(points.len() * n);
        let mut dx = Vec::with_capacity(points.len() * n);
        let mut dy = Vec::with_capacity(points.len() * n);
        for &[x, y] in points {
            match &self.basis {
                ReferenceBasis::Scalar(b) => {
                    for p in b {
                        values.push([p.eval(x, y), 0.0]);
                        dx.push([p.dx().eval(x, y), 0.0]);
                        dy.push([p.dy().eval(x, y), 0.0]);
                    }
                }
                ReferenceBasis::Vector(b) => {
                    for [px, py] in b {
                        values.push([px.eval(x, y), py.eval(x, y)]);
                        dx.push([px.dx().eval(x, y), py.dx().eval(x, y)]);
                        dy.push([px.dy().eval(x, y), py.dy().eval(x, y)]);
                    }
                }
            }
        }
        BasisTable {
            n_points: points.len(),
            n_basis: n,
            rank: self.value_rank(),
            values,
            dx,
            dy,
        }
    }

    /// Apply the local DoF functionals to a field given on the reference cell
    /// (already pulled back for RT).
    pub(crate) fn apply_functionals(&self, field: &dyn Fn([f64; 2]) -> [f64; 2]) -> Vec<f64> {
        let (gx, gw) = gauss_legendre(FUNCTIONAL_POINTS);
        self.functionals
            .iter()
            .map(|f| apply_functional(f, field, &gx, &gw))
            .collect()
    }
}

/// Reference-element tabulation of a space's basis.
///
/// Scalar spaces store values in component 0; derivatives are with respect
/// to the reference coordinates.
#[derive(Debug, Clone)]
pub struct BasisTable {
    n_points: usize,
    n_basis: usize,
    rank: usize,
    values: Vec<[f64; 2]>,
    dx: Vec<[f64; 2]>,
    dy: Vec<[f64; 2]>,
}

impl BasisTable {
    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn n_basis(&self) -> usize {
        self.n_basis
    }

    pub fn value_rank(&self) -> usize {
        self.rank
    }

    pub fn value(&self, point: usize, basis: usize) -> f64 {
        self.values[point * self.n_basis + basis][0]
    }

    pub fn vector_value(&self, point: usize, basis: usize) -> [f64; 2] {
        self.values[point * self.n_basis + basis]
    }

    /// `d/dx_hat` of a scalar basis function.
    pub fn derivative(&self, point: usize, basis: usize) -> f64 {
        self.dx[point * self.n_basis + basis][0]
    }

    pub fn gradient(&self, point: usize, basis: usize) -> [f64; 2] {
        let k = point * self.n_basis + basis;
        [self.dx[k][0], self.dy[k][0]]
    }

    pub fn divergence(&self, point: usize, basis: usize) -> f64 {
        let k = point * self.n_basis + basis;
        self.dx[k][0] + self.dy[k][1]
    }
}

/// Physical basis values on one cell at a fixed set of reference points,
/// with orientation signs applied.
///
/// Create once per (space, point set) and [`reinit`](ElementBasis::reinit)
/// per cell.
#[derive(Debug, Clone)]
pub struct ElementBasis {
    space: Arc<FunctionSpace>,
    table: BasisTable,
    cell: usize,
    geometry: CellGeometry,
    values: Vec<[f64; 2]>,
    grads: Vec<[f64; 2]>,
    divs: Vec<f64>,
}

impl ElementBasis {
    pub fn new(space: &Arc<FunctionSpace>, points: &[[f64; 2]]) -> Result<Self> {
        let table = space.tabulate(points)?;
        let n = table.n_points * table.n_basis;
        let mut eb = Self {
            space: Arc::clone(space),
            table,
            cell: usize::MAX,
            geometry: space.mesh.cell_geometry(0),
            values: vec![[0.0; 2]; n],
            grads: vec![[0.0; 2]; n],
            divs: vec![0.0; n],
        };
        eb.reinit(0);
        Ok(eb)
    }

    pub fn for_rule(space: &Arc<FunctionSpace>, rule: &QuadratureRule) -> Self {
        Self::new(space, rule.points()).expect("quadrature points lie in the reference cell")
    }

    pub fn space(&self) -> &Arc<FunctionSpace> {
        &self.space
    }

    pub fn n_points(&self) -> usize {
        self.table.n_points
    }

    pub fn n_basis(&self) -> usize {
        self.table.n_basis
    }

    pub fn cell(&self) -> usize {
        self.cell
    }

    pub fn geometry(&self) -> &CellGeometry {
        &self.geometry
    }

    pub fn dofs(&self) -> (&[usize], &[f64]) {
        self.space.cell_dofs(self.cell)
    }

    pub fn reinit(&mut self, cell: usize) {
        if cell == self.cell {
            return;
        }
        self.cell = cell;
        self.geometry = self.space.mesh.cell_geometry(cell);
        let [hx, hy] = self.geometry.size;
        let det = hx * hy;
        let (_, signs) = self.space.cell_dofs(cell);
        let nb = self.table.n_basis;
        let vector = self.space.is_vector();
        for k in 0..self.values.len() {
            let s = signs[k % nb];
            let v = self.table.values[k];
            let dx = self.table.dx[k];
            let dy = self.table.dy[k];
            if vector {
                self.values[k] = [s * v[0] / hy, s * v[1] / hx];
                self.divs[k] = s * (dx[0] + dy[1]) / det;
                self.grads[k] = [0.0, 0.0];
            } else {
                self.values[k] = [v[0], 0.0];
                self.grads[k] = [dx[0] / hx, dy[0] / hy];
                self.divs[k] = 0.0;
            }
        }
    }

    /// Scalar value (component 0) or vector value of basis `i` at point `q`.
    #[inline]
    pub fn value(&self, q: usize, i: usize) -> [f64; 2] {
        self.values[q * self.table.n_basis + i]
    }

    /// Physical gradient of a scalar basis function.
    #[inline]
    pub fn grad(&self, q: usize, i: usize) -> [f64; 2] {
        self.grads[q * self.table.n_basis + i]
    }

    /// `perp-grad = (-d/dy, d/dx)` of a scalar basis function.
    #[inline]
    pub fn perp_grad(&self, q: usize, i: usize) -> [f64; 2] {
        let g = self.grad(q, i);
        [-g[1], g[0]]
    }

    /// Physical divergence of an RT basis function.
    #[inline]
    pub fn div(&self, q: usize, i: usize) -> f64 {
        self.divs[q * self.table.n_basis + i]
    }

    /// Values of a field with coefficients `coeffs` at every point of the current cell.
    pub fn field_values(&self, coeffs: &[f64], out: &mut Vec<[f64; 2]>) {
        out.clear();
        let (dofs, _) = self.dofs();
        for q in 0..self.table.n_points {
            let mut acc = [0.0; 2];
            for (i, &g) in dofs.iter().enumerate() {
                let v = self.value(q, i);
                acc[0] += v[0] * coeffs[g];
                acc[1] += v[1] * coeffs[g];
            }
            out.push(acc);
        }
    }

    pub fn field_gradients(&self, coeffs: &[f64], out: &mut Vec<[f64; 2]>) {
        out.clear();
        let (dofs, _) = self.dofs();
        for q in 0..self.table.n_points {
            let mut acc = [0.0; 2];
            for (i, &g) in dofs.iter().enumerate() {
                let v = self.grad(q, i);
                acc[0] += v[0] * coeffs[g];
                acc[1] += v[1] * coeffs[g];
            }
            out.push(acc);
        }
    }

    pub fn field_divergences(&self, coeffs: &[f64], out: &mut Vec<f64>) {
        out.clear();
        let (dofs, _) = self.dofs();
        for q in 0..self.table.n_points {
            out.push(dofs.iter().enumerate().map(|(i, &g)| self.div(q, i) * coeffs[g]).sum());
        }
    }
}

/// Coefficient vector bound to a function space.
#[derive(Debug, Clone)]
pub struct FeFunction {
    space: Arc<FunctionSpace>,
    coeffs: Vec<f64>,
}

/// An analytic field to interpolate; must be vector-valued iff the target is RT.
pub enum AnalyticField<'a> {
    Scalar(&'a dyn Fn([f64; 2]) -> f64),
    Vector(&'a dyn Fn([f64; 2]) -> [f64; 2]),
}

impl FeFunction {
    pub fn zeros(space: &Arc<FunctionSpace>) -> Self {
        Self {
            space: Arc::clone(space),
            coeffs: vec![0.0; space.dim()],
        }
    }

    pub fn constant(space: &Arc<FunctionSpace>, value: f64) -> Result<Self> {
        if space.is_vector() {
            return Err(Error::invalid("constant scalar into a vector space"));
        }
        Ok(Self {
            space: Arc::clone(space),
            coeffs: vec![value; space.dim()],
        })
    }

    pub fn from_coeffs(space: &Arc<FunctionSpace>, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != space.dim() {
            return Err(Error::invalid(format!(
                "{} coefficients for a space of dimension {}",
                coeffs.len(),
                space.dim()
            )));
        }
        Ok(Self {
            space: Arc::clone(space),
            coeffs,
        })
    }

    pub fn space(&self) -> &Arc<FunctionSpace> {
        &self.space
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    /// Apply the space's DoF functionals to an analytic field.
    pub fn interpolate(space: &Arc<FunctionSpace>, field: AnalyticField<'_>) -> Result<Self> {
        let mesh = space.mesh();
        let mut coeffs = vec![0.0; space.dim()];
        match (space.is_vector(), field) {
            (false, AnalyticField::Scalar(f)) => {
                let mut set = vec![false; space.dim()];
                for cell in 0..mesh.n_cells() {
                    let geom = mesh.cell_geometry(cell);
                    let (dofs, _) = space.cell_dofs(cell);
                    for (func, &g) in space.functionals.iter().zip(dofs) {
                        if set[g] {
                            continue;
                        }
                        if let Functional::Node(xi) = func {
                            coeffs[g] = f(geom.to_physical(*xi));
                            set[g] = true;
                        }
                    }
                }
            }
            (true, AnalyticField::Vector(f)) => {
                let mut visits = vec![0usize; space.dim()];
                for cell in 0..mesh.n_cells() {
                    let geom = mesh.cell_geometry(cell);
                    let [hx, hy] = geom.size;
                    let pulled = |xi: [f64; 2]| {
                        let v = f(geom.to_physical(xi));
                        [hy * v[0], hx * v[1]]
                    };
                    let local = space.apply_functionals(&pulled);
                    let (dofs, signs) = space.cell_dofs(cell);
                    for ((&g, &s), v) in dofs.iter().zip(signs).zip(local) {
                        coeffs[g] += s * v;
                        visits[g] += 1;
                    }
                }
                for (c, n) in coeffs.iter_mut().zip(visits) {
                    *c /= n as f64;
                }
            }
            (true, AnalyticField::Scalar(_)) => {
                return Err(Error::invalid("scalar field interpolated into a vector space"))
            }
            (false, AnalyticField::Vector(_)) => {
                return Err(Error::invalid("vector field interpolated into a scalar space"))
            }
        }
        Ok(Self {
            space: Arc::clone(space),
            coeffs,
        })
    }

    pub fn interpolate_scalar(space: &Arc<FunctionSpace>, f: impl Fn([f64; 2]) -> f64) -> Result<Self> {
        Self::interpolate(space, AnalyticField::Scalar(&f))
    }

    pub fn interpolate_vector(space: &Arc<FunctionSpace>, f: impl Fn([f64; 2]) -> [f64; 2]) -> Result<Self> {
        Self::interpolate(space, AnalyticField::Vector(&f))
    }

    /// Values at reference points of one cell. Scalar fields fill component 0.
    pub fn evaluate(&self, element: usize, points: &[[f64; 2]]) -> Result<Vec<[f64; 2]>> {
        let mut eb = self.element_basis(element, points)?;
        eb.reinit(element);
        let mut out = Vec::new();
        eb.field_values(&self.coeffs, &mut out);
        Ok(out)
    }

    pub fn evaluate_scalar(&self, element: usize, points: &[[f64; 2]]) -> Result<Vec<f64>> {
        Ok(self.evaluate(element, points)?.into_iter().map(|v| v[0]).collect())
    }

    /// Physical gradient of a scalar field at reference points of one cell.
    pub fn gradient(&self, element: usize, points: &[[f64; 2]]) -> Result<Vec<[f64; 2]>> {
        if self.space.is_vector() {
            return Err(Error::invalid("gradient of a vector field"));
        }
        let mut eb = self.element_basis(element, points)?;
        eb.reinit(element);
        let mut out = Vec::new();
        eb.field_gradients(&self.coeffs, &mut out);
        Ok(out)
    }

    /// Physical divergence of an RT field at reference points of one cell.
    pub fn divergence(&self, element: usize, points: &[[f64; 2]]) -> Result<Vec<f64>> {
        if !self.space.is_vector() {
            return Err(Error::invalid("divergence of a scalar field"));
        }
        let mut eb = self.element_basis(element, points)?;
        eb.reinit(element);
        let mut out = Vec::new();
        eb.field_divergences(&self.coeffs, &mut out);
        Ok(out)
    }

    /// Value at a physical point (wrapped periodically).
    pub fn value_at(&self, x: [f64; 2]) -> [f64; 2] {
        let (cell, xi) = self.space.mesh().locate(x);
        self.evaluate(cell, &[xi]).expect("located point is inside its cell")[0]
    }

    fn element_basis(&self, element: usize, points: &[[f64; 2]]) -> Result<ElementBasis> {
        if element >= self.space.mesh().n_cells() {
            return Err(Error::invalid(format!("element {element} out of range")));
        }
        ElementBasis::new(&self.space, points)
    }
}

pub fn make_space(mesh: &Arc<Mesh>, family: Family, degree: usize) -> Result<Arc<FunctionSpace>> {
    FunctionSpace::new(Arc::clone(mesh), family, degree).map(Arc::new)
}

pub fn tabulate(space: &FunctionSpace, points: &[[f64; 2]]) -> Result<BasisTable> {
    space.tabulate(points)
}

fn nodes_1d(family: Family, degree: usize) -> Vec<f64> {
    match family {
        Family::Cg => (0..=degree).map(|k| k as f64 / degree as f64).collect(),
        _ => (0..=degree).map(|k| (k as f64 + 0.5) / (degree as f64 + 1.0)).collect(),
    }
}

fn scalar_reference_1d(family: Family, degree: usize) -> (ReferenceBasis, Vec<Functional>) {
    let nodes = nodes_1d(family, degree);
    let basis = lagrange_basis(&nodes).iter().map(|c| Poly2::in_x(c)).collect();
    let functionals = nodes.iter().map(|&x| Functional::Node([x, 0.0])).collect();
    (ReferenceBasis::Scalar(basis), functionals)
}

fn scalar_reference_2d(family: Family, degree: usize) -> (ReferenceBasis, Vec<Functional>) {
    let nodes = nodes_1d(family, degree);
    let lag = lagrange_basis(&nodes);
    let mut basis = Vec::new();
    let mut functionals = Vec::new();
    for (l, ly) in lag.iter().enumerate() {
        for (k, lx) in lag.iter().enumerate() {
            basis.push(Poly2::in_x(lx).mul(&Poly2::in_y(ly)));
            functionals.push(Functional::Node([nodes[k], nodes[l]]));
        }
    }
    (ReferenceBasis::Scalar(basis), functionals)
}

fn rt_functionals(k: usize) -> Vec<Functional> {
    let mut f = Vec::new();
    for side in [LEFT, RIGHT, BOTTOM, TOP] {
        for m in 0..=k {
            f.push(Functional::EdgeMoment { side, legendre: m });
        }
    }
    // x-component against x^a y^b, a < k, b <= k; y-component symmetric
    for b in 0..=k {
        for a in 0..k {
            f.push(Functional::InteriorMoment {
                component: 0,
                weight: [a, b],
            });
        }
    }
    for a in 0..=k {
        for b in 0..k {
            f.push(Functional::InteriorMoment {
                component: 1,
                weight: [a, b],
            });
        }
    }
    f
}

fn rt_reference(k: usize) -> (ReferenceBasis, Vec<Functional>) {
    let mut monomials: Vec<[Poly2; 2]> = Vec::new();
    for b in 0..=k {
        for a in 0..=k + 1 {
            monomials.push([Poly2::monomial(a, b), Poly2::zero()]);
        }
    }
    for b in 0..=k + 1 {
        for a in 0..=k {
            monomials.push([Poly2::zero(), Poly2::monomial(a, b)]);
        }
    }
    let functionals = rt_functionals(k);
    let n = functionals.len();
    assert_eq!(n, monomials.len(), "RT functionals must be unisolvent");

    // Dual basis: phi_i = sum_j C[j][i] p_j with C = V^{-1}, V[i][j] = l_i(p_j).
    let (gx, gw) = gauss_legendre(FUNCTIONAL_POINTS);
    let mut v = DMatrix::<f64>::zeros(n, n);
    for (j, [px, py]) in monomials.iter().enumerate() {
        let field = |xi: [f64; 2]| [px.eval(xi[0], xi[1]), py.eval(xi[0], xi[1])];
        for (i, f) in functionals.iter().enumerate() {
            v[(i, j)] = apply_functional(f, &field, &gx, &gw);
        }
    }
    let c = v.try_inverse().expect("RT duality matrix is invertible");
    let basis = (0..n)
        .map(|i| {
            let mut phi = [Poly2::zero(), Poly2::zero()];
            for (j, [px, py]) in monomials.iter().enumerate() {
                let w = c[(j, i)];
                if w.abs() < 1e-15 {
                    continue;
                }
                phi[0] = phi[0].add(&px.scale(w));
                phi[1] = phi[1].add(&py.scale(w));
            }
            phi
        })
        .collect();
    (ReferenceBasis::Vector(basis), functionals)
}

fn apply_functional(f: &Functional, field: &dyn Fn([f64; 2]) -> [f64; 2], gx: &[f64], gw: &[f64]) -> f64 {
    match *f {
        Functional::Node(xi) => field(xi)[0],
        Functional::EdgeMoment { side, legendre } => {
            let leg = Poly2::in_x(&shifted_legendre(legendre));
            let (sign, comp, point): (f64, usize, fn(f64) -> [f64; 2]) = match side {
                LEFT => (-1.0, 0, |t| [0.0, t]),
                RIGHT => (1.0, 0, |t| [1.0, t]),
                BOTTOM => (-1.0, 1, |t| [t, 0.0]),
                _ => (1.0, 1, |t| [t, 1.0]),
            };
            sign * gx
                .iter()
                .zip(gw)
                .map(|(&t, &w)| w * field(point(t))[comp] * leg.eval(t, 0.0))
                .sum::<f64>()
        }
        Functional::InteriorMoment { component, weight } => {
            let mut s = 0.0;
            for (&y, &wy) in gx.iter().zip(gw) {
                for (&x, &wx) in gx.iter().zip(gw) {
                    let q = x.powi(weight[0] as i32) * y.powi(weight[1] as i32);
                    s += wx * wy * field([x, y])[component] * q;
                }
            }
            s
        }
    }
}

fn build_dof_map(mesh: &Mesh, family: Family, degree: usize, n_local: usize) -> (usize, Vec<usize>, Vec<f64>) {
    let n_cells = mesh.n_cells();
    let mut dofs = Vec::with_capacity(n_cells * n_local);
    let mut signs = vec![1.0; n_cells * n_local];
    let dim = match (mesh, family) {
        (Mesh::Interval(m), Family::Cg) => {
            let n = degree * m.n_elements();
            for e in 0..m.n_elements() {
                dofs.extend((0..=degree).map(|k| (degree * e + k) % n));
            }
            n
        }
        (Mesh::Interval(m), _) => {
            dofs.extend(0..(degree + 1) * m.n_elements());
            (degree + 1) * m.n_elements()
        }
        (Mesh::Quad(m), Family::Cg) => {
            let [nx, ny] = m.counts();
            let (rx, ry) = (degree * nx, degree * ny);
            for c in 0..n_cells {
                let [i, j] = m.cell_position(c);
                for l in 0..=degree {
                    for k in 0..=degree {
                        let a = (degree * i + k) % rx;
                        let b = (degree * j + l) % ry;
                        dofs.push(b * rx + a);
                    }
                }
            }
            rx * ry
        }
        (Mesh::Quad(_), Family::Dg) => {
            dofs.extend(0..n_local * n_cells);
            n_local * n_cells
        }
        (Mesh::Quad(m), Family::Rt) => {
            let per_edge = degree + 1;
            let n_interior = n_local - 4 * per_edge;
            let edge_block = m.n_edges() * per_edge;
            for c in 0..n_cells {
                let edges = m.cell_edges(c);
                let esigns = m.cell_edge_signs(c);
                for slot in [LEFT, RIGHT, BOTTOM, TOP] {
                    for mm in 0..per_edge {
                        signs[c * n_local + dofs.len() % n_local] = esigns[slot] as f64;
                        dofs.push(edges[slot] * per_edge + mm);
                    }
                }
                dofs.extend((0..n_interior).map(|l| edge_block + c * n_interior + l));
            }
            edge_block + n_cells * n_interior
        }
    };
    (dim, dofs, signs)
}
