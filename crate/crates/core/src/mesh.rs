//! Periodic meshes: the 1D interval and the doubly periodic structured
//! quadrilateral grid.
//!
//! Both are immutable after construction. Entity numbering is deterministic:
//! 2D cells and vertices are row-major (`j * nx + i`), vertical edges come
//! first (`j * nx + i`, the edge on the line `x = i * dx`), followed by the
//! horizontal edges (`nx * ny + j * nx + i`, on the line `y = j * dy`).

use crate::error::{Error, Result};

/// Local edge slots of a quadrilateral cell.
pub const LEFT: usize = 0;
pub const RIGHT: usize = 1;
pub const BOTTOM: usize = 2;
pub const TOP: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh1D {
    length: f64,
    /// `n_elements + 1` coordinates; the last one is the periodic image of the first.
    vertices: Vec<f64>,
    widths: Vec<f64>,
}

impl Mesh1D {
    pub fn uniform(length: f64, n_elements: usize) -> Result<Self> {
        if !(length > 0.0) || !length.is_finite() {
            return Err(Error::invalid(format!(
                "interval length must be positive, got {length}"
            )));
        }
        if n_elements == 0 {
            return Err(Error::invalid("interval mesh needs at least one element"));
        }
        let dx = length / n_elements as f64;
        let mut vertices: Vec<f64> = (0..n_elements).map(|i| i as f64 * dx).collect();
        vertices.push(length);
        Ok(Self {
            length,
            vertices,
            widths: vec![dx; n_elements],
        })
    }

    /// Non-uniform periodic mesh from a list of element widths.
    pub fn from_widths(widths: &[f64]) -> Result<Self> {
        if widths.is_empty() {
            return Err(Error::invalid("interval mesh needs at least one element"));
        }
        if let Some(w) = widths.iter().find(|w| !(**w > 0.0) || !w.is_finite()) {
            return Err(Error::invalid(format!("element widths must be positive, got {w}")));
        }
        let mut vertices = Vec::with_capacity(widths.len() + 1);
        let mut x = 0.0;
        vertices.push(x);
        for w in widths {
            x += w;
            vertices.push(x);
        }
        Ok(Self {
            length: x,
            vertices,
            widths: widths.to_vec(),
        })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn n_elements(&self) -> usize {
        self.widths.len()
    }

    /// Coordinates of vertices `0..=n_elements`; vertex `n_elements` is vertex 0.
    pub fn vertex_coordinates(&self) -> &[f64] {
        &self.vertices
    }

    pub fn widths(&self) -> &[f64] {
        &self.widths
    }

    pub fn width(&self, element: usize) -> f64 {
        self.widths[element]
    }

    /// Global vertex indices of an element, with the periodic wrap applied.
    pub fn element_vertices(&self, element: usize) -> [usize; 2] {
        let n = self.n_elements();
        [element, (element + 1) % n]
    }

    pub fn is_uniform(&self) -> bool {
        let w0 = self.widths[0];
        self.widths.iter().all(|w| (w - w0).abs() <= 1e-14 * w0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeOrientation {
    /// Lies on a line `x = const`; global normal `+x`.
    Vertical,
    /// Lies on a line `y = const`; global normal `+y`.
    Horizontal,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub vertices: [usize; 2],
    pub orientation: EdgeOrientation,
}

impl Edge {
    pub fn normal(&self) -> [f64; 2] {
        match self.orientation {
            EdgeOrientation::Vertical => [1.0, 0.0],
            EdgeOrientation::Horizontal => [0.0, 1.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh2D {
    lx: f64,
    ly: f64,
    nx: usize,
    ny: usize,
    vertices: Vec<[f64; 2]>,
    edges: Vec<Edge>,
    /// Counter-clockwise from the lower-left corner.
    cell_vertices: Vec<[usize; 4]>,
    /// Indexed by [`LEFT`], [`RIGHT`], [`BOTTOM`], [`TOP`].
    cell_edges: Vec<[usize; 4]>,
    cell_edge_signs: Vec<[i8; 4]>,
}

impl Mesh2D {
    pub fn periodic(lx: f64, ly: f64, nx: usize, ny: usize) -> Result<Self> {
        for (name, v) in [("lx", lx), ("ly", ly)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if nx == 0 || ny == 0 {
            return Err(Error::invalid(format!("cell counts must be positive, got {nx}x{ny}")));
        }
        let dx = lx / nx as f64;
        let dy = ly / ny as f64;
        let n = nx * ny;
        let vid = |i: usize, j: usize| (j % ny) * nx + (i % nx);

        let mut vertices = Vec::with_capacity(n);
        for j in 0..ny {
            for i in 0..nx {
                vertices.push([i as f64 * dx, j as f64 * dy]);
            }
        }

        let mut edges = Vec::with_capacity(2 * n);
        for j in 0..ny {
            for i in 0..nx {
                edges.push(Edge {
                    vertices: [vid(i, j), vid(i, j + 1)],
                    orientation: EdgeOrientation::Vertical,
                });
            }
        }
        for j in 0..ny {
            for i in 0..nx {
                edges.push(Edge {
                    vertices: [vid(i, j), vid(i + 1, j)],
                    orientation: EdgeOrientation::Horizontal,
                });
            }
        }

        let mut cell_vertices = Vec::with_capacity(n);
        let mut cell_edges = Vec::with_capacity(n);
        let mut cell_edge_signs = Vec::with_capacity(n);
        for j in 0..ny {
            for i in 0..nx {
                cell_vertices.push([vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)]);
                let vertical = |ii: usize| j * nx + ii % nx;
                let horizontal = |jj: usize| n + (jj % ny) * nx + i;
                cell_edges.push([vertical(i), vertical(i + 1), horizontal(j), horizontal(j + 1)]);
                // local outward normal against the global +x / +y normal
                cell_edge_signs.push([-1, 1, -1, 1]);
            }
        }

        Ok(Self {
            lx,
            ly,
            nx,
            ny,
            vertices,
            edges,
            cell_vertices,
            cell_edges,
            cell_edge_signs,
        })
    }

    pub fn extents(&self) -> [f64; 2] {
        [self.lx, self.ly]
    }

    pub fn counts(&self) -> [usize; 2] {
        [self.nx, self.ny]
    }

    pub fn cell_size(&self) -> [f64; 2] {
        [self.lx / self.nx as f64, self.ly / self.ny as f64]
    }

    pub fn cell_area(&self) -> f64 {
        let [dx, dy] = self.cell_size();
        dx * dy
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn n_cells(&self) -> usize {
        self.cell_edges.len()
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn cell_vertices(&self, cell: usize) -> [usize; 4] {
        self.cell_vertices[cell]
    }

    pub fn cell_edges(&self, cell: usize) -> [usize; 4] {
        self.cell_edges[cell]
    }

    pub fn cell_edge_signs(&self, cell: usize) -> [i8; 4] {
        self.cell_edge_signs[cell]
    }

    /// `(i, j)` position of a cell in the grid.
    pub fn cell_position(&self, cell: usize) -> [usize; 2] {
        [cell % self.nx, cell / self.nx]
    }
}

/// Affine map of a cell: `x = origin + size * x_hat` per coordinate.
///
/// In 1D the second coordinate is inert (`origin[1] = 0`, `size[1] = 1`), so
/// the Jacobian determinant is always `size[0] * size[1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellGeometry {
    pub origin: [f64; 2],
    pub size: [f64; 2],
}

impl CellGeometry {
    pub fn det(&self) -> f64 {
        self.size[0] * self.size[1]
    }

    pub fn to_physical(&self, xi: [f64; 2]) -> [f64; 2] {
        [
            self.origin[0] + self.size[0] * xi[0],
            self.origin[1] + self.size[1] * xi[1],
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Mesh {
    Interval(Mesh1D),
    Quad(Mesh2D),
}

impl Mesh {
    pub fn dim(&self) -> usize {
        match self {
            Mesh::Interval(_) => 1,
            Mesh::Quad(_) => 2,
        }
    }

    pub fn n_cells(&self) -> usize {
        match self {
            Mesh::Interval(m) => m.n_elements(),
            Mesh::Quad(m) => m.n_cells(),
        }
    }

    pub fn cell_geometry(&self, cell: usize) -> CellGeometry {
        match self {
            Mesh::Interval(m) => CellGeometry {
                origin: [m.vertices[cell], 0.0],
                size: [m.widths[cell], 1.0],
            },
            Mesh::Quad(m) => {
                let [i, j] = m.cell_position(cell);
                let [dx, dy] = m.cell_size();
                CellGeometry {
                    origin: [i as f64 * dx, j as f64 * dy],
                    size: [dx, dy],
                }
            }
        }
    }

    /// Total measure of the domain.
    pub fn volume(&self) -> f64 {
        match self {
            Mesh::Interval(m) => m.length(),
            Mesh::Quad(m) => m.lx * m.ly,
        }
    }

    pub fn as_interval(&self) -> Option<&Mesh1D> {
        match self {
            Mesh::Interval(m) => Some(m),
            Mesh::Quad(_) => None,
        }
    }

    pub fn as_quad(&self) -> Option<&Mesh2D> {
        match self {
            Mesh::Quad(m) => Some(m),
            Mesh::Interval(_) => None,
        }
    }

    /// Cell containing a physical point (wrapped periodically) and the
    /// point's reference coordinates in that cell.
    pub fn locate(&self, x: [f64; 2]) -> (usize, [f64; 2]) {
        match self {
            Mesh::Interval(m) => {
                let xw = x[0].rem_euclid(m.length);
                let e = match m.vertices.binary_search_by(|v| v.total_cmp(&xw)) {
                    Ok(i) => i.min(m.n_elements() - 1),
                    Err(i) => i.saturating_sub(1).min(m.n_elements() - 1),
                };
                let xi = ((xw - m.vertices[e]) / m.widths[e]).clamp(0.0, 1.0);
                (e, [xi, 0.0])
            }
            Mesh::Quad(m) => {
                let [dx, dy] = m.cell_size();
                let locate_axis = |v: f64, len: f64, h: f64, n: usize| {
                    let w = v.rem_euclid(len);
                    let k = ((w / h).floor() as usize).min(n - 1);
                    (k, ((w - k as f64 * h) / h).clamp(0.0, 1.0))
                };
                let (i, xi) = locate_axis(x[0], m.lx, dx, m.nx);
                let (j, eta) = locate_axis(x[1], m.ly, dy, m.ny);
                (j * m.nx + i, [xi, eta])
            }
        }
    }
}

impl From<Mesh1D> for Mesh {
    fn from(m: Mesh1D) -> Self {
        Mesh::Interval(m)
    }
}

impl From<Mesh2D> for Mesh {
    fn from(m: Mesh2D) -> Self {
        Mesh::Quad(m)
    }
}

pub fn build_interval_mesh(length: f64, n_elements: usize) -> Result<Mesh1D> {
    Mesh1D::uniform(length, n_elements)
}

pub fn build_periodic_quad_mesh(lx: f64, ly: f64, nx: usize, ny: usize) -> Result<Mesh2D> {
    Mesh2D::periodic(lx, ly, nx, ny)
}

/// Unit-size mesh from `NXxNY` (periodic quadrilaterals) or `NE` (interval).
pub fn parse_mesh_shape(s: &str) -> Result<Mesh> {
    let bad = || Error::InvalidArgument(format!("mesh `{s}` must be NXxNY or NE"));
    match s.split_once(['x', 'X']) {
        Some((a, b)) => {
            let nx = a.trim().parse().map_err(|_| bad())?;
            let ny = b.trim().parse().map_err(|_| bad())?;
            Ok(Mesh2D::periodic(1.0, 1.0, nx, ny)?.into())
        }
        None => Ok(Mesh1D::uniform(1.0, s.trim().parse().map_err(|_| bad())?)?.into()),
    }
}
