//! Gauss–Legendre rules on the unit interval and tensor rules on the unit square.

use crate::error::{Error, Result};

/// Gauss–Legendre nodes and weights on `[0, 1]`; exact for degree `2n - 1`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "quadrature needs at least one point");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        // Newton iteration from the Chebyshev-like initial guess on [-1, 1]
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // map to [0, 1]
        nodes[i] = 0.5 * (1.0 - x);
        nodes[n - 1 - i] = 0.5 * (1.0 + x);
        weights[i] = 0.5 * w;
        weights[n - 1 - i] = 0.5 * w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Quadrature on the reference cell: `[0,1]` in 1D, `[0,1]^2` in 2D.
///
/// Points are stored as `[x, y]` with `y = 0` in 1D.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    dim: usize,
    points_per_direction: usize,
    points: Vec<[f64; 2]>,
    weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn gauss(dim: usize, points_per_direction: usize) -> Result<Self> {
        if !(1..=2).contains(&dim) {
            return Err(Error::invalid(format!("quadrature dimension {dim} unsupported")));
        }
        if points_per_direction == 0 {
            return Err(Error::invalid("quadrature needs at least one point"));
        }
        let (x, w) = gauss_legendre(points_per_direction);
        let (points, weights) = if dim == 1 {
            (x.iter().map(|&xi| [xi, 0.0]).collect(), w)
        } else {
            let mut pts = Vec::with_capacity(x.len() * x.len());
            let mut wts = Vec::with_capacity(x.len() * x.len());
            for (j, &yj) in x.iter().enumerate() {
                for (i, &xi) in x.iter().enumerate() {
                    pts.push([xi, yj]);
                    wts.push(w[i] * w[j]);
                }
            }
            (pts, wts)
        };
        Ok(Self {
            dim,
            points_per_direction,
            points,
            weights,
        })
    }

    /// Rule used for integrands built from bases of per-direction degree at
    /// most `max_basis_degree`: `max_basis_degree + 2` points per direction,
    /// plus `extra`.
    ///
    /// Every product assembled in this crate (at most four basis-degree
    /// factors per direction, once derivative reductions are accounted for)
    /// is integrated exactly.
    pub fn for_degree(dim: usize, max_basis_degree: usize, extra: usize) -> Self {
        Self::gauss(dim, max_basis_degree + 2 + extra).expect("valid quadrature parameters")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points_per_direction(&self) -> usize {
        self.points_per_direction
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[[f64; 2]] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}
