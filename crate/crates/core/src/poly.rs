//! Small dense bivariate polynomials used for reference-element bases.

/// Highest supported degree per variable.
pub const MAX_DEGREE: usize = 3;
const N: usize = MAX_DEGREE + 1;

/// `sum_{a,b} c[a][b] x^a y^b` with `a, b <= MAX_DEGREE`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Poly2 {
    c: [[f64; N]; N],
}

impl Poly2 {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn monomial(a: usize, b: usize) -> Self {
        let mut p = Self::zero();
        p.c[a][b] = 1.0;
        p
    }

    /// Lift a univariate polynomial in `x` (coefficients in ascending order).
    pub fn in_x(coeffs: &[f64]) -> Self {
        let mut p = Self::zero();
        for (a, &v) in coeffs.iter().enumerate() {
            p.c[a][0] = v;
        }
        p
    }

    pub fn in_y(coeffs: &[f64]) -> Self {
        let mut p = Self::zero();
        for (b, &v) in coeffs.iter().enumerate() {
            p.c[0][b] = v;
        }
        p
    }

    pub fn coeff(&self, a: usize, b: usize) -> f64 {
        self.c[a][b]
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let mut acc = 0.0;
        for a in (0..N).rev() {
            let mut row = 0.0;
            for b in (0..N).rev() {
                row = row * y + self.c[a][b];
            }
            acc = acc * x + row;
        }
        acc
    }

    pub fn dx(&self) -> Self {
        let mut p = Self::zero();
        for a in 1..N {
            for b in 0..N {
                p.c[a - 1][b] = a as f64 * self.c[a][b];
            }
        }
        p
    }

    pub fn dy(&self) -> Self {
        let mut p = Self::zero();
        for a in 0..N {
            for b in 1..N {
                p.c[a][b - 1] = b as f64 * self.c[a][b];
            }
        }
        p
    }

    /// Product; panics if the result would exceed [`MAX_DEGREE`] in either variable.
    pub fn mul(&self, other: &Self) -> Self {
        let mut p = Self::zero();
        for a in 0..N {
            for b in 0..N {
                if self.c[a][b] == 0.0 {
                    continue;
                }
                for c in 0..N {
                    for d in 0..N {
                        if other.c[c][d] == 0.0 {
                            continue;
                        }
                        assert!(a + c < N && b + d < N, "polynomial degree overflow");
                        p.c[a + c][b + d] += self.c[a][b] * other.c[c][d];
                    }
                }
            }
        }
        p
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut p = *self;
        p.c.iter_mut().flatten().for_each(|v| *v *= s);
        p
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut p = *self;
        for a in 0..N {
            for b in 0..N {
                p.c[a][b] += other.c[a][b];
            }
        }
        p
    }

    /// Highest power of `x` and `y` with a nonzero coefficient.
    pub fn degrees(&self) -> [usize; 2] {
        let mut d = [0, 0];
        for a in 0..N {
            for b in 0..N {
                if self.c[a][b] != 0.0 {
                    d[0] = d[0].max(a);
                    d[1] = d[1].max(b);
                }
            }
        }
        d
    }
}

/// Univariate Lagrange basis on the given nodes, as ascending coefficient vectors.
pub fn lagrange_basis(nodes: &[f64]) -> Vec<Vec<f64>> {
    nodes
        .iter()
        .enumerate()
        .map(|(i, &xi)| {
            let mut coeffs = vec![1.0];
            for (j, &xj) in nodes.iter().enumerate() {
                if i == j {
                    continue;
                }
                let denom = xi - xj;
                // multiply by (x - xj) / denom
                let mut next = vec![0.0; coeffs.len() + 1];
                for (k, &c) in coeffs.iter().enumerate() {
                    next[k + 1] += c / denom;
                    next[k] -= c * xj / denom;
                }
                coeffs = next;
            }
            coeffs
        })
        .collect()
}

/// Shifted Legendre polynomial of degree `m` on `[0, 1]` (ascending coefficients).
pub fn shifted_legendre(m: usize) -> Vec<f64> {
    match m {
        0 => vec![1.0],
        1 => vec![-1.0, 2.0],
        2 => vec![1.0, -6.0, 6.0],
        _ => panic!("shifted Legendre degree {m} not needed"),
    }
}
