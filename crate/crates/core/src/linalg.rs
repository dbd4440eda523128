//! Jacobi-preconditioned conjugate gradients for mass-type systems, and
//! dense generalised symmetric eigensolves for desk-scale diagnostics.

use std::fmt;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::sparse::{SparseMatrix, TripletBuilder};

/// Largest problem the dense routines accept by default.
pub const DENSE_CAP: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    /// `||b - A x|| / ||b||` at exit (recursively updated residual).
    pub relative_residual: f64,
    pub converged: bool,
}

impl fmt::Display for SolveReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} after {} iterations, relative residual {:.3e}",
            if self.converged { "converged" } else { "not converged" },
            self.iterations,
            self.relative_residual
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for CgOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 10_000,
        }
    }
}

pub fn cg_solve(a: &SparseMatrix, b: &[f64], tol: f64, max_iter: usize) -> Result<(Vec<f64>, SolveReport)> {
    cg_solve_with(a, b, None, CgOptions { tol, max_iter }, None)
}

/// Preconditioned CG with an optional initial guess and a per-iteration
/// monitor receiving `(iteration, current iterate)`.
pub fn cg_solve_with(
    a: &SparseMatrix,
    b: &[f64],
    x0: Option<&[f64]>,
    opts: CgOptions,
    mut monitor: Option<&mut dyn FnMut(usize, &[f64])>,
) -> Result<(Vec<f64>, SolveReport)> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::InvalidMatrix(format!(
            "CG needs a square matrix, got {:?}",
            a.shape()
        )));
    }
    if b.len() != n {
        return Err(Error::invalid(format!(
            "right-hand side has length {}, expected {n}",
            b.len()
        )));
    }
    let diag = a.diagonal_values();
    if let Some(i) = diag.iter().position(|&d| !(d > 0.0)) {
        return Err(Error::InvalidMatrix(format!(
            "diagonal entry {i} is {} (Jacobi preconditioning needs positive diagonal)",
            diag[i]
        )));
    }
    let inv_diag: Vec<f64> = diag.iter().map(|d| 1.0 / d).collect();

    let bnorm = norm(b);
    if bnorm == 0.0 {
        return Ok((
            vec![0.0; n],
            SolveReport {
                iterations: 0,
                relative_residual: 0.0,
                converged: true,
            },
        ));
    }

    let mut x = match x0 {
        Some(g) if g.len() == n => g.to_vec(),
        Some(g) => {
            return Err(Error::invalid(format!(
                "initial guess has length {}, expected {n}",
                g.len()
            )))
        }
        None => vec![0.0; n],
    };
    let mut r = b.to_vec();
    if x0.is_some() {
        let ax = a.mul_vec(&x);
        r.iter_mut().zip(&ax).for_each(|(ri, ai)| *ri -= ai);
    }
    let mut rel = norm(&r) / bnorm;
    if rel <= opts.tol {
        return Ok((
            x,
            SolveReport {
                iterations: 0,
                relative_residual: rel,
                converged: true,
            },
        ));
    }
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];

    for it in 1..=opts.max_iter {
        a.mul_vec_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::InvalidMatrix(format!(
                "matrix is not positive definite (p^T A p = {pap:e})"
            )));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        if let Some(m) = monitor.as_deref_mut() {
            m(it, &x);
        }
        rel = norm(&r) / bnorm;
        if rel <= opts.tol {
            return Ok((
                x,
                SolveReport {
                    iterations: it,
                    relative_residual: rel,
                    converged: true,
                },
            ));
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::SolverFailure {
        context: "conjugate gradients".into(),
        report: SolveReport {
            iterations: opts.max_iter,
            relative_residual: rel,
            converged: false,
        },
    })
}

/// A symmetric positive definite matrix paired with CG settings.
#[derive(Debug, Clone)]
pub struct SpdSolver {
    matrix: SparseMatrix,
    opts: CgOptions,
}

impl SpdSolver {
    pub fn new(matrix: SparseMatrix, opts: CgOptions) -> Self {
        Self { matrix, opts }
    }

    pub fn matrix(&self) -> &SparseMatrix {
        &self.matrix
    }

    pub fn solve(&self, rhs: &[f64], guess: Option<&[f64]>) -> Result<Vec<f64>> {
        cg_solve_with(&self.matrix, rhs, guess, self.opts, None).map(|(x, _)| x)
    }
}

/// Exact inverse of a block-diagonal matrix (a DG mass matrix), one dense
/// Cholesky factorisation per block of indices.
pub fn block_diagonal_inverse<'a>(
    matrix: &SparseMatrix,
    blocks: impl IntoIterator<Item = &'a [usize]>,
) -> Result<SparseMatrix> {
    let n = matrix.nrows();
    if matrix.ncols() != n {
        return Err(Error::InvalidMatrix("block inverse of a non-square matrix".into()));
    }
    let mut owner = vec![usize::MAX; n];
    let mut out = TripletBuilder::new(n, n);
    for (b, idx) in blocks.into_iter().enumerate() {
        let k = idx.len();
        let mut local = DMatrix::zeros(k, k);
        for (a, &i) in idx.iter().enumerate() {
            if owner[i] != usize::MAX {
                return Err(Error::InvalidMatrix(format!("index {i} appears in two blocks")));
            }
            owner[i] = b;
            for (c, &j) in idx.iter().enumerate() {
                local[(a, c)] = matrix.get(i, j);
            }
        }
        let inv = local
            .cholesky()
            .ok_or_else(|| Error::InvalidMatrix(format!("block {b} is not positive definite")))?
            .inverse();
        for (a, &i) in idx.iter().enumerate() {
            for (c, &j) in idx.iter().enumerate() {
                out.add(i, j, inv[(a, c)]);
            }
        }
    }
    for i in 0..n {
        if owner[i] == usize::MAX {
            return Err(Error::InvalidMatrix(format!("index {i} is not in any block")));
        }
        if let Some((j, _)) = matrix.row(i).find(|&(j, v)| v != 0.0 && owner[j] != owner[i]) {
            return Err(Error::InvalidMatrix(format!("entry ({i}, {j}) couples two blocks")));
        }
    }
    Ok(out.build())
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Orthonormal basis (as columns) of the orthogonal complement of `v`,
/// built from a Householder reflection that maps `v` onto `e_1`.
pub fn orthogonal_complement(v: &[f64]) -> DMatrix<f64> {
    let n = v.len();
    let vn = norm(v);
    assert!(n >= 1 && vn > 0.0, "cannot complement a zero vector");
    let mut w = DVector::from_column_slice(v) / vn;
    let sign = if w[0] >= 0.0 { 1.0 } else { -1.0 };
    w[0] += sign;
    let wn2 = w.norm_squared();
    // H = I - 2 w w^T / |w|^2; columns 1.. span v-perp
    let mut q = DMatrix::zeros(n, n - 1);
    for c in 1..n {
        for r in 0..n {
            let id = if r == c { 1.0 } else { 0.0 };
            q[(r, c - 1)] = id - 2.0 * w[r] * w[c] / wn2;
        }
    }
    q
}

/// Eigenpairs of `A v = lambda B v`, ascending, with `B`-orthonormal vectors.
#[derive(Debug, Clone)]
pub struct GeneralizedEigen {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

/// Full generalised eigendecomposition of a symmetric pencil.
///
/// With `deflate = Some(d)` the problem is restricted to the
/// `B`-orthogonal complement `{x : d^T B x = 0}`, which drops one eigenpair.
pub fn generalized_eigen(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    deflate: Option<&[f64]>,
    cap: usize,
) -> Result<GeneralizedEigen> {
    let n = a.nrows();
    if a.ncols() != n || b.nrows() != n || b.ncols() != n {
        return Err(Error::invalid(
            "generalised eigenproblem needs square matrices of equal size",
        ));
    }
    if n > cap {
        return Err(Error::TooLarge { size: n, cap });
    }
    let q = match deflate {
        Some(d) => {
            if d.len() != n {
                return Err(Error::invalid("deflation vector has the wrong length"));
            }
            let bd = b * DVector::from_column_slice(d);
            Some(orthogonal_complement(bd.as_slice()))
        }
        None => None,
    };
    let (ar, br) = match &q {
        Some(q) => (q.transpose() * a * q, q.transpose() * b * q),
        None => (a.clone(), b.clone()),
    };
    let chol = nalgebra::Cholesky::new(symmetrize(&br))
        .ok_or_else(|| Error::InvalidMatrix("right-hand matrix of the pencil is not positive definite".into()))?;
    let l = chol.l();
    // C = L^{-1} A L^{-T}
    let linv_a = l
        .solve_lower_triangular(&ar)
        .ok_or_else(|| Error::InvalidMatrix("singular Cholesky factor".into()))?;
    let c = l
        .solve_lower_triangular(&linv_a.transpose())
        .ok_or_else(|| Error::InvalidMatrix("singular Cholesky factor".into()))?;
    let eig = nalgebra::SymmetricEigen::new(symmetrize(&c));
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut y = DMatrix::zeros(eig.eigenvectors.nrows(), order.len());
    for (k, &i) in order.iter().enumerate() {
        y.set_column(k, &eig.eigenvectors.column(i));
    }
    // x = L^{-T} y
    let x = l
        .transpose()
        .solve_upper_triangular(&y)
        .ok_or_else(|| Error::InvalidMatrix("singular Cholesky factor".into()))?;
    let vectors = match q {
        Some(q) => q * x,
        None => x,
    };
    Ok(GeneralizedEigen { values, vectors })
}

/// The `k` smallest generalised eigenvalues of `A v = lambda B v`, ascending.
pub fn smallest_generalized_eigs(
    a: &SparseMatrix,
    b: &SparseMatrix,
    k: usize,
    deflate: Option<&[f64]>,
) -> Result<Vec<f64>> {
    if a.nrows() > DENSE_CAP {
        return Err(Error::TooLarge {
            size: a.nrows(),
            cap: DENSE_CAP,
        });
    }
    let eig = generalized_eigen(&a.to_dense(), &b.to_dense(), deflate, DENSE_CAP)?;
    Ok(eig.values.into_iter().take(k).collect())
}

pub fn symmetrize(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}
