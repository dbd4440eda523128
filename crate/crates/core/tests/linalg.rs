use std::f64::consts::PI;
use std::sync::Arc;

use approx::assert_relative_eq;
use compat_fem::assembly::{assemble_grad_1d, assemble_mass};
use compat_fem::linalg::{
    block_diagonal_inverse, cg_solve, cg_solve_with, dot, generalized_eigen, orthogonal_complement,
    smallest_generalized_eigs, CgOptions, SpdSolver, DENSE_CAP,
};
use compat_fem::space::make_space;
use compat_fem::sparse::TripletBuilder;
use compat_fem::{Error, Family, Mesh, Mesh1D, Mesh2D, SparseMatrix};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};

fn interval(ne: usize) -> Arc<Mesh> {
    Arc::new(Mesh::from(Mesh1D::uniform(1.0, ne).unwrap()))
}

fn random_vec(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

fn lu_solve(a: &SparseMatrix, b: &[f64]) -> DVector<f64> {
    a.to_dense().lu().solve(&DVector::from_column_slice(b)).unwrap()
}

/// Max-norm difference relative to the oracle's max norm.
fn rel_diff(x: &[f64], oracle: &DVector<f64>) -> f64 {
    let err = x
        .iter()
        .zip(oracle.iter())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    err / oracle.amax()
}

#[test]
fn cg1_mass_solve_matches_dense_lu() {
    for ne in [3, 8, 17, 64] {
        let v = make_space(&interval(ne), Family::Cg, 1).unwrap();
        let m = assemble_mass(&v, None).unwrap();
        let b = random_vec(v.dim(), ne as u64);
        let (x, report) = cg_solve(&m, &b, 1e-12, 1000).unwrap();
        assert!(report.converged && report.relative_residual <= 1e-12);
        let err = rel_diff(&x, &lu_solve(&m, &b));
        assert!(err <= 1e-10, "ne={ne}: {err}");
    }
}

#[test]
fn quad_mass_solves_match_dense_lu() {
    let mesh = Arc::new(Mesh::from(Mesh2D::periodic(1.0, 1.0, 8, 8).unwrap()));
    for (fam, deg) in [
        (Family::Cg, 1),
        (Family::Cg, 2),
        (Family::Rt, 0),
        (Family::Rt, 1),
        (Family::Dg, 1),
    ] {
        let v = make_space(&mesh, fam, deg).unwrap();
        let m = assemble_mass(&v, None).unwrap();
        let b = random_vec(v.dim(), 7);
        let solver = SpdSolver::new(
            m.clone(),
            CgOptions {
                tol: 1e-12,
                max_iter: 5000,
            },
        );
        let x = solver.solve(&b, None).unwrap();
        let err = rel_diff(&x, &lu_solve(&m, &b));
        assert!(err <= 1e-10, "{fam:?}{deg}: {err}");
    }
}

/// `ω² = 6 (2 - 2cos θ) / (Δx² (4 + 2cos θ))`, `θ = 2πk/Ne`, for the
/// periodic CG1 stiffness/mass pencil.
fn cg1_symbol(ne: usize) -> Vec<f64> {
    let dx = 1.0 / ne as f64;
    let mut w: Vec<f64> = (0..ne)
        .map(|k| {
            let c = (2.0 * PI * k as f64 / ne as f64).cos();
            6.0 * (2.0 - 2.0 * c) / (dx * dx * (4.0 + 2.0 * c))
        })
        .collect();
    w.sort_by(f64::total_cmp);
    w
}

#[test]
fn laplacian_pencil_matches_fourier_symbol() {
    let ne = 8;
    let mesh = interval(ne);
    let v0 = make_space(&mesh, Family::Cg, 1).unwrap();
    let v1 = make_space(&mesh, Family::Dg, 0).unwrap();
    let d = assemble_grad_1d(&v0, &v1).unwrap().to_dense();
    let m1 = assemble_mass(&v1, None).unwrap().to_dense();
    let m0 = assemble_mass(&v0, None).unwrap().to_dense();
    let k = &d * m1.try_inverse().unwrap() * d.transpose();
    let eig = generalized_eigen(&k, &m0, None, 4096).unwrap();
    let symbol = cg1_symbol(ne);
    let scale = symbol.last().copied().unwrap();
    for (a, b) in eig.values.iter().zip(&symbol) {
        assert!((a - b).abs() <= 1e-10 * scale, "{a} vs {b}");
    }
    let low =
        smallest_generalized_eigs(&SparseMatrix::from_dense(&k), &SparseMatrix::from_dense(&m0), 3, None).unwrap();
    assert_eq!(low.len(), 3);
    for (a, b) in low.iter().zip(&symbol) {
        assert!((a - b).abs() <= 1e-10 * scale);
    }
}

#[test]
fn block_inverse_of_dg_mass_is_exact() {
    let mesh = Arc::new(Mesh::from(Mesh2D::periodic(1.0, 2.0, 3, 4).unwrap()));
    let v = make_space(&mesh, Family::Dg, 1).unwrap();
    let m = assemble_mass(&v, None).unwrap();
    let inv = block_diagonal_inverse(&m, (0..mesh.n_cells()).map(|c| v.cell_dofs(c).0)).unwrap();
    let prod = m.matmul(&inv);
    assert!(prod.max_abs_diff(&SparseMatrix::identity(v.dim())) <= 1e-12);
}

#[test]
fn block_inverse_rejects_coupled_matrices() {
    let v = make_space(&interval(6), Family::Cg, 1).unwrap();
    let m = assemble_mass(&v, None).unwrap();
    let singles: Vec<Vec<usize>> = (0..v.dim()).map(|i| vec![i]).collect();
    assert!(block_diagonal_inverse(&m, singles.iter().map(|b| b.as_slice())).is_err());
}

fn tridiag(n: usize, lo: f64, d: f64, hi: f64, periodic: bool) -> SparseMatrix {
    let mut b = TripletBuilder::new(n, n);
    for i in 0..n {
        b.add(i, i, d);
        if i > 0 || periodic {
            b.add(i, (i + n - 1) % n, lo);
        }
        if i + 1 < n || periodic {
            b.add(i, (i + 1) % n, hi);
        }
    }
    b.build()
}

#[test]
fn diagonal_system_in_one_iteration() {
    let a = SparseMatrix::diagonal(&[2.0, 4.0, 8.0]);
    let (x, rep) = cg_solve(&a, &[1.0, 1.0, 1.0], 1e-14, 10).unwrap();
    assert_eq!(rep.iterations, 1);
    assert_relative_eq!(x[2], 0.125, epsilon = 1e-16);
}

#[test]
fn zero_rhs_gives_zero() {
    let a = tridiag(5, 1.0, 4.0, 1.0, true);
    let (x, rep) = cg_solve(&a, &[0.0; 5], 1e-12, 10).unwrap();
    assert_eq!(rep.iterations, 0);
    assert!(x.iter().all(|&v| v == 0.0));
}

#[test]
fn rejects_zero_diagonal() {
    let a = SparseMatrix::diagonal(&[1.0, 0.0]);
    assert!(matches!(
        cg_solve(&a, &[1.0, 1.0], 1e-12, 10),
        Err(Error::InvalidMatrix(_))
    ));
}

#[test]
fn non_convergence_carries_report() {
    let a = tridiag(50, -1.0, 2.0001, -1.0, false);
    let b = vec![1.0; 50];
    match cg_solve(&a, &b, 1e-14, 3) {
        Err(Error::SolverFailure { report, .. }) => {
            assert_eq!(report.iterations, 3);
            assert!(!report.converged);
        }
        other => panic!("expected solver failure, got {other:?}"),
    }
}

#[test]
fn energy_norm_error_is_monotone() {
    let mut rng = rand::rngs::StdRng::seed_from_u64(1);
    let n = 40;
    let a = tridiag(n, -1.0, 2.5, -1.0, true);
    let xs: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let b = a.mul_vec(&xs);
    let mut errs = Vec::new();
    let mut monitor = |_: usize, x: &[f64]| {
        let e: Vec<f64> = x.iter().zip(&xs).map(|(a, b)| a - b).collect();
        errs.push(dot(&e, &a.mul_vec(&e)).sqrt());
    };
    cg_solve_with(
        &a,
        &b,
        None,
        CgOptions {
            tol: 1e-13,
            max_iter: 200,
        },
        Some(&mut monitor),
    )
    .unwrap();
    assert!(errs.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
}

#[test]
fn generalized_eigs_trivial_cases() {
    let a = tridiag(6, 1.0, 4.0, 1.0, true);
    let vals = smallest_generalized_eigs(&a, &a, 6, None).unwrap();
    assert!(vals.iter().all(|v| (v - 1.0).abs() < 1e-12));
    let zero = a.scale(0.0);
    let vals = smallest_generalized_eigs(&zero, &a, 6, None).unwrap();
    assert!(vals.iter().all(|v| v.abs() < 1e-14));
}

#[test]
fn eigenpair_residuals_and_deflation() {
    let n = 12;
    let a = tridiag(n, -1.0, 2.0, -1.0, true); // singular: constants
    let b = tridiag(n, 1.0, 4.0, 1.0, true);
    let ones = vec![1.0; n];
    let eig = generalized_eigen(&a.to_dense(), &b.to_dense(), Some(&ones), DENSE_CAP).unwrap();
    assert_eq!(eig.values.len(), n - 1);
    assert!(eig.values.windows(2).all(|w| w[0] <= w[1]));
    assert!(eig.values[0] > 1e-3, "constant mode must be deflated");
    let (ad, bd) = (a.to_dense(), b.to_dense());
    for k in 0..eig.values.len() {
        let v = eig.vectors.column(k);
        let r = &ad * v - (&bd * v) * eig.values[k];
        assert!(r.norm() <= 1e-8 * v.norm());
    }
}

#[test]
fn indefinite_pencil_is_rejected() {
    let a = SparseMatrix::identity(3);
    let b = SparseMatrix::diagonal(&[1.0, -1.0, 1.0]);
    assert!(matches!(
        smallest_generalized_eigs(&a, &b, 1, None),
        Err(Error::InvalidMatrix(_))
    ));
}

#[test]
fn dense_cap() {
    let a = DMatrix::<f64>::identity(5, 5);
    assert!(matches!(
        generalized_eigen(&a, &a, None, 4),
        Err(Error::TooLarge { .. })
    ));
}

#[test]
fn complement_is_orthonormal() {
    let v = [3.0, -1.0, 2.0, 0.5];
    let q = orthogonal_complement(&v);
    let qtq = q.transpose() * &q;
    assert!((qtq - DMatrix::identity(3, 3)).norm() < 1e-14);
    let vt = DVector::from_column_slice(&v).transpose() * &q;
    assert!(vt.norm() < 1e-14);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn cg_solves_random_spd_systems(n in 2usize..30, seed in 0u64..1000) {
        let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
        let g = nalgebra::DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        let a = &g * g.transpose() + nalgebra::DMatrix::identity(n, n) * n as f64;
        let sa = SparseMatrix::from_dense(&a);
        let b = random_vec(n, seed + 1);
        let (x, rep) = cg_solve(&sa, &b, 1e-12, 10 * n).unwrap();
        prop_assert!(rep.converged);
        let r = &a * DVector::from_column_slice(&x) - DVector::from_column_slice(&b);
        prop_assert!(r.norm() <= 1e-11 * DVector::from_column_slice(&b).norm());
    }
}
