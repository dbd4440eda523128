use std::f64::consts::PI;
use std::sync::Arc;

use compat_fem::diagnostics::{
    conserved_quantities, conserved_quantities_over, dispersion_spectrum_1d, dispersion_spectrum_1d_pencil,
    dof_ratio_audit, format_ratio, infsup_constant, infsup_constant_schur, infsup_constants, l2_error, SpacePair,
};
use compat_fem::models::{SolverSettings, SweModel, SweParams, SweState};
use compat_fem::space::make_space;
use compat_fem::{Error, Family, FeFunction, Mesh, Mesh2D};
use proptest::prelude::*;

fn quad(nx: usize, ny: usize) -> Arc<Mesh> {
    Arc::new(Mesh::from(Mesh2D::periodic(1.0, 1.0, nx, ny).unwrap()))
}

fn model(n: usize, p: usize, f: f64) -> SweModel {
    let params = SweParams {
        f,
        g: 9.81,
        mean_depth: 1.0,
        apvm_tau: 0.0,
    };
    SweModel::new(quad(n, n), p, params, SolverSettings::default()).unwrap()
}

#[test]
fn rest_state_integrals() {
    let (f, g, depth) = (3.0, 9.81, 2.0);
    let params = SweParams {
        f,
        g,
        mean_depth: depth,
        apvm_tau: 0.0,
    };
    let m = SweModel::new(quad(4, 4), 1, params, SolverSettings::default()).unwrap();
    let s = SweState {
        u: FeFunction::zeros(m.v1()),
        h: FeFunction::constant(m.v2(), depth).unwrap(),
        t: 0.5,
    };
    let q = FeFunction::constant(m.v0(), f / depth).unwrap();
    let r = conserved_quantities(&s, &q, &params).unwrap();
    assert!((r.mass - depth).abs() <= 1e-13);
    assert!((r.energy - g * depth * depth / 2.0).abs() <= 1e-12);
    assert!((r.total_vorticity - f).abs() <= 1e-13);
    assert!((r.enstrophy - f * f / depth).abs() <= 1e-12);
    assert_eq!(r.time, 0.5);
    assert!(r.is_finite());
}

fn wavy_state(m: &SweModel) -> (SweState, FeFunction) {
    let u = FeFunction::interpolate_vector(m.v1(), |x| {
        [0.3 * (2.0 * PI * x[1]).sin(), 0.2 * (2.0 * PI * x[0]).cos()]
    })
    .unwrap();
    let h = FeFunction::interpolate_scalar(m.v2(), |x| 1.0 + 0.1 * (2.0 * PI * (x[0] + x[1])).cos()).unwrap();
    let q = m.diagnose_q(&u, &h).unwrap();
    (SweState { u, h, t: 0.0 }, q)
}

#[test]
fn doubling_depth_doubles_mass() {
    let m = model(4, 2, 1.0);
    let (s, q) = wavy_state(&m);
    let r1 = conserved_quantities(&s, &q, m.params()).unwrap();
    let h2 = FeFunction::from_coeffs(m.v2(), s.h.coeffs().iter().map(|h| 2.0 * h).collect()).unwrap();
    let s2 = SweState { h: h2, ..s };
    let r2 = conserved_quantities(&s2, &q, m.params()).unwrap();
    assert_eq!(r2.mass, 2.0 * r1.mass);
}

#[test]
fn integrals_match_refined_quadrature() {
    for p in [1, 2] {
        let m = model(5, p, 2.0);
        let (s, q) = wavy_state(&m);
        let cells: Vec<usize> = (0..25).collect();
        let a = conserved_quantities(&s, &q, m.params()).unwrap();
        let b = conserved_quantities_over(&s, &q, m.params(), &cells, 2).unwrap();
        for (x, y) in [
            (a.mass, b.mass),
            (a.energy, b.energy),
            (a.total_vorticity, b.total_vorticity),
            (a.enstrophy, b.enstrophy),
        ] {
            assert!((x - y).abs() <= 1e-13 * y.abs().max(1.0), "p={p}: {x} vs {y}");
        }
    }
}

#[test]
fn inconsistent_spaces_are_rejected() {
    let m = model(4, 1, 1.0);
    let (s, _) = wavy_state(&m);
    let other = make_space(&quad(5, 4), Family::Cg, 1).unwrap();
    let q = FeFunction::zeros(&other);
    assert!(conserved_quantities(&s, &q, m.params()).is_err());
}

#[test]
fn compatible_infsup_is_one() {
    for pair in [SpacePair::Cg1Dg0, SpacePair::Cg2Dg1] {
        for beta in infsup_constants(pair, &[8, 16, 32]).unwrap() {
            assert!((beta - 1.0).abs() <= 1e-8, "{pair}: {beta}");
        }
    }
}

#[test]
fn colocated_infsup_vanishes() {
    assert!(infsup_constant(SpacePair::ColocatedCg1, 16).unwrap() <= 1e-10);
}

#[test]
fn schur_pencil_agrees_with_svd() {
    for pair in [SpacePair::Cg1Dg0, SpacePair::Cg2Dg1, SpacePair::Rt0Dg0] {
        let a = infsup_constant(pair, 6).unwrap();
        let b = infsup_constant_schur(pair, 6).unwrap();
        assert!((a - b).abs() <= 1e-8, "{pair}: {a} vs {b}");
    }
}

#[test]
fn quad_infsup_is_mesh_independent() {
    let vals = infsup_constants(SpacePair::Rt0Dg0, &[4, 8]).unwrap();
    assert!(vals.iter().all(|&v| v > 0.1));
    assert!((vals[0] - vals[1]).abs() <= 0.05 * vals[0], "{vals:?}");
}

#[test]
fn infsup_dense_cap() {
    assert!(matches!(
        infsup_constant(SpacePair::Cg1Dg0, 10_000),
        Err(Error::TooLarge { .. })
    ));
}

#[test]
fn compatible_spectrum_has_one_zero() {
    let r = dispersion_spectrum_1d(SpacePair::Cg1Dg0, 16, 1.0).unwrap();
    assert_eq!(r.n_zero, 1);
    assert_eq!(r.label, "cg1-dg0");
    assert!(r.frequencies.windows(2).all(|w| w[0] <= w[1]));
    assert!(r.frequencies[1..].iter().all(|&w| w > 1e-3));
}

#[test]
fn colocated_spectrum_has_zigzag_zero() {
    let r = dispersion_spectrum_1d(SpacePair::ColocatedCg1, 16, 1.0).unwrap();
    assert!(r.n_zero >= 2, "{:?}", &r.frequencies[..4]);
}

#[test]
fn lowest_frequency_is_accurate() {
    for ne in [8, 16, 32] {
        let r = dispersion_spectrum_1d(SpacePair::Cg1Dg0, ne, 1.0).unwrap();
        let exact = 2.0 * PI;
        let bound = (2.0 * PI / ne as f64).powi(2);
        let w = r.lowest_nonzero().unwrap();
        assert!((w - exact).abs() / exact <= bound, "ne={ne}: {w}");
    }
}

#[test]
fn dispersion_methods_agree() {
    for pair in [SpacePair::Cg1Dg0, SpacePair::Cg2Dg1, SpacePair::ColocatedCg1] {
        let a = dispersion_spectrum_1d(pair, 12, 2.0).unwrap();
        let b = dispersion_spectrum_1d_pencil(pair, 12, 2.0).unwrap();
        assert_eq!(a.n_zero, b.n_zero, "{pair}");
        let top = a.frequencies.last().copied().unwrap();
        for (x, y) in a.frequencies.iter().zip(&b.frequencies) {
            assert!((x - y).abs() <= 1e-6 * top);
        }
    }
}

#[test]
fn quad_pairs_have_no_1d_spectrum() {
    assert!(dispersion_spectrum_1d(SpacePair::Rt0Dg0, 8, 1.0).is_err());
}

#[test]
fn pair_labels_roundtrip() {
    for pair in SpacePair::ALL {
        assert_eq!(pair.label().parse::<SpacePair>().unwrap(), pair);
    }
    assert!("cg3-dg9".parse::<SpacePair>().is_err());
}

#[test]
fn unbalanced_state_has_positive_residual() {
    let m = model(6, 1, 2.0);
    let s = SweState {
        u: FeFunction::zeros(m.v1()),
        h: FeFunction::interpolate_scalar(m.v2(), |x| (2.0 * PI * x[0]).sin()).unwrap(),
        t: 0.0,
    };
    assert!(m.balance_residual(&s).unwrap() > 1e-3);
}

#[test]
fn scaling_f_with_h_keeps_balance() {
    let psi_fn = |x: [f64; 2]| (2.0 * PI * x[0]).cos() * (4.0 * PI * x[1]).sin();
    for f in [1.0, 2.0] {
        let m = model(8, 2, f);
        let psi = FeFunction::interpolate_scalar(m.v0(), psi_fn).unwrap();
        let s = m.geostrophic_init(&psi).unwrap();
        assert!(m.balance_residual(&s).unwrap() <= 1e-10);
    }
}

#[test]
fn audit_examples() {
    let mesh = quad(4, 4);
    let rt0 = make_space(&mesh, Family::Rt, 0).unwrap();
    let dg0 = make_space(&mesh, Family::Dg, 0).unwrap();
    assert_eq!(format_ratio(&dof_ratio_audit(&rt0, &dg0).unwrap()), "ratio = 2/1");
    let cg1 = make_space(&mesh, Family::Cg, 1).unwrap();
    let r = dof_ratio_audit(&cg1, &dg0).unwrap();
    assert_eq!(format_ratio(&r), "ratio = 1/1");
    let other = make_space(&quad(4, 5), Family::Dg, 0).unwrap();
    assert!(dof_ratio_audit(&rt0, &other).is_err());
}

#[test]
fn l2_error_of_exact_interpolant() {
    let m = model(4, 2, 1.0);
    let h = FeFunction::interpolate_scalar(m.v2(), |x| 1.0 + 2.0 * x[0] - x[1]).unwrap();
    assert!(l2_error(&h, |x| [1.0 + 2.0 * x[0] - x[1], 0.0], 1) <= 1e-13);
    assert!((l2_error(&h, |x| [2.0 + 2.0 * x[0] - x[1], 0.0], 1) - 1.0).abs() <= 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn dof_ratio_is_two_on_any_grid(nx in 1usize..9, ny in 1usize..9, deg in 0usize..2) {
        let mesh = quad(nx, ny);
        let v1 = make_space(&mesh, Family::Rt, deg).unwrap();
        let v2 = make_space(&mesh, Family::Dg, deg).unwrap();
        let r = dof_ratio_audit(&v1, &v2).unwrap();
        prop_assert_eq!((*r.numer(), *r.denom()), (2, 1));
    }
}
