use std::f64::consts::PI;
use std::sync::Arc;

use approx::assert_relative_eq;
use compat_fem::mesh::EdgeOrientation;
use compat_fem::space::{make_space, parse_space_name, DofEntity, ElementBasis};
use compat_fem::{Error, Family, FeFunction, Mesh, Mesh1D, Mesh2D};
use rand::{Rng, SeedableRng};

fn quad(nx: usize, ny: usize) -> Arc<Mesh> {
    Arc::new(Mesh2D::periodic(1.0, 1.0, nx, ny).unwrap().into())
}

fn interval(ne: usize) -> Arc<Mesh> {
    Arc::new(Mesh1D::uniform(1.0, ne).unwrap().into())
}

#[test]
fn dimensions_1d() {
    let m = interval(10);
    assert_eq!(make_space(&m, Family::Cg, 1).unwrap().dim(), 10);
    assert_eq!(make_space(&m, Family::Cg, 3).unwrap().dim(), 30);
    assert_eq!(make_space(&m, Family::Dg, 0).unwrap().dim(), 10);
    assert_eq!(make_space(&m, Family::Dg, 2).unwrap().dim(), 30);
}

#[test]
fn dimensions_quad() {
    let m = quad(4, 4);
    let dims: Vec<usize> = [
        (Family::Cg, 1),
        (Family::Rt, 0),
        (Family::Dg, 0),
        (Family::Cg, 2),
        (Family::Rt, 1),
        (Family::Dg, 1),
    ]
    .iter()
    .map(|&(f, p)| make_space(&m, f, p).unwrap().dim())
    .collect();
    assert_eq!(dims, vec![16, 32, 16, 64, 128, 64]);
}

#[test]
fn unsupported_combinations() {
    let m1 = interval(4);
    let m2 = quad(2, 2);
    for (m, f, p) in [
        (&m1, Family::Rt, 0),
        (&m1, Family::Cg, 0),
        (&m1, Family::Dg, 4),
        (&m2, Family::Rt, 2),
        (&m2, Family::Cg, 3),
        (&m2, Family::Dg, 2),
    ] {
        assert!(matches!(make_space(m, f, p), Err(Error::UnsupportedSpace(_))));
    }
}

#[test]
fn tabulation_examples() {
    let cg1 = make_space(&interval(4), Family::Cg, 1).unwrap();
    let t = cg1.tabulate(&[[0.5, 0.0]]).unwrap();
    assert_relative_eq!(t.value(0, 0), 0.5);
    assert_relative_eq!(t.value(0, 1), 0.5);

    let dg0 = make_space(&quad(2, 2), Family::Dg, 0).unwrap();
    let t = dg0.tabulate(&[[0.3, 0.9]]).unwrap();
    assert_relative_eq!(t.value(0, 0), 1.0);

    // left-edge RT0 basis function dual to the outward flux
    let rt0 = make_space(&quad(2, 2), Family::Rt, 0).unwrap();
    let t = rt0.tabulate(&[[0.5, 0.5]]).unwrap();
    let v = t.vector_value(0, 0);
    assert_relative_eq!(v[0], -0.5, epsilon = 1e-14);
    assert_relative_eq!(v[1], 0.0, epsilon = 1e-14);
    // physically scaled by 1/dy on a 2x2 unit mesh, times sign -1
    let mut eb = ElementBasis::new(&rt0, &[[0.5, 0.5]]).unwrap();
    eb.reinit(0);
    assert_relative_eq!(eb.value(0, 0)[0], 1.0, epsilon = 1e-14);
}

#[test]
fn tabulate_rejects_outside_points() {
    let s = make_space(&quad(2, 2), Family::Cg, 1).unwrap();
    assert!(matches!(s.tabulate(&[[1.2, 0.5]]), Err(Error::Domain(_))));
    let s = make_space(&interval(2), Family::Cg, 1).unwrap();
    assert!(matches!(s.tabulate(&[[-0.1, 0.0]]), Err(Error::Domain(_))));
}

#[test]
fn partition_of_unity() {
    let mut rng = rand::rngs::StdRng::seed_from_u64(3);
    for (m, f, p) in [
        (interval(3), Family::Cg, 3),
        (interval(3), Family::Dg, 2),
        (quad(2, 2), Family::Cg, 2),
        (quad(2, 2), Family::Dg, 1),
    ] {
        let s = make_space(&m, f, p).unwrap();
        let pts: Vec<[f64; 2]> = (0..5)
            .map(|_| [rng.gen(), if m.dim() == 1 { 0.0 } else { rng.gen() }])
            .collect();
        let t = s.tabulate(&pts).unwrap();
        for q in 0..pts.len() {
            let sum: f64 = (0..t.n_basis()).map(|i| t.value(q, i)).sum();
            assert_relative_eq!(sum, 1.0, epsilon = 1e-13);
        }
    }
}

#[test]
fn rt_interpolation_recovers_each_basis_function() {
    for k in 0..=1 {
        let s = make_space(&quad(3, 2), Family::Rt, k).unwrap();
        for j in 0..s.dim() {
            let mut e = vec![0.0; s.dim()];
            e[j] = 1.0;
            let f = FeFunction::from_coeffs(&s, e.clone()).unwrap();
            let g = FeFunction::interpolate_vector(&s, |x| f.value_at(x)).unwrap();
            for (a, b) in g.coeffs().iter().zip(&e) {
                assert!((a - b).abs() < 1e-12, "RT{k} dof {j}");
            }
        }
    }
}

#[test]
fn dof_maps() {
    let m = quad(4, 4);
    let dg0 = make_space(&m, Family::Dg, 0).unwrap();
    assert_eq!(dg0.dof_map(5).unwrap(), (vec![5], vec![1.0]));
    assert!(dg0.dof_map(16).is_err());

    let rt0 = make_space(&m, Family::Rt, 0).unwrap();
    let mut signed = vec![0.0; rt0.dim()];
    let mut count = vec![0; rt0.dim()];
    for c in 0..16 {
        let (d, s) = rt0.dof_map(c).unwrap();
        for (g, sg) in d.iter().zip(s) {
            signed[*g] += sg;
            count[*g] += 1;
        }
    }
    assert!(count.iter().all(|&c| c == 2));
    assert!(signed.iter().all(|&s| s == 0.0));

    let cg1 = make_space(&m, Family::Cg, 1).unwrap();
    let mut count = vec![0; cg1.dim()];
    for c in 0..16 {
        for g in cg1.dof_map(c).unwrap().0 {
            count[g] += 1;
        }
    }
    assert!(count.iter().all(|&c| c == 4));
}

#[test]
fn interpolation_examples() {
    let m = quad(4, 4);
    let dg0 = make_space(&m, Family::Dg, 0).unwrap();
    let f = FeFunction::interpolate_scalar(&dg0, |_| 2.5).unwrap();
    assert!(f.coeffs().iter().all(|&c| c == 2.5));

    let rt0 = make_space(&m, Family::Rt, 0).unwrap();
    let u = FeFunction::interpolate_vector(&rt0, |_| [1.0, 0.0]).unwrap();
    let mesh = m.as_quad().unwrap();
    for (e, edge) in mesh.edges().iter().enumerate() {
        let expected = match edge.orientation {
            EdgeOrientation::Vertical => 0.25,
            EdgeOrientation::Horizontal => 0.0,
        };
        assert_relative_eq!(u.coeffs()[e], expected, epsilon = 1e-14);
    }

    let cg1 = make_space(&interval(4), Family::Cg, 1).unwrap();
    let s = FeFunction::interpolate_scalar(&cg1, |x| (2.0 * PI * x[0]).sin()).unwrap();
    for (c, e) in s.coeffs().iter().zip([0.0, 1.0, 0.0, -1.0]) {
        assert_relative_eq!(*c, e, epsilon = 1e-14);
    }
}

#[test]
fn rank_mismatch_is_rejected() {
    let m = quad(2, 2);
    let rt0 = make_space(&m, Family::Rt, 0).unwrap();
    assert!(FeFunction::interpolate_scalar(&rt0, |_| 1.0).is_err());
    let cg1 = make_space(&m, Family::Cg, 1).unwrap();
    assert!(FeFunction::interpolate_vector(&cg1, |_| [1.0, 0.0]).is_err());
}

#[test]
fn evaluation_examples() {
    let cg1 = make_space(&quad(3, 3), Family::Cg, 1).unwrap();
    let ones = FeFunction::constant(&cg1, 1.0).unwrap();
    for v in ones.evaluate_scalar(4, &[[0.1, 0.7], [0.5, 0.5]]).unwrap() {
        assert_relative_eq!(v, 1.0, epsilon = 1e-14);
    }

    let cg1 = make_space(&interval(8), Family::Cg, 1).unwrap();
    let zigzag: Vec<f64> = (0..8).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
    let z = FeFunction::from_coeffs(&cg1, zigzag).unwrap();
    assert_relative_eq!(z.evaluate_scalar(3, &[[0.0, 0.0]]).unwrap()[0], -1.0);
    assert_relative_eq!(z.evaluate_scalar(3, &[[1.0, 0.0]]).unwrap()[0], 1.0);
}

fn poly_value(c: &[[f64; 4]; 4], x: [f64; 2], px: usize, py: usize) -> f64 {
    let mut s = 0.0;
    for a in 0..=px {
        for b in 0..=py {
            s += c[a][b] * x[0].powi(a as i32) * x[1].powi(b as i32);
        }
    }
    s
}

#[test]
fn dg_reproduces_tensor_polynomials() {
    let mut rng = rand::rngs::StdRng::seed_from_u64(11);
    for (mesh, p) in [(quad(3, 2), 0), (quad(3, 2), 1), (interval(5), 2), (interval(5), 3)] {
        let s = make_space(&mesh, Family::Dg, p).unwrap();
        let is_1d = mesh.dim() == 1;
        let py = if is_1d { 0 } else { p };
        let mut c = [[0.0; 4]; 4];
        c.iter_mut().flatten().for_each(|v| *v = rng.gen_range(-1.0..1.0));
        let poly = |x: [f64; 2]| poly_value(&c, x, p, py);
        let f = FeFunction::interpolate_scalar(&s, poly).unwrap();
        for cell in 0..mesh.n_cells() {
            let geom = mesh.cell_geometry(cell);
            let xi = [rng.gen(), if is_1d { 0.0 } else { rng.gen() }];
            let v = f.evaluate_scalar(cell, &[xi]).unwrap()[0];
            assert!((v - poly(geom.to_physical(xi))).abs() < 1e-12);
        }
    }
}

#[test]
fn cg_interpolation_is_a_projection() {
    // Interpolating a CG function's own point values recovers it exactly.
    let mut rng = rand::rngs::StdRng::seed_from_u64(12);
    for (mesh, p) in [(quad(3, 4), 1), (quad(3, 4), 2), (interval(4), 3)] {
        let s = make_space(&mesh, Family::Cg, p).unwrap();
        let coeffs: Vec<f64> = (0..s.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let f = FeFunction::from_coeffs(&s, coeffs).unwrap();
        let g = FeFunction::interpolate_scalar(&s, |x| f.value_at(x)[0]).unwrap();
        for (a, b) in f.coeffs().iter().zip(g.coeffs()) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}

#[test]
fn rt_reproduces_its_polynomial_space() {
    let mut rng = rand::rngs::StdRng::seed_from_u64(5);
    for k in 0..=1 {
        let mesh = quad(1, 1);
        let s = make_space(&mesh, Family::Rt, k).unwrap();
        // single periodic cell: a field from the local space that is also
        // normal-continuous across the periodic identification
        let mut cx = [[0.0; 4]; 4];
        let mut cy = [[0.0; 4]; 4];
        cx.iter_mut().flatten().for_each(|v| *v = rng.gen_range(-1.0..1.0));
        cy.iter_mut().flatten().for_each(|v| *v = rng.gen_range(-1.0..1.0));
        // make u_x(0,y) == u_x(1,y) and u_y(x,0) == u_y(x,1)
        if k == 0 {
            cx[1][0] = 0.0;
            cy[0][1] = 0.0;
        } else {
            for b in 0..=1 {
                cx[2][b] = -cx[1][b];
            }
            for a in 0..=1 {
                cy[a][2] = -cy[a][1];
            }
        }
        let field = |x: [f64; 2]| [poly_value(&cx, x, k + 1, k), poly_value(&cy, x, k, k + 1)];
        let u = FeFunction::interpolate_vector(&s, field).unwrap();
        for _ in 0..5 {
            let xi = [rng.gen(), rng.gen()];
            let v = u.evaluate(0, &[xi]).unwrap()[0];
            let e = field(xi);
            assert!((v[0] - e[0]).abs() < 1e-12 && (v[1] - e[1]).abs() < 1e-12);
        }
    }
}

#[test]
fn dof_entities() {
    let m = quad(2, 2);
    let cg2 = make_space(&m, Family::Cg, 2).unwrap();
    assert_eq!(cg2.dof_entity(0), DofEntity::Vertex);
    assert_eq!(cg2.dof_entity(1), DofEntity::Edge);
    assert_eq!(cg2.dof_entity(5), DofEntity::Cell);
    let rt1 = make_space(&m, Family::Rt, 1).unwrap();
    assert_eq!(rt1.dof_entity(15), DofEntity::Edge);
    assert_eq!(rt1.dof_entity(16), DofEntity::Cell);
}

#[test]
fn space_names() {
    assert_eq!(parse_space_name("rt0").unwrap(), (Family::Rt, 0));
    assert_eq!(parse_space_name("CG2").unwrap(), (Family::Cg, 2));
    assert_eq!(parse_space_name(" dg1 ").unwrap(), (Family::Dg, 1));
    for bad in ["nd0", "cg", "1", "dgx"] {
        assert!(matches!(parse_space_name(bad), Err(Error::InvalidArgument(_))), "{bad}");
    }
}
