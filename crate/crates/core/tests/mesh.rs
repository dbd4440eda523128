use approx::assert_relative_eq;
use compat_fem::mesh::{build_interval_mesh, build_periodic_quad_mesh, parse_mesh_shape, BOTTOM, LEFT, RIGHT, TOP};
use compat_fem::{Error, Mesh, Mesh1D};
use proptest::prelude::*;

#[test]
fn interval_examples() {
    let m = build_interval_mesh(1.0, 10).unwrap();
    assert_eq!(m.n_elements(), 10);
    assert_relative_eq!(m.width(3), 0.1, epsilon = 1e-15);
    assert_eq!(m.element_vertices(9), [9, 0]);

    let single = build_interval_mesh(1.0, 1).unwrap();
    assert_eq!(single.element_vertices(0), [0, 0]);

    let m = build_interval_mesh(2.0 * std::f64::consts::PI, 16).unwrap();
    assert_relative_eq!(m.width(0), std::f64::consts::PI / 8.0, epsilon = 1e-15);
}

#[test]
fn interval_rejects_bad_arguments() {
    assert!(matches!(build_interval_mesh(0.0, 4), Err(Error::InvalidArgument(_))));
    assert!(matches!(build_interval_mesh(-1.0, 4), Err(Error::InvalidArgument(_))));
    assert!(matches!(build_interval_mesh(1.0, 0), Err(Error::InvalidArgument(_))));
    assert!(Mesh1D::from_widths(&[0.5, 0.0]).is_err());
}

#[test]
fn nonuniform_widths_sum_to_length() {
    let m = Mesh1D::from_widths(&[0.1, 0.3, 0.2, 0.4]).unwrap();
    assert_relative_eq!(m.length(), 1.0, epsilon = 1e-15);
    assert!(m.vertex_coordinates().windows(2).all(|w| w[0] < w[1]));
    assert!(!m.is_uniform());
}

#[test]
fn quad_counts() {
    let m = build_periodic_quad_mesh(1.0, 1.0, 4, 4).unwrap();
    assert_eq!((m.n_cells(), m.n_edges(), m.n_vertices()), (16, 32, 16));

    let m = build_periodic_quad_mesh(2.0, 1.0, 8, 4).unwrap();
    assert_eq!(m.n_cells(), 32);
    assert_eq!(m.cell_size(), [0.25, 0.25]);
}

#[test]
fn single_cell_is_self_periodic() {
    let m = build_periodic_quad_mesh(1.0, 1.0, 1, 1).unwrap();
    assert_eq!((m.n_cells(), m.n_edges(), m.n_vertices()), (1, 2, 1));
    let e = m.cell_edges(0);
    let s = m.cell_edge_signs(0);
    assert_eq!(e[LEFT], e[RIGHT]);
    assert_eq!(e[BOTTOM], e[TOP]);
    assert_eq!(s[LEFT] + s[RIGHT], 0);
    assert_eq!(s[BOTTOM] + s[TOP], 0);
}

#[test]
fn quad_rejects_bad_arguments() {
    assert!(build_periodic_quad_mesh(0.0, 1.0, 2, 2).is_err());
    assert!(build_periodic_quad_mesh(1.0, 1.0, 0, 2).is_err());
}

#[test]
fn locate_wraps_periodically() {
    let mesh = Mesh::from(build_periodic_quad_mesh(1.0, 2.0, 4, 4).unwrap());
    let (c, xi) = mesh.locate([1.3, -0.25]);
    assert_eq!(c, 3 * 4 + 1);
    assert_relative_eq!(xi[0], 0.2, epsilon = 1e-12);
    assert_relative_eq!(xi[1], 0.5, epsilon = 1e-12);
}

proptest! {
    #[test]
    fn every_edge_has_two_opposite_incidences(nx in 1usize..7, ny in 1usize..7) {
        let m = build_periodic_quad_mesh(1.0, 1.5, nx, ny).unwrap();
        let mut count = vec![0usize; m.n_edges()];
        let mut signed = vec![0i32; m.n_edges()];
        for c in 0..m.n_cells() {
            for (e, s) in m.cell_edges(c).iter().zip(m.cell_edge_signs(c)) {
                count[*e] += 1;
                signed[*e] += s as i32;
            }
        }
        prop_assert!(count.iter().all(|&k| k == 2));
        prop_assert!(signed.iter().all(|&s| s == 0));
    }

    #[test]
    fn construction_is_deterministic(nx in 1usize..6, ny in 1usize..6) {
        let a = build_periodic_quad_mesh(1.0, 1.0, nx, ny).unwrap();
        let b = build_periodic_quad_mesh(1.0, 1.0, nx, ny).unwrap();
        prop_assert_eq!(a, b);
    }
}

#[test]
fn mesh_shapes() {
    let m = parse_mesh_shape("4x3").unwrap();
    assert_eq!((m.dim(), m.n_cells()), (2, 12));
    let m = parse_mesh_shape(" 7 ").unwrap();
    assert_eq!((m.dim(), m.n_cells()), (1, 7));
    for bad in ["", "4x", "x4", "4x4x4", "-3", "0"] {
        assert!(parse_mesh_shape(bad).is_err(), "{bad}");
    }
}
