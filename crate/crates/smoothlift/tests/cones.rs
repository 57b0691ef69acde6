use smoothlift::cones::{empirical_tangents, nodal_param, project_psd_rank, project_rank, SetDesc};
use smoothlift::numerics::{gaussian_matrix, mat_of, rng, sym_eig, vec_of, Matrix, TolerancePolicy, Vector};

fn tol() -> TolerancePolicy {
    TolerancePolicy::default()
}

fn v(xs: &[f64]) -> Vector {
    Vector::from_column_slice(xs)
}

#[test]
fn simplex_vertex_cone_and_gaps() {
    let set = SetDesc::Simplex(3);
    let cone = set.cone_at(&v(&[1.0, 0.0, 0.0]), &tol()).unwrap();
    assert!(cone.member(&v(&[-1.0, 0.5, 0.5]), 1e-12).inside);
    assert!(!cone.member(&v(&[1.0, -0.5, -0.5]), 1e-12).inside);
    // Dual: w_i >= w_1 for the active coordinates.
    assert!(cone.stationarity_gap(&v(&[0.0, 1.0, 2.0])).abs() < 1e-12);
    let gap = cone.stationarity_gap(&v(&[0.0, -1.0, 0.0]));
    assert!((gap + 0.5f64.sqrt()).abs() < 1e-12, "{gap}");
    assert!(set.cone_at(&v(&[0.5, 0.5, 0.5]), &tol()).is_err());
}

#[test]
fn ball_cones() {
    let set = SetDesc::Ball(2);
    let inner = set.cone_at(&v(&[0.3, 0.4]), &tol()).unwrap();
    assert!(inner.as_subspace().is_some());
    let edge = set.cone_at(&v(&[0.6, 0.8]), &tol()).unwrap();
    assert!((edge.stationarity_gap(&v(&[0.6, 0.8])) + 1.0).abs() < 1e-12);
    assert!(edge.stationarity_gap(&v(&[-0.6, -0.8])).abs() < 1e-12);
}

#[test]
fn nodal_cone_is_a_union_of_two_lines() {
    let cone = SetDesc::NodalCubic.cone_at(&nodal_param(1.0), &tol()).unwrap();
    assert_eq!(cone.kind(), "union");
    let s = 0.5f64.sqrt();
    for d in [v(&[s, s]), v(&[s, -s]), v(&[-s, s])] {
        assert!(cone.violation(&d) < 1e-12);
    }
    assert!(cone.violation(&v(&[1.0, 0.0])) > 0.1);
    // Only w = 0 is dual to both lines.
    assert!((cone.stationarity_gap(&v(&[-1.0, -1.0])) + 2f64.sqrt()).abs() < 1e-12);
    let smooth = SetDesc::NodalCubic.cone_at(&nodal_param(0.3), &tol()).unwrap();
    assert_eq!(smooth.dim(), 2);
    assert!(smooth.as_subspace().map(|b| b.ncols()) == Some(1));
}

#[test]
fn bounded_rank_cone_and_projection() {
    let x = mat_of(&[1.0, 2.0, 0.0], 3, 1) * mat_of(&[0.0, 1.0, 1.0], 1, 3);
    let set = SetDesc::BoundedRank { m: 3, n: 3, r: 1 };
    let cone = set.cone_at(&vec_of(&x), &tol()).unwrap();
    // At a rank-r point the cone is the tangent space of the rank-r manifold, of dimension 5.
    let z = Vector::from_iterator(9, (0..9).map(|i| i as f64 - 3.0));
    let p = cone.project(&z);
    assert!((cone.project(&p) - &p).norm() < 1e-12);
    let dirs = cone.sample_directions(40, 0);
    assert_eq!(smoothlift::cones::span_dimension(&dirs, &tol()).unwrap(), 5);

    let a = gaussian_matrix(&mut rng(0), 4, 3);
    let p2 = project_rank(&a, 2).unwrap();
    assert_eq!(smoothlift::numerics::numerical_rank(&p2, &tol()).unwrap(), 2);
    let s = a.singular_values();
    assert!(((&a - &p2).norm() - s.min()).abs() < 1e-12);
}

#[test]
fn psd_rank_projection() {
    let g = gaussian_matrix(&mut rng(3), 4, 4);
    let z = (&g + g.transpose()) * 0.5;
    let p = project_psd_rank(&z, 2).unwrap();
    let (vals, _) = sym_eig(&p).unwrap();
    assert!(vals.iter().all(|&l| l > -1e-12));
    assert!(vals.iter().filter(|&&l| l > 1e-10).count() <= 2);
    assert!((&p - p.transpose()).norm() < 1e-12);
}

#[test]
fn empirical_tangents_lie_in_the_cone() {
    let cases: Vec<(SetDesc, Vector)> = vec![
        (SetDesc::Simplex(3), v(&[0.5, 0.5, 0.0])),
        (SetDesc::Orthant(3), v(&[0.0, 1.0, 0.0])),
        (SetDesc::Disk(2), v(&[1.0, 0.0])),
        (SetDesc::NodalCubic, nodal_param(1.0)),
        (SetDesc::PsdBoundedRank { n: 3, r: 2 }, vec_of(&Matrix::from_diagonal(&v(&[1.0, 0.0, 0.0])))),
    ];
    for (set, x) in cases {
        let cone = set.cone_at(&x, &tol()).unwrap();
        for d in empirical_tangents(&set, &x, 100, 1).unwrap() {
            assert!(cone.violation(&d) < 2e-2, "{set:?}: {:e}", cone.violation(&d));
        }
    }
}
