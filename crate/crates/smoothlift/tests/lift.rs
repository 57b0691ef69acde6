use std::sync::Arc;

use smoothlift::catalog::{build, sphere_embedding, EntryId};
use smoothlift::lift::{compose_submersion, fiber_product, product};
use smoothlift::manifold::{FdMap, FnMap, ManifoldDesc, SmoothMap};
use smoothlift::numerics::{gaussian_vector, rng, Matrix, TolerancePolicy, Vector};
use smoothlift::LiftError;

fn tol() -> TolerancePolicy {
    TolerancePolicy::default()
}

/// `(φ(c(t)) - 2φ(y) + φ(c(-t))) / t²` along the canonical curve, which tends to `Q(v)`.
fn q_by_differences(lift: &smoothlift::lift::Lift, y: &Vector, v: &Vector) -> Vector {
    let t = 1e-4;
    let plus = lift.value(&lift.curve(y, v, t).unwrap()).unwrap();
    let minus = lift.value(&lift.curve(y, v, -t).unwrap()).unwrap();
    (plus - lift.value(y).unwrap() * 2.0 + minus) / (t * t)
}

#[test]
fn manifolds_have_orthonormal_tangents_and_stay_on_curves() {
    let h = FnMap::new(
        3,
        1,
        |y| Vector::from_vec(vec![y[0] * y[0] + 2.0 * y[1] * y[1] + 3.0 * y[2] * y[2] - 1.0]),
        |y| Matrix::from_row_slice(1, 3, &[2.0 * y[0], 4.0 * y[1], 6.0 * y[2]]),
        |_, v| Vector::from_vec(vec![2.0 * v[0] * v[0] + 4.0 * v[1] * v[1] + 6.0 * v[2] * v[2]]),
    );
    let manifolds = [
        ManifoldDesc::Chart { dim: 3 },
        ManifoldDesc::Sphere(3),
        ManifoldDesc::Stiefel(4, 2),
        ManifoldDesc::Embedded { ambient: 3, h: Arc::new(h) },
        ManifoldDesc::Product(vec![ManifoldDesc::Sphere(1), ManifoldDesc::Stiefel(3, 2)]),
    ];
    for m in manifolds {
        for seed in 0..5 {
            let y = m.random_point(seed, &tol()).unwrap();
            m.check_point(&y).unwrap();
            let b = m.tangent_basis(&y, &tol()).unwrap();
            assert_eq!(b.ncols(), m.dim(), "{m:?}");
            assert!((b.transpose() * &b - Matrix::identity(b.ncols(), b.ncols())).norm() < 1e-10);
            if m.codim() > 0 {
                assert!((m.constraint_jacobian(&y) * &b).norm() < 1e-10, "{m:?}");
            }
            let v = m.random_tangent(&y, seed, &tol()).unwrap();
            for t in [1e-1, 1e-2] {
                let c = m.canonical_curve(&y, &v, t, &tol()).unwrap();
                assert!(m.constraint_value(&c).norm() < 1e-12, "{m:?}");
            }
            // The canonical curve agrees with y + t v to second order along the tangent.
            let t = 1e-3;
            let c = m.canonical_curve(&y, &v, t, &tol()).unwrap();
            let off = m.project_tangent(&y, &(c - &y - &v * t), &tol()).unwrap();
            assert!(off.norm() < 1e-7, "{m:?}: {}", off.norm());
        }
    }
}

#[test]
fn product_lift_is_blockwise() {
    let a = build(&EntryId::Hadamard { n: 3 }).unwrap();
    let b = build(&EntryId::NodalCubic).unwrap();
    let prod = product(&[a.lift.clone(), b.lift.clone()]).unwrap();
    let ya = a.sample_point("boundary", 1).unwrap();
    let yb = b.sample_point("node", 1).unwrap();
    let y = Vector::from_iterator(6, ya.iter().chain(yb.iter()).copied());
    let lq = prod.lq(&y).unwrap();
    let (la, lb) = (a.lift.lq(&ya).unwrap(), b.lift.lq(&yb).unwrap());
    assert_eq!(lq.rank, la.rank + lb.rank);
    assert_eq!(lq.tangent_dim(), la.tangent_dim() + lb.tangent_dim());
    let v = prod.manifold.random_tangent(&y, 4, &tol()).unwrap();
    let (va, vb) = (v.rows(0, 3).into_owned(), v.rows(3, 3).into_owned());
    let q = lq.q(&v);
    assert!((q.rows(0, 3) - la.q(&va)).norm() < 1e-12);
    assert!((q.rows(3, 2) - lb.q(&vb)).norm() < 1e-12);
}

#[test]
fn composition_follows_the_chain_rule() {
    let had = build(&EntryId::Hadamard { n: 3 }).unwrap();
    // Normalization R^3 \ {0} -> S^2, a submersion onto the sphere.
    let norm_map = FdMap::new(3, 3, |z| z / z.norm());
    let comp = compose_submersion(&had.lift, ManifoldDesc::Chart { dim: 3 }, Arc::new(norm_map)).unwrap();
    let z = Vector::from_vec(vec![0.3, -1.2, 0.7]);
    let x = comp.value(&z).unwrap();
    let y = &z / z.norm();
    assert!((x - y.component_mul(&y)).norm() < 1e-14);
    let lq = comp.lq(&z).unwrap();
    // The radial direction is in the kernel.
    let radial = lq.l.clone() * (lq.basis.transpose() * &z);
    assert!(radial.norm() < 1e-8);
    assert_eq!(lq.rank, 2);
    let v = gaussian_vector(&mut rng(1), 3);
    let q = lq.q(&v);
    let fd = q_by_differences(&comp, &z, &v);
    assert!((q - &fd).norm() < 1e-4 * fd.norm().max(1.0));

    // A projection onto a coordinate plane is not a submersion onto the sphere everywhere.
    let flat = FnMap::linear(Matrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0]));
    let bad = compose_submersion(&had.lift, ManifoldDesc::Sphere(2), Arc::new(flat)).unwrap();
    assert!(matches!(bad.lq(&Vector::from_vec(vec![1.0, 0.0, 0.0])), Err(LiftError::NotSubmersion { .. }) | Err(LiftError::InvalidInput(_))));
}

#[test]
fn fiber_product_parametrizes_the_preimage() {
    let had = build(&EntryId::Hadamard { n: 3 }).unwrap();
    let a = Matrix::from_row_slice(3, 3, &[2.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
    let fib = fiber_product("fiber", Arc::new(FnMap::linear(a.clone())), &had.lift).unwrap();
    for seed in 0..5 {
        let yn = ManifoldDesc::Sphere(2).random_point(seed, &tol()).unwrap();
        let x = a.clone().try_inverse().unwrap() * yn.component_mul(&yn);
        let z = Vector::from_iterator(6, x.iter().chain(yn.iter()).copied());
        fib.manifold.check_point(&z).unwrap();
        assert!((fib.value(&z).unwrap() - &x).norm() < 1e-14);
        let lq = fib.lq(&z).unwrap();
        assert_eq!(lq.tangent_dim(), 2);
        let v = fib.manifold.random_tangent(&z, seed, &tol()).unwrap();
        let fd = q_by_differences(&fib, &z, &v);
        assert!((lq.q(&v) - &fd).norm() < 1e-5 * fd.norm().max(1.0));
        // Curves stay in the fiber product.
        let c = fib.curve(&z, &v, 0.1).unwrap();
        let (xc, yc) = (c.rows(0, 3).into_owned(), c.rows(3, 3).into_owned());
        assert!((&a * xc - yc.component_mul(&yc)).norm() < 1e-10);
    }
}

#[test]
fn lq_matches_differences_on_the_catalog() {
    for id in EntryId::defaults() {
        let e = build(&id).unwrap();
        for regime in e.regimes() {
            let y = e.sample_point(regime, 2).unwrap();
            let lq = e.lift.lq(&y).unwrap();
            let v = e.lift.manifold.random_tangent(&y, 2, &tol()).unwrap();
            let fd = q_by_differences(&e.lift, &y, &v);
            let err = (lq.q(&v) - &fd).norm();
            assert!(err < 1e-5 * fd.norm().max(1.0), "{} {regime}: {err:e}", id.name());
            let t = 1e-6;
            let d = (e.lift.value(&(&y + &v * t)).unwrap() - e.lift.value(&(&y - &v * t)).unwrap()) / (2.0 * t);
            assert!((e.lift.map.jacobian(&y) * &v - d).norm() < 1e-6 * v.norm().max(1.0), "{} {regime}", id.name());
        }
    }
}

#[test]
fn lifts_reject_mismatched_dimensions_and_foreign_points() {
    let map: Arc<dyn SmoothMap> = Arc::new(FnMap::identity(3));
    assert!(smoothlift::lift::Lift::new("bad", ManifoldDesc::Sphere(3), map).is_err());
    let s = sphere_embedding(3).unwrap();
    assert!(s.lq(&Vector::from_vec(vec![1.0, 1.0, 0.0])).is_err());
    let w = Vector::from_vec(vec![1.0, 0.0, 0.0]);
    let lq = s.lq(&w).unwrap();
    assert!(matches!(lq.qform(&Vector::from_vec(vec![0.0, 1.0, 0.0])), Err(LiftError::NotCoexact { .. })));
}
