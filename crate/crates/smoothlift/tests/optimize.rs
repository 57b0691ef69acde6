use smoothlift::catalog::{build, sphere_embedding, EntryId};
use smoothlift::numerics::{gaussian_matrix, gaussian_vector, rng, Matrix, Vector};
use smoothlift::optimize::{
    downstream_stationarity, fd_validate, find_second_order_point, grad_g, hess_g, hess_g_fd, Cost, SolverParams,
};

fn random_quadratic(seed: u64, n: usize) -> Cost {
    let mut g = rng(seed);
    let a = gaussian_matrix(&mut g, n, n);
    Cost::quadratic_quartic(&a + a.transpose(), gaussian_vector(&mut g, n), 0.5)
}

#[test]
fn constant_cost_has_zero_derivatives() {
    let e = build(&EntryId::Lr { m: 4, n: 3, r: 2 }).unwrap();
    let y = e.sample_point("full_rank", 1).unwrap();
    let c = Cost::constant(12, 3.0);
    assert_eq!(grad_g(&e.lift, &y, &c).unwrap().norm(), 0.0);
    assert_eq!(hess_g(&e.lift, &y, &c).unwrap().norm(), 0.0);
    assert!(fd_validate(&e.lift, &c, &y, 0).unwrap().at_machine_precision);
}

/// On the sphere with `f = xᵀAx`, the Hessian form is `2(vᵀAv - (yᵀAy)|v|²)` on `v ⟂ y`.
#[test]
fn sphere_rayleigh_hessian_matches_hand_computation() {
    let lift = sphere_embedding(5).unwrap();
    let mut g = rng(3);
    let a = gaussian_matrix(&mut g, 5, 5);
    let a = &a + a.transpose();
    let cost = Cost::quadratic_quartic(&a * 2.0, Vector::zeros(5), 0.0);
    let y = gaussian_vector(&mut g, 5).normalize();
    let lq = e_lq(&lift, &y);
    let h = hess_g(&lift, &y, &cost).unwrap();
    for _ in 0..5 {
        let c = gaussian_vector(&mut g, 4);
        let v = &lq * &c;
        let hand = 2.0 * (v.dot(&(&a * &v)) - y.dot(&(&a * &y)) * v.norm_squared());
        assert!((c.dot(&(&h * &c)) - hand).abs() < 1e-9 * hand.abs().max(1.0));
    }
    let fd = hess_g_fd(&lift, &y, &cost, 1e-4).unwrap();
    assert!((fd - h).norm() < 1e-5);
}

fn e_lq(lift: &smoothlift::lift::Lift, y: &Vector) -> Matrix {
    lift.lq(y).unwrap().basis
}

#[test]
fn linear_cost_orthogonal_to_image_has_zero_gradient() {
    let e = build(&EntryId::DiskQuartic).unwrap();
    let y = Vector::from_vec(vec![1.0, 0.0, 0.0]);
    let c = Cost::linear(Vector::from_vec(vec![0.7, 0.0]));
    assert!(grad_g(&e.lift, &y, &c).unwrap().norm() < 1e-15);
    // The form vanishes on ker L = span e3.
    let lq = e.lift.lq(&y).unwrap();
    let h = hess_g(&e.lift, &y, &c).unwrap();
    let k = lq.ker_l.column(0).into_owned();
    assert!(k.dot(&(&h * &k)).abs() < 1e-14);
}

#[test]
fn fd_validation_passes_on_catalog_lifts_and_detects_corruption() {
    for id in [EntryId::Hadamard { n: 4 }, EntryId::Svd { m: 4, n: 3, r: 2 }, EntryId::BurerMonteiro { n: 4, r: 2, m: 2, seed: 11, a: None, b: None }] {
        let e = build(&id).unwrap();
        let y = e.sample_point(e.regimes()[0], 2).unwrap();
        let cost = random_quadratic(4, e.lift.map.out_dim());
        let rep = fd_validate(&e.lift, &cost, &y, 1).unwrap();
        assert!(rep.passes(), "{}: {rep:?}", id.name());
    }
    // Gradient oracle off by a constant vector: first-order residual only O(t).
    let e = build(&EntryId::Hadamard { n: 4 }).unwrap();
    let y = e.sample_point("interior", 2).unwrap();
    let good = random_quadratic(4, 4);
    let (g1, g2) = (good.clone(), good.clone());
    let bad = Cost::custom("corrupted", 4, move |x| g1.value(x), move |x| g2.grad(x) + Vector::from_vec(vec![0.3, -0.2, 0.1, 0.4]), move |x, u| good.hess_vec(x, u));
    let rep = fd_validate(&e.lift, &bad, &y, 1).unwrap();
    assert!(rep.grad_slope < 1.5, "{rep:?}");
}

#[test]
fn solver_finds_minimal_eigenvalue_on_sphere() {
    let lift = sphere_embedding(6).unwrap();
    for seed in 0..4 {
        let mut g = rng(100 + seed);
        let a = gaussian_matrix(&mut g, 6, 6);
        let a = &a + a.transpose();
        let cost = Cost::quadratic_quartic(&a * 2.0, Vector::zeros(6), 0.0);
        let y0 = gaussian_vector(&mut g, 6).normalize();
        let res = find_second_order_point(&lift, &cost, &y0, &SolverParams { seed, ..Default::default() }).unwrap();
        let lmin = a.symmetric_eigenvalues().min();
        assert!((res.value - lmin).abs() < 1e-6, "{} vs {lmin}", res.value);
    }
}

#[test]
fn witness_target_is_already_second_order_critical() {
    let e = build(&EntryId::DiskQuartic).unwrap();
    let y = Vector::from_vec(vec![1.0, 0.0, 0.0]);
    let cost = Cost::quadratic_shift(Vector::from_vec(vec![1.0, 0.0]), 2.0, Vector::from_vec(vec![1.0, 0.0]));
    let res = find_second_order_point(&e.lift, &cost, &y, &SolverParams::default()).unwrap();
    assert_eq!(res.iters, 0);
    assert!((res.point() - y).norm() < 1e-12);
}

#[test]
fn nodal_cubic_downstream_gap() {
    let e = build(&EntryId::NodalCubic).unwrap();
    let y = Vector::from_vec(vec![0.0, 0.0, 1.0]);
    let cost = Cost::linear(Vector::from_vec(vec![-1.0, -1.0]));
    let cone = e.set.cone_at(&e.lift.value(&y).unwrap(), e.tol()).unwrap();
    let gap = downstream_stationarity(&e.lift, &cost, &y, &cone).unwrap();
    assert!(gap <= -2f64.sqrt() + 1e-6, "{gap}");
}
