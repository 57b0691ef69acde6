use proptest::prelude::*;
use smoothlift::catalog::{build, CatalogEntry, EntryId};
use smoothlift::checker::{check_chain, check_point, CheckSettings, Verdict};
use smoothlift::cones::{project_simplex, SetDesc};
use smoothlift::experiment::random_quadratic;
use smoothlift::numerics::{gaussian_matrix, gaussian_vector, kernel_basis, pinv, rng, TolerancePolicy, Vector};
use smoothlift::optimize::{downstream_stationarity, find_second_order_point, grad_g, Cost, SolverParams};

const STATIONARY_TOL: f64 = 1e-6;

fn entry_and_point(k: usize, r: usize, seed: u64) -> (CatalogEntry, Vector) {
    let ids = EntryId::defaults();
    let e = build(&ids[k % ids.len()]).unwrap();
    let regime = e.regimes()[r % e.regimes().len()];
    let y = e.sample_point(regime, seed).unwrap();
    (e, y)
}

fn quick(seed: u64) -> CheckSettings {
    CheckSettings { directions: 40, w_samples: 40, restarts: 4, fiber_samples: 60, seed }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn qform_is_symmetric_and_matches_q(k in 0usize..14, r in 0usize..4, seed in 0u64..1000) {
        let (e, y) = entry_and_point(k, r, seed);
        let lq = e.lift.lq(&y).unwrap();
        let coker = lq.coker_basis().unwrap();
        let mut g = rng(seed);
        for j in 0..coker.ncols().min(3) {
            let w = coker.column(j).into_owned();
            let f = lq.qform(&w).unwrap();
            let scale = f.norm().max(1.0);
            prop_assert!((&f - f.transpose()).norm() <= 1e-10 * scale);
            let c = gaussian_vector(&mut g, lq.tangent_dim());
            let direct = w.dot(&lq.q_coords(&c));
            prop_assert!((direct - c.dot(&(&f * &c))).abs() <= 1e-8 * scale * c.norm_squared().max(1.0));
        }
    }

    #[test]
    fn gap_is_nonpositive_and_dual_samples_are_stationary(k in 0usize..14, r in 0usize..4, seed in 0u64..1000) {
        let (e, y) = entry_and_point(k, r, seed);
        let cone = e.set.cone_at(&e.lift.value(&y).unwrap(), e.tol()).unwrap();
        let w = gaussian_vector(&mut rng(seed), cone.dim());
        prop_assert!(cone.stationarity_gap(&w) <= 0.0);
        for d in cone.sample_dual(10, seed).unwrap() {
            prop_assert!(cone.gap_bounds(&d, seed).lower >= -STATIONARY_TOL * d.norm().max(1.0));
        }
    }

    #[test]
    fn cone_projection_is_idempotent(k in 0usize..14, r in 0usize..4, seed in 0u64..1000) {
        let (e, y) = entry_and_point(k, r, seed);
        let cone = e.set.cone_at(&e.lift.value(&y).unwrap(), e.tol()).unwrap().simplify(e.tol()).unwrap();
        // Slices and rank-one tensor cones are projected approximately.
        prop_assume!(!matches!(cone.kind(), "slice" | "rank-one-tensor"));
        let z = gaussian_vector(&mut rng(seed + 1), cone.dim());
        let p = cone.project(&z);
        prop_assert!((cone.project(&p) - &p).norm() <= 1e-8 * z.norm());
        prop_assert!(cone.violation(&p) <= 1e-8 * z.norm().max(1.0));
        prop_assert!((&z - &p).norm() <= z.norm() + 1e-12);
    }

    #[test]
    fn preimages_of_stationary_points_are_critical(k in 0usize..14, r in 0usize..4, seed in 0u64..1000) {
        let (e, y) = entry_and_point(k, r, seed);
        let cone = e.set.cone_at(&e.lift.value(&y).unwrap(), e.tol()).unwrap();
        // im L lies in the tangent cone, so a dual vector annihilates it.
        for w in cone.sample_dual(5, seed).unwrap() {
            let cost = Cost::linear(w.clone());
            prop_assert!(grad_g(&e.lift, &y, &cost).unwrap().norm() <= 1e-8 * w.norm().max(1.0));
        }
    }

    #[test]
    fn simplex_projection_lands_in_the_simplex(z in proptest::collection::vec(-5.0f64..5.0, 1..8)) {
        let z = Vector::from_vec(z);
        let p = project_simplex(&z);
        prop_assert!(p.iter().all(|&v| v >= 0.0));
        prop_assert!((p.sum() - 1.0).abs() <= 1e-12);
        prop_assert!((project_simplex(&p) - &p).norm() <= 1e-12);
        let set = SetDesc::Simplex(p.len());
        prop_assert!(set.contains(&p));
    }

    #[test]
    fn pinv_and_kernel_basis(m in 1usize..6, n in 1usize..6, rank in 0usize..6, seed in 0u64..1000) {
        let tol = TolerancePolicy::default();
        let mut g = rng(seed);
        let rank = rank.min(m).min(n);
        let a = gaussian_matrix(&mut g, m, rank) * gaussian_matrix(&mut g, rank, n);
        let p = pinv(&a, &tol).unwrap();
        let scale = a.norm().max(1.0);
        prop_assert!((&a * &p * &a - &a).norm() <= 1e-9 * scale);
        prop_assert!((&p * &a * &p - &p).norm() <= 1e-9 * p.norm().max(1.0));
        let ker = kernel_basis(&a, &tol).unwrap();
        prop_assert_eq!(ker.ncols(), n - rank);
        prop_assert!((&a * &ker).norm() <= 1e-9 * scale);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn chain_is_monotone(k in 0usize..14, r in 0usize..4, seed in 0u64..1000) {
        let (e, y) = entry_and_point(k, r, seed);
        let rep = check_point(&e, &y, &quick(seed)).unwrap();
        prop_assert!(rep.chain.is_monotone(rep.one_to_one.verdict), "{:?}", rep.chain);
        prop_assert!(rep.witnesses_valid());
    }

    #[test]
    fn benign_solver_limits_are_stationary(seed in 0u64..1000) {
        let e = build(&EntryId::Hadamard { n: 4 }).unwrap();
        let cost = random_quadratic(4, false, 0.5, seed);
        let y0 = e.sample_point("interior", seed).unwrap();
        let res = find_second_order_point(&e.lift, &cost, &y0, &SolverParams { seed, ..SolverParams::default() }).unwrap();
        let y = res.point();
        let cone = e.set.cone_at(&e.lift.value(&y).unwrap(), e.tol()).unwrap();
        let w = check_chain(&e.lift, &y, &cone, Some(&e), &quick(seed)).unwrap().w_condition.verdict;
        prop_assert_eq!(w, Verdict::Holds);
        let gap = downstream_stationarity(&e.lift, &cost, &y, &cone).unwrap();
        prop_assert!(gap >= -STATIONARY_TOL, "gap {gap}");
    }
}
