use smoothlift::catalog::{build, EntryId, Property};
use smoothlift::checker::{
    check_one_implies_one, check_point, w_set_member, witness_linear_cost, witness_quadratic_cost, CheckSettings,
    Verdict, WitnessKind,
};
use smoothlift::numerics::Vector;
use smoothlift::optimize::{grad_g, hess_g};

fn quick() -> CheckSettings {
    CheckSettings { directions: 60, w_samples: 60, restarts: 8, fiber_samples: 100, seed: 3 }
}

#[test]
fn verdicts_match_the_classification_on_every_regime() {
    let mut failures = Vec::new();
    for id in EntryId::defaults() {
        let e = build(&id).unwrap();
        for regime in e.regimes() {
            for seed in 0..3 {
                let y = e.sample_point(regime, seed).unwrap();
                let rep = check_point(&e, &y, &CheckSettings { seed, ..quick() }).unwrap();
                if !rep.mismatches.is_empty() {
                    failures.push(format!("{} {regime} seed {seed}: {:?}", id.name(), rep.mismatches));
                }
                assert!(rep.chain.is_monotone(rep.one_to_one.verdict), "{} {regime}: {:?}", id.name(), rep.chain);
                assert!(rep.witnesses_valid(), "{} {regime}: {:?}", id.name(), rep.witnesses);
            }
        }
    }
    assert!(failures.is_empty(), "{failures:#?}");
}

#[test]
fn disk_quartic_boundary_chain() {
    let e = build(&EntryId::DiskQuartic).unwrap();
    let y = Vector::from_vec(vec![1.0, 0.0, 0.0]);
    let rep = check_point(&e, &y, &quick()).unwrap();
    assert_eq!(rep.one_to_one.verdict, Verdict::Fails);
    assert_eq!(rep.chain.a_sufficient.verdict, Verdict::Fails);
    assert_eq!(rep.chain.b_dual_sufficient.verdict, Verdict::Fails);
    assert_eq!(rep.chain.w_condition.verdict, Verdict::Fails);
    assert_eq!(rep.verdict(Property::LocalToLocal), Verdict::Holds);
    let quad = rep.witnesses.iter().find(|w| matches!(w.kind, WitnessKind::Quadratic { .. })).unwrap();
    let WitnessKind::Quadratic { w, alpha, .. } = &quad.kind else { unreachable!() };
    assert!((w[0] - 1.0).abs() < 1e-12 && w[1].abs() < 1e-12, "{w:?}");
    assert!((alpha - 2.0).abs() < 1e-9, "{alpha}");
    assert!((quad.verification.downstream_gap + 1.0).abs() < 1e-9);
}

#[test]
fn quadratic_witness_is_second_order_critical_upstairs() {
    let e = build(&EntryId::DiskQuartic).unwrap();
    let y = Vector::from_vec(vec![1.0, 0.0, 0.0]);
    let cone = e.set.cone_at(&e.lift.value(&y).unwrap(), e.tol()).unwrap();
    let w = Vector::from_vec(vec![1.0, 0.0]);
    assert!(w_set_member(&e.lift, &y, &w).unwrap());
    let wc = witness_quadratic_cost(&e.lift, &y, &w, &cone).unwrap();
    let cost = wc.cost();
    assert!(grad_g(&e.lift, &y, &cost).unwrap().norm() <= 1e-12);
    let h = hess_g(&e.lift, &y, &cost).unwrap();
    assert!(h.symmetric_eigenvalues().min() >= -1e-12);
    // Dual to the tangent cone: rejected.
    assert!(witness_quadratic_cost(&e.lift, &y, &(-w), &cone).is_err());
}

#[test]
fn linear_witness_for_hadamard_boundary() {
    let e = build(&EntryId::Hadamard { n: 4 }).unwrap();
    let y = e.sample_point("boundary", 1).unwrap();
    let cone = e.set.cone_at(&e.lift.value(&y).unwrap(), e.tol()).unwrap();
    assert_eq!(check_one_implies_one(&e.lift, &y, &cone).unwrap().verdict, Verdict::Fails);
    let wc = witness_linear_cost(&e.lift, &y, &cone, 0).unwrap();
    assert!(wc.is_valid(), "{wc:?}");
}

#[test]
fn reports_are_deterministic() {
    let e = build(&EntryId::Svd { m: 4, n: 3, r: 2 }).unwrap();
    let y = e.sample_point("zero_sigma", 1).unwrap();
    let a = serde_json::to_string(&check_point(&e, &y, &quick()).unwrap()).unwrap();
    let b = serde_json::to_string(&check_point(&e, &y, &quick()).unwrap()).unwrap();
    assert_eq!(a, b);
}
