//! Acceptance matrix: one PASS/FAIL line per criterion, with pinned tolerances.
//!
//! Runs without the libtest harness so the lines always reach the terminal. Two
//! criteria are unattainable as literally stated (see the README); for those the
//! literal claim is evaluated and printed, and the corrected claim is what gates
//! the exit code.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::{Command, ExitCode};
use std::time::Instant;

use smoothlift::catalog::{build, sphere_embedding, EntryId, Property};
use smoothlift::checker::{check_point, slp_evidence, witness_quadratic_cost, CheckSettings, Verdict};
use smoothlift::cones::{empirical_tangents, nodal_param, SetDesc};
use smoothlift::experiment::random_quadratic;
use smoothlift::numerics::{derive_seed, gaussian_matrix, gaussian_vector, mat_of, rng, svd, vec_of, Matrix, TolerancePolicy, Vector};
use smoothlift::optimize::{downstream_stationarity, fd_validate, find_second_order_point, grad_g, hess_g, Cost, SolverParams};

// Pinned tolerances.
const TAYLOR_GRAD_SLOPE: f64 = 1.9;
const TAYLOR_HESS_SLOPE: f64 = 2.9;
const TAYLOR_BUDGET_SECS: f64 = 120.0;
const FD_REL: f64 = 1e-5;
const CONE_TOL: f64 = 1e-3;
const SDP_EQ_TOL: f64 = 1e-6;
const NODAL_GAP: f64 = -1.41;
const WITNESS_GRAD: f64 = 1e-10;
const WITNESS_HESS: f64 = -1e-8;
const WITNESS_GAP: f64 = -0.99;
const DEGENERATE_RATIO: f64 = 0.10;
const LIMIT_TOL: f64 = 1e-9;
const CP_ZERO: f64 = 1e-12;
const EIG_TOL: f64 = 1e-6;
const SIMPLEX_GAP: f64 = -1e-6;
const PG_VALUE_TOL: f64 = 1e-5;
const SLP_MARGIN: f64 = 0.1;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn lift_for(id: &EntryId) -> smoothlift::catalog::CatalogEntry {
    build(id).unwrap()
}

/// 1. Taylor residual slopes on every catalog lift.
fn taylor() -> Outcome {
    let start = Instant::now();
    let (mut gmin, mut hmin, mut points, mut flat) = (f64::INFINITY, f64::INFINITY, 0, 0);
    let mut bad = Vec::new();
    for id in EntryId::defaults() {
        let e = lift_for(&id);
        let regimes = e.regimes();
        for k in 0..20u64 {
            let regime = regimes[k as usize % regimes.len()];
            let y = e.sample_point(regime, 1000 + k).unwrap();
            let cost = random_quadratic(e.lift.ambient_dim(), false, 0.5, derive_seed(k, 7));
            let rep = fd_validate(&e.lift, &cost, &y, k).unwrap();
            points += 1;
            if rep.at_machine_precision {
                flat += 1;
                continue;
            }
            gmin = gmin.min(rep.grad_slope);
            hmin = hmin.min(rep.hess_slope);
            if rep.grad_slope < TAYLOR_GRAD_SLOPE || rep.hess_slope < TAYLOR_HESS_SLOPE {
                bad.push(format!("{} {regime}", id.name()));
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        bad.is_empty() && secs < TAYLOR_BUDGET_SECS,
        format!("{points} points, min slopes {gmin:.3}/{hmin:.3}, {flat} at machine precision, {secs:.1}s; failures {bad:?}"),
    )
}

/// 2. `grad_g`/`hess_g` against finite differences of `g` along curves.
fn composition() -> Outcome {
    let ids = EntryId::defaults();
    let (mut worst_g, mut worst_h) = (0f64, 0f64);
    for k in 0..100usize {
        let id = &ids[k % ids.len()];
        let e = lift_for(id);
        let regime = e.regimes()[k / ids.len() % e.regimes().len()];
        let y = e.sample_point(regime, 2000 + k as u64).unwrap();
        let cost = random_quadratic(e.lift.ambient_dim(), false, 0.5, 3000 + k as u64);
        let g = |v: &Vector, t: f64| cost.value(&e.lift.value(&e.lift.curve(&y, v, t).unwrap()).unwrap());
        let lq = e.lift.lq(&y).unwrap();
        let grad = grad_g(&e.lift, &y, &cost).unwrap();
        let h = 1e-5;
        let fd = Vector::from_fn(lq.tangent_dim(), |i, _| {
            let b = lq.basis.column(i).into_owned();
            (g(&b, h) - g(&b, -h)) / (2.0 * h)
        });
        worst_g = worst_g.max((&fd - &grad).norm() / grad.norm().max(1.0));
        let hess = hess_g(&e.lift, &y, &cost).unwrap();
        let mut r = rng(4000 + k as u64);
        for _ in 0..3 {
            let c = gaussian_vector(&mut r, lq.tangent_dim()).normalize();
            let v = &lq.basis * &c;
            let q = c.dot(&(&hess * &c));
            let h = 1e-3;
            let second = (g(&v, h) - 2.0 * g(&v, 0.0) + g(&v, -h)) / (h * h);
            worst_h = worst_h.max((second - q).abs() / q.abs().max(1.0));
        }
    }
    outcome(worst_g <= FD_REL && worst_h <= FD_REL, format!("100 pairs, worst relative errors grad {worst_g:.2e}, hess {worst_h:.2e}"))
}

/// 3. Catalog classification at 20 points per regime.
fn classification() -> Outcome {
    let (mut checked, mut mismatches) = (0, Vec::new());
    for id in EntryId::defaults() {
        let e = lift_for(&id);
        for regime in e.regimes() {
            for k in 0..20u64 {
                let y = e.sample_point(regime, 5000 + k).unwrap();
                let rep = check_point(&e, &y, &CheckSettings { seed: k, ..Default::default() }).unwrap();
                checked += 1;
                if !rep.mismatches.is_empty() || !rep.witnesses_valid() || !rep.chain.is_monotone(rep.one_to_one.verdict) {
                    mismatches.push(format!("{} {regime} #{k}: {:?}", id.name(), rep.mismatches));
                }
            }
        }
    }
    outcome(mismatches.is_empty(), format!("{checked} points, {} mismatches {:?}", mismatches.len(), mismatches.iter().take(3).collect::<Vec<_>>()))
}

/// Symmetric `V = [u U⊥] [[a, b], [bᵀ, c]] [u U⊥]ᵀ`, unit Frobenius norm.
fn psd_block_matrix(basis: &Matrix, a: f64, b: &Matrix, c: &Matrix) -> Vector {
    let k = basis.ncols();
    let mut blk = Matrix::zeros(k, k);
    blk[(0, 0)] = a;
    blk.view_mut((0, 1), (1, k - 1)).copy_from(b);
    blk.view_mut((1, 0), (k - 1, 1)).copy_from(&b.transpose());
    blk.view_mut((1, 1), (k - 1, k - 1)).copy_from(c);
    let v = vec_of(&(basis * blk * basis.transpose()));
    let n = v.norm();
    v / n
}

/// 4. Tangent cone of PSD matrices of rank at most 2, at a rank-1 point of 4x4.
fn psd_rank_cone() -> Outcome {
    let set = SetDesc::PsdBoundedRank { n: 4, r: 2 };
    let tol = TolerancePolicy::default();
    let mut g = rng(41);
    let u = gaussian_vector(&mut g, 4).normalize();
    let x = vec_of(&(&u * u.transpose() * 2.0));
    let cone = set.cone_at(&x, &tol).unwrap();
    let emp = empirical_tangents(&set, &x, 500, 42).unwrap();
    let emp_ok = emp.iter().filter(|v| cone.member(v, CONE_TOL).inside).count();

    // Independent block construction in the eigenbasis of x.
    let d = svd(&mat_of(x.as_slice(), 4, 4)).unwrap();
    let basis = d.u.clone();
    let mut rejected = 0;
    for k in 0..500 {
        let b = gaussian_matrix(&mut g, 1, 3);
        let h = gaussian_vector(&mut g, 3);
        let c = if k % 2 == 0 {
            // Negative curvature in the normal block.
            -(&h * h.transpose())
        } else {
            // Rank two in the normal block, budget is one.
            let h2 = gaussian_vector(&mut g, 3);
            &h * h.transpose() + &h2 * h2.transpose()
        };
        let v = psd_block_matrix(&basis, g_normal(&mut g), &b, &(c * 3.0));
        if !cone.member(&v, CONE_TOL).inside {
            rejected += 1;
        }
    }

    // Dual description: closed-form gap vs sampled directions.
    let mut dirs = Vec::with_capacity(10_000);
    for _ in 0..10_000 {
        let b = gaussian_matrix(&mut g, 1, 3);
        let h = gaussian_vector(&mut g, 3);
        dirs.push(psd_block_matrix(&basis, g_normal(&mut g), &b, &(&h * h.transpose() * g_normal(&mut g).abs())));
    }
    let mut worst = 0f64;
    let mut attained = true;
    for _ in 0..50 {
        let w = gaussian_matrix(&mut g, 4, 4);
        let w = vec_of(&(&w + w.transpose()));
        let gap = cone.stationarity_gap(&w);
        let sampled = dirs.iter().map(|v| w.dot(v)).fold(f64::INFINITY, f64::min);
        // The closed form is a lower bound, and the sample comes within 1e-3 of it
        // after the minimizing direction is added.
        worst = worst.max(gap - sampled);
        let p = cone.project(&(-&w));
        if gap < -1e-9 {
            let v = &p / p.norm();
            attained &= cone.member(&v, CONE_TOL).inside && (w.dot(&v) - gap).abs() <= CONE_TOL;
        }
    }
    let duals = cone.sample_dual(50, 43).unwrap();
    let dual_ok = duals.iter().all(|w| dirs.iter().all(|v| w.dot(v) >= -CONE_TOL * w.norm()));
    outcome(
        emp_ok == 500 && rejected == 500 && worst <= CONE_TOL && attained && dual_ok,
        format!("empirical {emp_ok}/500 inside, violators {rejected}/500 rejected, closed form exceeds sample by at most {worst:.1e}, minimizer attained {attained}, dual samples valid {dual_ok}"),
    )
}

fn g_normal(g: &mut impl rand::Rng) -> f64 {
    gaussian_vector(g, 1)[0]
}

/// 5. Tangents of a smooth SDP slice from fiber perturbations.
fn smooth_sdp() -> Outcome {
    let e = lift_for(&EntryId::BurerMonteiro { n: 4, r: 2, m: 2, seed: 11, a: None, b: None });
    let SetDesc::SmoothSdpSlice(data) = &e.set else { return outcome(false, "BM set is not an SDP slice") };
    let y = e.sample_point("rank_deficient", 3).unwrap();
    let x = e.lift.value(&y).unwrap();
    let xm = mat_of(x.as_slice(), 4, 4);
    let d = svd(&xm).unwrap();
    let s = d.rank(&TolerancePolicy::default());
    let u_perp = d.u.columns(s, 4 - s).into_owned();
    let lq = e.lift.lq(&y).unwrap();
    let mut g = rng(51);
    let (mut eq_worst, mut block_worst, mut count) = (0f64, 0f64, 0);
    for k in 0..200 {
        // Mix kernel and generic directions so the second-order block shows up.
        let c = if k % 2 == 0 && lq.ker_l.ncols() > 0 {
            &lq.ker_l * gaussian_vector(&mut g, lq.ker_l.ncols())
        } else {
            gaussian_vector(&mut g, lq.tangent_dim())
        };
        let kernel = k % 2 == 0 && lq.ker_l.ncols() > 0;
        let v = &lq.basis * c;
        // The rank-excess part of the normalized difference decays like t.
        let steps: &[f64] = if kernel { &[1e-4] } else { &[1e-4, 1e-5] };
        for &t in steps {
            let yt = e.lift.curve(&y, &v, t).unwrap();
            let dx = e.lift.value(&yt).unwrap() - &x;
            let dn = dx.norm();
            if dn < 1e-14 {
                continue;
            }
            let vv = mat_of((dx / dn).as_slice(), 4, 4);
            for a in &data.a {
                eq_worst = eq_worst.max(a.dot(&vv).abs());
            }
            let blk = u_perp.transpose() * &vv * &u_perp;
            let ev = blk.symmetric_eigenvalues();
            let mut sorted: Vec<f64> = ev.iter().copied().collect();
            sorted.sort_by(f64::total_cmp);
            let neg = (-sorted[0]).max(0.0);
            let over_rank = if sorted.len() >= 2 { sorted[sorted.len() - 2].abs() } else { 0.0 };
            block_worst = block_worst.max(neg).max(if data.r > s + 1 { 0.0 } else { over_rank });
            count += 1;
        }
    }
    outcome(eq_worst <= SDP_EQ_TOL && block_worst <= CONE_TOL, format!("{count} tangents, max |<A_i,V>| {eq_worst:.1e}, worst block violation {block_worst:.1e}"))
}

/// 6. Nodal cubic with `f = -x1 - x2`.
fn nodal() -> Outcome {
    let f = |t: f64| {
        let x = nodal_param(t);
        -x[0] - x[1]
    };
    let grid = |c: f64| (0..401).map(move |i| c - 0.2 + 0.4 * i as f64 / 400.0);
    let strict_min = |c: f64| grid(c).filter(|t| (t - c).abs() > 1e-12).all(|t| f(t) > f(c));
    let as_written = strict_min(1.0);
    let corrected = strict_min(-1.0);
    let e = lift_for(&EntryId::NodalCubic);
    let y = Vector::from_vec(vec![0.0, 0.0, -1.0]);
    let cost = Cost::linear(Vector::from_vec(vec![-1.0, -1.0]));
    let x = e.lift.value(&y).unwrap();
    let cone = e.set.cone_at(&x, e.tol()).unwrap();
    let gap = downstream_stationarity(&e.lift, &cost, &y, &cone).unwrap();
    let upstairs = grad_g(&e.lift, &y, &cost).unwrap().norm();
    let slope_at_one = (f(1.0 + 1e-6) - f(1.0 - 1e-6)) / 2e-6;
    println!(
        "    as written (strict min at t=1 on [0.8,1.2]): {} (g'(1) = {slope_at_one:.3})",
        if as_written { "PASS" } else { "FAIL" }
    );
    outcome(
        corrected && gap <= NODAL_GAP && upstairs <= 1e-12,
        format!("strict min at t=-1 on [-1.2,-0.8]: {corrected}, y=(0,0,-1) maps to the node, |grad g| {upstairs:.1e}, downstream gap {gap:.6}"),
    )
}

/// 7. Disk-quartic chain and quadratic witness at (1,0,0).
fn disk_quartic() -> Outcome {
    let e = lift_for(&EntryId::DiskQuartic);
    let y = Vector::from_vec(vec![1.0, 0.0, 0.0]);
    let rep = check_point(&e, &y, &CheckSettings::default()).unwrap();
    let c = &rep.chain;
    let chain_ok = rep.one_to_one.verdict == Verdict::Fails
        && c.a_sufficient.verdict == Verdict::Fails
        && c.b_dual_sufficient.verdict == Verdict::Fails
        && c.w_condition.verdict == Verdict::Fails
        && c.necessary.verdict == Verdict::Holds;
    let cone = e.set.cone_at(&e.lift.value(&y).unwrap(), e.tol()).unwrap();
    let literal = witness_quadratic_cost(&e.lift, &y, &Vector::from_vec(vec![-1.0, 0.0]), &cone);
    println!(
        "    as written (witness w=(-1,0)): {} ({})",
        if literal.is_ok() { "PASS" } else { "FAIL" },
        match &literal {
            Ok(_) => "accepted".to_string(),
            Err(err) => format!("{err}; -x1 is minimized over the disk at (1,0)"),
        }
    );
    let w = witness_quadratic_cost(&e.lift, &y, &Vector::from_vec(vec![1.0, 0.0]), &cone).unwrap();
    let cost = w.cost();
    let grad = grad_g(&e.lift, &y, &cost).unwrap().norm();
    let lmin = hess_g(&e.lift, &y, &cost).unwrap().symmetric_eigenvalues().min();
    let gap = downstream_stationarity(&e.lift, &cost, &y, &cone).unwrap();
    outcome(
        chain_ok && grad <= WITNESS_GRAD && lmin >= WITNESS_HESS && gap <= WITNESS_GAP,
        format!("chain 1=>1/A/B/W/necessary = {:?}/{:?}/{:?}/{:?}/{:?}; witness w=(1,0): |grad g| {grad:.1e}, min eig {lmin:.3}, gap {gap:.3}",
            rep.one_to_one.verdict, c.a_sufficient.verdict, c.b_dual_sufficient.verdict, c.w_condition.verdict, c.necessary.verdict),
    )
}

/// 8. Degenerate directions and the trivial dual of B at rank-deficient points.
fn degenerate() -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;
    let cases = [
        (EntryId::Lr { m: 4, n: 3, r: 2 }, "balanced_deficient"),
        (EntryId::Lr { m: 4, n: 3, r: 2 }, "unbalanced"),
        (EntryId::DesingChart { m: 4, n: 4, r: 2, perm: Some(vec![2, 0, 3, 1]) }, "rank_deficient"),
    ];
    for (id, regime) in cases {
        let e = lift_for(&id);
        let y = e.sample_point(regime, 8).unwrap();
        let lq = e.lift.lq(&y).unwrap();
        let (m, n) = match id {
            EntryId::Lr { m, n, .. } => (m, n),
            EntryId::DesingChart { m, n, .. } => (m, n),
            _ => unreachable!(),
        };
        let perm = match &id {
            EntryId::DesingChart { perm: Some(p), .. } => {
                let mut pm = Matrix::zeros(n, n);
                for (i, &j) in p.iter().enumerate() {
                    pm[(i, j)] = 1.0;
                }
                Some(pm)
            }
            _ => None,
        };
        let base = e.degenerate_directions(&y, 1).unwrap();
        let (mut worst_ratio, mut worst_limit, mut shape_ok) = (0f64, 0f64, true);
        for i in [2usize, 4, 8, 16, 32, 64] {
            for (d, d1) in e.degenerate_directions(&y, i).unwrap().iter().zip(&base) {
                let l = |v: &Vector| (&lq.l * (lq.basis.transpose() * v)).norm();
                worst_ratio = worst_ratio.max(((l(&d.v) / l(&d1.v)) * i as f64 - 1.0).abs());
                worst_limit = worst_limit.max((lq.q(&d.v) - &d.limit).norm());
                // LR limits are rank one; desing limits are [-2uvᵀ, 0]Π.
                let lim = mat_of(d.limit.as_slice(), m, n);
                let lim = match &perm {
                    Some(p) => {
                        let unperm = lim * p.transpose();
                        shape_ok &= unperm.columns(n - 2, 2).norm() <= LIMIT_TOL;
                        unperm.columns(0, n - 2).into_owned()
                    }
                    None => lim,
                };
                let sv = svd(&lim).unwrap().s;
                shape_ok &= sv.get(1).copied().unwrap_or(0.0) <= LIMIT_TOL * sv[0].max(1.0) && sv[0] > 1e-6;
            }
        }
        let rep = check_point(&e, &y, &CheckSettings::default()).unwrap();
        let b = &rep.chain.b_dual_sufficient;
        let trivial = b.verdict == Verdict::Holds && b.note.contains("B* = {0}");
        ok &= worst_ratio <= DEGENERATE_RATIO && worst_limit <= LIMIT_TOL && shape_ok && trivial;
        notes.push(format!("{} {regime}: ratio err {worst_ratio:.3}, limit err {worst_limit:.1e}, shape {shape_ok}, B: {}", id.name(), b.note));
    }
    outcome(ok, notes.join("; "))
}

/// 9. CP rank-one, order three, at the origin.
fn multilinear() -> Outcome {
    let e = lift_for(&EntryId::CpRank1 { dims: vec![2, 3, 2] });
    let y = Vector::zeros(7);
    let lq = e.lift.lq(&y).unwrap();
    let mut g = rng(91);
    let mut qmax = 0f64;
    for _ in 0..50 {
        let v = gaussian_vector(&mut g, 7).normalize();
        qmax = qmax.max(lq.q(&v).norm());
    }
    let lnorm = lq.l.norm();
    let emp = empirical_tangents(&e.set, &lq.x, 200, 92).unwrap();
    let nonzero = emp.iter().filter(|d| d.norm() > 0.5).count();
    let rep = check_point(&e, &y, &CheckSettings::default()).unwrap();
    let nec = rep.chain.necessary.verdict;
    outcome(
        lnorm <= CP_ZERO && qmax <= CP_ZERO && nonzero == 200 && nec == Verdict::Fails,
        format!("|L| {lnorm:.1e}, max |Q(v)| {qmax:.1e}, nonzero empirical tangents {nonzero}/200, necessary {nec:?}"),
    )
}

/// Projected-gradient oracle on the simplex with its own sort-based projection.
fn simplex_oracle(a: &Matrix, b: &Vector) -> f64 {
    let n = b.len();
    let proj = |z: &Vector| {
        let mut s: Vec<f64> = z.iter().copied().collect();
        s.sort_by(|p, q| q.total_cmp(p));
        let (mut acc, mut theta) = (0.0, 0.0);
        for (k, v) in s.iter().enumerate() {
            acc += v;
            let t = (acc - 1.0) / (k + 1) as f64;
            if v - t > 0.0 {
                theta = t;
            }
        }
        z.map(|v| (v - theta).max(0.0))
    };
    let step = 1.0 / a.symmetric_eigenvalues().max();
    let mut x = Vector::from_element(n, 1.0 / n as f64);
    let mut z = x.clone();
    let mut tk = 1.0f64;
    for _ in 0..20_000 {
        let xn = proj(&(&z - (a * &z + b) * step));
        let tn = (1.0 + (1.0 + 4.0 * tk * tk).sqrt()) / 2.0;
        z = &xn + (&xn - &x) * ((tk - 1.0) / tn);
        x = xn;
        tk = tn;
    }
    0.5 * x.dot(&(a * &x)) + b.dot(&x)
}

/// 10. Benign nonconvexity on the sphere and the Hadamard lift.
fn benign() -> Outcome {
    let lift = sphere_embedding(8).unwrap();
    let mut worst_eig = 0f64;
    for k in 0..20u64 {
        let mut g = rng(100 + k);
        let a = gaussian_matrix(&mut g, 8, 8);
        let a = (&a + a.transpose()) / 2.0;
        let lmin = a.symmetric_eigenvalues().min();
        let cost = Cost::quadratic_quartic(&a * 2.0, Vector::zeros(8), 0.0);
        for s in 0..5 {
            let y0 = gaussian_vector(&mut g, 8).normalize();
            let res = find_second_order_point(&lift, &cost, &y0, &SolverParams { seed: s, ..Default::default() }).unwrap();
            worst_eig = worst_eig.max((res.value - lmin).abs());
        }
    }
    let e = lift_for(&EntryId::Hadamard { n: 10 });
    let (mut worst_gap, mut worst_val, mut failures) = (0f64, 0f64, 0);
    for k in 0..100u64 {
        let mut g = rng(200 + k);
        let m = gaussian_matrix(&mut g, 10, 10);
        let a = &m * m.transpose() / 10.0 + Matrix::identity(10, 10) * 0.1;
        let b = gaussian_vector(&mut g, 10);
        let cost = Cost::quadratic_quartic(a.clone(), b.clone(), 0.0);
        let y0 = gaussian_vector(&mut g, 10).normalize();
        match find_second_order_point(&e.lift, &cost, &y0, &SolverParams { seed: k, ..Default::default() }) {
            Ok(res) => {
                let y = res.point();
                let x = e.lift.value(&y).unwrap();
                let cone = e.set.cone_at(&x, e.tol()).unwrap();
                worst_gap = worst_gap.min(downstream_stationarity(&e.lift, &cost, &y, &cone).unwrap());
                worst_val = worst_val.max((res.value - simplex_oracle(&a, &b)).abs());
            }
            Err(_) => failures += 1,
        }
    }
    outcome(
        worst_eig <= EIG_TOL && worst_gap >= SIMPLEX_GAP && worst_val <= PG_VALUE_TOL && failures == 0,
        format!("sphere worst |g - λmin| {worst_eig:.1e}; simplex worst gap {worst_gap:.1e}, worst value diff {worst_val:.1e}, unconverged {failures}"),
    )
}

/// 11. Sequence evidence against openness.
fn slp() -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;
    for (id, regime) in [
        (EntryId::DesingChart { m: 4, n: 4, r: 2, perm: Some(vec![2, 0, 3, 1]) }, "rank_deficient"),
        (EntryId::Svd { m: 4, n: 3, r: 2 }, "repeated"),
    ] {
        let e = lift_for(&id);
        let y = e.sample_point(regime, 11).unwrap();
        assert_eq!(e.expected(&y).unwrap().get(Property::LocalToLocal), Some(false));
        let ev = slp_evidence(&e, &y, &CheckSettings { seed: 11, ..Default::default() }).unwrap();
        // Fiber samples really are preimages of x_i.
        for r in &ev.rows {
            let xi = e.pathological_sequence(&y, r.i).unwrap();
            let yi = e.lift_point(&xi, 0).unwrap();
            ok &= (e.lift.value(&yi).unwrap() - &xi).norm() <= 1e-8;
            ok &= r.x_distance <= 1.0 / r.i as f64 + 1e-12;
            ok &= r.best_lift_distance.is_none_or(|d| d >= SLP_MARGIN);
        }
        let best = ev.rows.iter().filter_map(|r| r.best_lift_distance).fold(f64::INFINITY, f64::min);
        let last = ev.rows.last().unwrap();
        notes.push(format!("{} {regime}: min best-lift distance {best:.3}, |x_64 - x| {:.1e}", id.name(), last.x_distance));
    }
    outcome(ok, notes.join("; "))
}

/// 12. Byte-identical suite reports.
fn determinism() -> Outcome {
    let dir = std::env::temp_dir().join(format!("smoothlift-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let run = |name: &str| {
        let out = dir.join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_smoothlift"))
            .args(["suite", "--seed", "7", "--out"])
            .arg(&out)
            .output()
            .unwrap();
        (status.status.code(), std::fs::read(&out).unwrap_or_default())
    };
    let (c1, a) = run("a.jsonl");
    let (c2, b) = run("b.jsonl");
    let _ = std::fs::remove_dir_all(&dir);
    outcome(
        !a.is_empty() && a == b && c1 == Some(0) && c2 == Some(0),
        format!("{} bytes, identical {}, exit codes {c1:?}/{c2:?}", a.len(), a == b),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("taylor slopes", taylor),
        ("grad/hess composition", composition),
        ("catalog classification", classification),
        ("psd∩rank tangent cone", psd_rank_cone),
        ("smooth sdp cone", smooth_sdp),
        ("nodal cubic counterexample", nodal),
        ("disk-quartic witness", disk_quartic),
        ("degenerate directions", degenerate),
        ("multilinear obstruction", multilinear),
        ("benign nonconvexity", benign),
        ("slp-failure evidence", slp),
        ("determinism", determinism),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let label = format!("{:02} {name}", i + 1);
        if !filter.is_empty() && !filter.iter().any(|p| label.contains(p.as_str())) {
            continue;
        }
        let start = Instant::now();
        let o = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or(p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        failed += !o.pass as usize;
        println!("criterion {label}: {} [{:.1}s] {}", if o.pass { "PASS" } else { "FAIL" }, start.elapsed().as_secs_f64(), o.detail);
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
