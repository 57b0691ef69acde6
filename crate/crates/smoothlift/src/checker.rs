//! Verdicts for "local⇒local", "1⇒1" and "2⇒1" at a point, with witness costs.
//!
//! The "2⇒1" chain is evaluated through four sets built from `L_y` and `Q_y`:
//!
//! * `A`: `Q_y(ker L_y) + im L_y`, checked against sampled cone directions;
//! * `B*`: bounded above by the dual of the degenerate-direction limits plus `im L_y`;
//! * `W`: covectors `w ⟂ im L_y` with `∇²φ_w` positive semidefinite on `ker L_y` and
//!   range-compatible off it; "2⇒1" holds iff `W ⊆ (T_x X)*`;
//! * necessary: covectors `w ⟂ im L_y` with `∇²φ_w ⪰ 0` on all of `T_y M`.
//!
//! `A ⊆ T` ⇒ `B* ⊆ T*` ⇒ `W ⊆ T*` ⇒ necessary, and "1⇒1" ⇒ `W ⊆ T*`. Failures of
//! `W` propagate to `A` and `B` by contraposition only.

use serde::{Deserialize, Serialize};

use crate::catalog::{CatalogEntry, EntryId, Expected, Property};
use crate::cones::{TangentCone, STATIONARY_TOL};
use crate::error::{LiftError, Result};
use crate::lift::{LQData, Lift};
use crate::numerics::{
    complement_basis, derive_seed, gaussian_vector, hcat, min_eig, pinv, projector, rng, sym, sym_eig, Matrix,
    TolerancePolicy, Vector,
};
use crate::optimize::{grad_g, hess_g, Cost};

/// Range-inclusion tolerance in the `W` membership test.
pub const RANGE_TOL: f64 = 1e-7;
/// Projector distance below which `im L_y` and a subspace cone are equal.
pub const SUBSPACE_TOL: f64 = 1e-7;
/// A witness must push the downstream gap at least this far below zero.
pub const WITNESS_GAP: f64 = -1e-4;
/// Minimum best-lift distance along a pathological sequence.
pub const SLP_MARGIN: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Holds,
    Fails,
    Inconclusive,
}

impl Verdict {
    pub fn from_bool(b: bool) -> Self {
        if b {
            Self::Holds
        } else {
            Self::Fails
        }
    }

    pub fn as_bool(self) -> Option<bool> {
        match self {
            Self::Holds => Some(true),
            Self::Fails => Some(false),
            Self::Inconclusive => None,
        }
    }
}

/// A verdict with the numbers behind it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Finding {
    pub verdict: Verdict,
    pub note: String,
    /// Subspace residual, worst gap or similar, depending on the check.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual: Option<f64>,
    pub samples: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Vec<f64>>,
}

impl Finding {
    fn new(verdict: Verdict, note: impl Into<String>) -> Self {
        Self { verdict, note: note.into(), residual: None, samples: 0, witness: None }
    }

    fn residual(mut self, r: f64) -> Self {
        self.residual = Some(r);
        self
    }

    fn samples(mut self, n: usize) -> Self {
        self.samples = n;
        self
    }

    fn witness(mut self, w: &Vector) -> Self {
        self.witness = Some(w.as_slice().to_vec());
        self
    }
}

/// Verdicts of the sufficient / characterizing / necessary conditions for "2⇒1".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainReport {
    pub a_sufficient: Finding,
    pub b_dual_sufficient: Finding,
    pub w_condition: Finding,
    pub necessary: Finding,
}

impl ChainReport {
    /// Every implication of the chain is respected.
    pub fn is_monotone(&self, one_to_one: Verdict) -> bool {
        use Verdict::*;
        let imp = |a: Verdict, b: Verdict| !(a == Holds && b == Fails);
        imp(self.a_sufficient.verdict, self.b_dual_sufficient.verdict)
            && imp(self.b_dual_sufficient.verdict, self.w_condition.verdict)
            && imp(self.w_condition.verdict, self.necessary.verdict)
            && imp(one_to_one, self.w_condition.verdict)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WitnessKind {
    Linear { w: Vec<f64> },
    Quadratic { w: Vec<f64>, alpha: f64, center: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verification {
    pub grad_norm_upstairs: f64,
    pub hess_min_eig_upstairs: f64,
    pub downstream_gap: f64,
    pub witness_direction: Vec<f64>,
}

/// A cost for which `y` is critical upstairs while `φ(y)` is not stationary downstairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessCost {
    pub kind: WitnessKind,
    pub verification: Verification,
}

impl WitnessCost {
    pub fn cost(&self) -> Cost {
        match &self.kind {
            WitnessKind::Linear { w } => Cost::linear(Vector::from_column_slice(w)),
            WitnessKind::Quadratic { w, alpha, center } => {
                Cost::quadratic_shift(Vector::from_column_slice(w), *alpha, Vector::from_column_slice(center))
            }
        }
    }

    /// Checks the verification numbers against the witness thresholds.
    pub fn is_valid(&self) -> bool {
        let v = &self.verification;
        let hess_ok = match self.kind {
            WitnessKind::Linear { .. } => true,
            WitnessKind::Quadratic { .. } => v.hess_min_eig_upstairs >= -1e-8,
        };
        v.grad_norm_upstairs <= 1e-9 && hess_ok && v.downstream_gap <= WITNESS_GAP
    }
}

/// Sample counts and seed for the randomized checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CheckSettings {
    pub directions: usize,
    pub w_samples: usize,
    pub restarts: usize,
    pub fiber_samples: usize,
    pub seed: u64,
}

impl Default for CheckSettings {
    fn default() -> Self {
        Self { directions: 300, w_samples: 200, restarts: 20, fiber_samples: 500, seed: 0 }
    }
}

fn unit(v: Vector) -> Option<Vector> {
    let n = v.norm();
    (n > 1e-12 && n.is_finite()).then(|| v / n)
}

/// "1⇒1" holds at `y` iff `im L_y = T_x X`.
pub fn check_one_implies_one(lift: &Lift, y: &Vector, cone: &TangentCone) -> Result<Finding> {
    let lq = lift.lq(y)?;
    one_implies_one(&lq, cone, 0)
}

fn one_implies_one(lq: &LQData, cone: &TangentCone, seed: u64) -> Result<Finding> {
    if let Some(basis) = cone.as_subspace() {
        let dist = (projector(&lq.im_l) - projector(basis)).norm();
        let v = Verdict::from_bool(dist <= SUBSPACE_TOL);
        return Ok(Finding::new(v, "projector distance between im L and the tangent subspace").residual(dist));
    }
    // A linear image cannot equal a cone that is not a subspace.
    let dirs = cone.sample_directions(64, seed);
    let outside = dirs
        .iter()
        .map(|d| (d - lq.im_l_part(d)).norm())
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(&b.1));
    let mut f = Finding::new(Verdict::Fails, format!("tangent cone is {}, not a subspace", cone.kind())).samples(dirs.len());
    if let Some((i, r)) = outside {
        f = f.residual(r).witness(&dirs[i]);
    }
    Ok(f)
}

/// Linear cost `<w, ·>` with `w ⟂ im L_y` and `w ∉ (T_x X)*`.
pub fn witness_linear_cost(lift: &Lift, y: &Vector, cone: &TangentCone, seed: u64) -> Result<WitnessCost> {
    let lq = lift.lq(y)?;
    let coker = lq.coker_basis()?;
    let mut best: Option<(f64, Vector)> = None;
    let mut consider = |w: Vector| {
        if let Some(w) = unit(&coker * (coker.transpose() * w)) {
            let gap = cone.stationarity_gap(&w);
            if best.as_ref().is_none_or(|(b, _)| gap < *b) {
                best = Some((gap, w));
            }
        }
    };
    for d in cone.sample_directions(200, seed) {
        consider(-d);
    }
    for k in 0..coker.ncols() {
        consider(coker.column(k).into_owned());
        consider(-coker.column(k).into_owned());
    }
    let mut g = rng(derive_seed(seed, 1));
    for _ in 0..200usize.saturating_sub(2 * coker.ncols()) {
        consider(gaussian_vector(&mut g, lq.ambient_dim()));
    }
    let candidates = 200 + 2 * coker.ncols();
    let (gap, w) = best.ok_or(LiftError::WitnessSearchFailed { candidates })?;
    if gap > WITNESS_GAP {
        return Err(LiftError::WitnessSearchFailed { candidates });
    }
    let cost = Cost::linear(w.clone());
    let hess = hess_g(lift, y, &cost)?;
    Ok(WitnessCost {
        kind: WitnessKind::Linear { w: w.as_slice().to_vec() },
        verification: Verification {
            grad_norm_upstairs: grad_g(lift, y, &cost)?.norm(),
            hess_min_eig_upstairs: if hess.nrows() == 0 { 0.0 } else { min_eig(&hess)? },
            downstream_gap: gap,
            witness_direction: w.as_slice().to_vec(),
        },
    })
}

/// The `[ker L | (ker L)^⊥]` split of the tangent coordinates.
struct Split {
    k: Matrix,
    kp: Matrix,
}

fn split(lq: &LQData) -> Result<Split> {
    let k = lq.ker_l.clone();
    let kp = complement_basis(&k, lq.tangent_dim(), &TolerancePolicy::default())?;
    Ok(Split { k, kp })
}

struct Blocks {
    phi1: Matrix,
    phi2: Matrix,
    phi3: Matrix,
}

fn blocks(phi: &Matrix, s: &Split) -> Blocks {
    Blocks {
        phi1: sym(&(s.k.transpose() * phi * &s.k)),
        phi2: s.k.transpose() * phi * &s.kp,
        phi3: sym(&(s.kp.transpose() * phi * &s.kp)),
    }
}

fn member_blocks(b: &Blocks, tol: &TolerancePolicy) -> Result<bool> {
    if b.phi1.nrows() == 0 {
        return Ok(true);
    }
    let scale = b.phi1.norm().max(b.phi2.norm()).max(1.0);
    if min_eig(&b.phi1)? < -tol.psd_tol * scale {
        return Ok(false);
    }
    let p = &b.phi1 * pinv(&b.phi1, tol)?;
    let resid = (Matrix::identity(p.nrows(), p.nrows()) - p) * &b.phi2;
    Ok(resid.norm() <= RANGE_TOL * scale)
}

/// Membership of `w ⟂ im L_y` in `W_y`.
pub fn w_set_member(lift: &Lift, y: &Vector, w: &Vector) -> Result<bool> {
    let lq = lift.lq(y)?;
    w_member(&lq, &split(&lq)?, w, &lift.tol)
}

fn w_member(lq: &LQData, s: &Split, w: &Vector, tol: &TolerancePolicy) -> Result<bool> {
    let phi = lq.qform(w)?;
    member_blocks(&blocks(&phi, s), tol)
}

/// Quadratic witness `<w, ·> + α/2 ‖· - φ(y)‖²` for `w ∈ W_y \ (T_x X)*`.
pub fn witness_quadratic_cost(lift: &Lift, y: &Vector, w: &Vector, cone: &TangentCone) -> Result<WitnessCost> {
    let lq = lift.lq(y)?;
    let s = split(&lq)?;
    let phi = lq.qform(w).map_err(|e| LiftError::InvalidWitness(format!("w is not orthogonal to im L: {e}")))?;
    let b = blocks(&phi, &s);
    if !member_blocks(&b, &lift.tol)? {
        return Err(LiftError::InvalidWitness("w is not in W_y".into()));
    }
    let gap = cone.stationarity_gap(w);
    if gap > WITNESS_GAP {
        return Err(LiftError::InvalidWitness(format!("w is (nearly) dual to the tangent cone: gap {gap:e}")));
    }
    let alpha = if s.kp.ncols() == 0 {
        1.0
    } else {
        let psi = sym(&(s.kp.transpose() * lq.l.transpose() * &lq.l * &s.kp));
        let schur = if s.k.ncols() == 0 {
            -b.phi3.clone()
        } else {
            sym(&(b.phi2.transpose() * pinv(&b.phi1, &lift.tol)? * &b.phi2 - &b.phi3))
        };
        let top = sym_eig(&schur)?.0.last().copied().unwrap_or(0.0);
        (top / min_eig(&psi)?).max(0.0) + 1.0
    };
    let cost = Cost::quadratic_shift(w.clone(), alpha, lq.x.clone());
    let hess = hess_g(lift, y, &cost)?;
    Ok(WitnessCost {
        kind: WitnessKind::Quadratic { w: w.as_slice().to_vec(), alpha, center: lq.x.as_slice().to_vec() },
        verification: Verification {
            grad_norm_upstairs: grad_g(lift, y, &cost)?.norm(),
            hess_min_eig_upstairs: if hess.nrows() == 0 { 0.0 } else { min_eig(&hess)? },
            downstream_gap: gap,
            witness_direction: w.as_slice().to_vec(),
        },
    })
}

/// Whether `d ∈ Q_y(ker L_y) + im L_y`; `None` when neither a decomposition nor a
/// certificate of non-membership is found.
pub fn a_set_contains(lift: &Lift, y: &Vector, d: &Vector, settings: &CheckSettings) -> Result<Option<bool>> {
    let lq = lift.lq(y)?;
    let ctx = AContext::new(&lq)?;
    Ok(ctx.contains(d, settings.restarts, settings.seed))
}

/// `Q_y` restricted to `ker L_y` and read modulo `im L_y`.
struct AContext {
    coker: Matrix,
    /// `entries[i * k + j] = Cᵀ B(K_i, K_j)`.
    entries: Vec<Vector>,
    k: usize,
    span: Matrix,
}

impl AContext {
    fn new(lq: &LQData) -> Result<Self> {
        let coker = lq.coker_basis()?;
        let t = lq.tensor();
        let kb = &lq.ker_l;
        let k = kb.ncols();
        let d = lq.tangent_dim();
        let mut entries = Vec::with_capacity(k * k);
        for i in 0..k {
            for j in 0..k {
                let mut acc = Vector::zeros(lq.ambient_dim());
                for a in 0..d {
                    for b in 0..d {
                        let c = kb[(a, i)] * kb[(b, j)];
                        if c != 0.0 {
                            acc.axpy(c, t.entry(a, b), 1.0);
                        }
                    }
                }
                entries.push(coker.transpose() * acc);
            }
        }
        let span = if entries.is_empty() {
            Matrix::zeros(coker.ncols(), 0)
        } else {
            crate::numerics::range_basis(&Matrix::from_columns(&entries), &TolerancePolicy::default())?
        };
        Ok(Self { coker, entries, k, span })
    }

    fn eval(&self, s: &Vector) -> Vector {
        let mut out = Vector::zeros(self.coker.ncols());
        for i in 0..self.k {
            for j in 0..self.k {
                out.axpy(s[i] * s[j], &self.entries[i * self.k + j], 1.0);
            }
        }
        out
    }

    fn jac(&self, s: &Vector) -> Matrix {
        let mut j = Matrix::zeros(self.coker.ncols(), self.k);
        for i in 0..self.k {
            let mut col = Vector::zeros(self.coker.ncols());
            for l in 0..self.k {
                col.axpy(2.0 * s[l], &self.entries[i * self.k + l], 1.0);
            }
            j.set_column(i, &col);
        }
        j
    }

    fn form(&self, z: &Vector) -> Matrix {
        Matrix::from_fn(self.k, self.k, |i, j| z.dot(&self.entries[i * self.k + j]))
    }

    fn contains(&self, d: &Vector, restarts: usize, seed: u64) -> Option<bool> {
        let t = self.coker.transpose() * d;
        let scale = d.norm().max(1.0);
        if t.norm() <= 1e-9 * scale {
            return Some(true);
        }
        if self.k == 0 || self.span.ncols() == 0 {
            return Some(false);
        }
        // Targets outside the span of the tensor entries are unreachable.
        if (&t - &self.span * (self.span.transpose() * &t)).norm() > 1e-8 * scale {
            return Some(false);
        }
        // Dual certificate: z with <z, Q(v)> >= 0 on ker L but <z, t> < 0.
        let mut g = rng(seed);
        let mut certs = vec![-t.clone()];
        for _ in 0..8 {
            certs.push(gaussian_vector(&mut g, t.len()));
        }
        for z in &certs {
            if z.dot(&t) < -1e-9 * z.norm() * t.norm() && min_eig(&self.form(z)).map_or(false, |m| m >= -1e-12 * z.norm()) {
                return Some(false);
            }
        }
        // Levenberg-Marquardt on Σ s_i s_j P_ij = t.
        let tn = t.norm();
        for _ in 0..restarts {
            let mut s = gaussian_vector(&mut g, self.k) * tn.sqrt();
            let mut mu = 1e-3;
            for _ in 0..200 {
                let r = self.eval(&s) - &t;
                if r.norm() <= 1e-10 * scale {
                    return Some(true);
                }
                let j = self.jac(&s);
                let jt = j.transpose();
                let lhs = &jt * &j + Matrix::identity(self.k, self.k) * mu;
                let Some(step) = lhs.lu().solve(&(&jt * &r)) else { break };
                let s_new = &s - step;
                if (self.eval(&s_new) - &t).norm() < r.norm() {
                    s = s_new;
                    mu = (mu * 0.3).max(1e-15);
                } else {
                    mu *= 10.0;
                    if mu > 1e12 {
                        break;
                    }
                }
            }
        }
        None
    }
}

/// Covector candidates `w ⟂ im L_y` for the `W` and necessary-condition searches.
fn w_candidates(lq: &LQData, cone: &TangentCone, entry: Option<&CatalogEntry>, settings: &CheckSettings) -> Result<Vec<Vector>> {
    let coker = lq.coker_basis()?;
    let c = coker.ncols();
    if c == 0 {
        return Ok(vec![]);
    }
    let mut out = Vec::new();
    let mut push = |w: Vector| {
        if let Some(u) = unit(&coker * (coker.transpose() * w)) {
            out.push(u);
        }
    };
    for k in 0..c {
        push(coker.column(k).into_owned());
        push(-coker.column(k).into_owned());
    }
    let mut g = rng(derive_seed(settings.seed, 2));
    for _ in 0..settings.w_samples {
        push(&coker * gaussian_vector(&mut g, c));
    }
    for d in cone.sample_directions(settings.directions.min(100), derive_seed(settings.seed, 3)) {
        push(-d);
    }
    if let Some(e) = entry {
        for w in e.obstruction_candidates(&lq.y)? {
            push(w);
        }
    }
    Ok(out)
}

/// Worst certified gap among candidates, or `None`; counts uncertain cases.
struct GapSearch {
    worst: Option<(f64, Vector)>,
    members: usize,
    uncertain: usize,
}

fn search_gaps(cands: &[Vector], cone: &TangentCone, seed: u64, mut keep: impl FnMut(&Vector) -> Result<bool>) -> Result<GapSearch> {
    let mut out = GapSearch { worst: None, members: 0, uncertain: 0 };
    for (i, w) in cands.iter().enumerate() {
        if !keep(w)? {
            continue;
        }
        out.members += 1;
        let gap = cone.stationarity_gap(w);
        if gap >= -STATIONARY_TOL {
            continue;
        }
        let b = cone.gap_bounds(w, derive_seed(seed, i as u64));
        if b.upper < -STATIONARY_TOL {
            if out.worst.as_ref().is_none_or(|(g, _)| b.upper < *g) {
                out.worst = Some((b.upper, w.clone()));
            }
        } else if b.lower < -STATIONARY_TOL {
            out.uncertain += 1;
        }
    }
    Ok(out)
}

/// The four conditions of the "2⇒1" chain.
pub fn check_chain(
    lift: &Lift,
    y: &Vector,
    cone: &TangentCone,
    entry: Option<&CatalogEntry>,
    settings: &CheckSettings,
) -> Result<ChainReport> {
    let lq = lift.lq(y)?;
    let one = one_implies_one(&lq, cone, settings.seed)?;
    chain_from(lift, &lq, cone, entry, settings, one.verdict)
}

fn chain_from(
    lift: &Lift,
    lq: &LQData,
    cone: &TangentCone,
    entry: Option<&CatalogEntry>,
    settings: &CheckSettings,
    one: Verdict,
) -> Result<ChainReport> {
    let s = split(lq)?;
    let tol = lift.tol;
    let cands = w_candidates(lq, cone, entry, settings)?;

    let w_search = search_gaps(&cands, cone, settings.seed, |w| w_member(lq, &s, w, &tol))?;
    let mut w_condition = match (&w_search.worst, one) {
        (_, Verdict::Holds) => Finding::new(Verdict::Holds, "im L equals the tangent cone, so W ⊆ (im L)^⊥ = T*"),
        (Some((gap, w)), _) => Finding::new(Verdict::Fails, "member of W outside the dual cone").residual(*gap).witness(w),
        (None, _) if w_search.uncertain > 0 => {
            Finding::new(Verdict::Inconclusive, "gap bounds straddle the tolerance for some members of W")
        }
        (None, _) => Finding::new(Verdict::Holds, "every sampled member of W is dual to the tangent cone"),
    };
    w_condition.samples = cands.len();
    if w_condition.residual.is_none() {
        w_condition.residual = Some(w_search.members as f64);
        w_condition.note.push_str(&format!(" ({} of {} candidates in W)", w_search.members, cands.len()));
    }

    let necessary = if w_condition.verdict == Verdict::Holds {
        Finding::new(Verdict::Holds, "implied by the W condition")
    } else {
        let n_search = search_gaps(&cands, cone, settings.seed, |w| {
            let phi = lq.qform(w)?;
            Ok(phi.nrows() == 0 || min_eig(&phi)? >= -tol.psd_tol * phi.norm().max(1.0))
        })?;
        let f = match &n_search.worst {
            Some((gap, w)) => Finding::new(Verdict::Fails, "w ⟂ im L with ∇²φ_w ⪰ 0 outside the dual cone").residual(*gap).witness(w),
            None if n_search.uncertain > 0 => Finding::new(Verdict::Inconclusive, "gap bounds straddle the tolerance"),
            None => Finding::new(Verdict::Holds, "sampled w ⟂ im L with ∇²φ_w ⪰ 0 are dual to the tangent cone"),
        };
        f.samples(cands.len())
    };

    let (a_sufficient, b_dual_sufficient) = if w_condition.verdict == Verdict::Fails {
        (
            Finding::new(Verdict::Fails, "A ⊆ T implies W ⊆ T*, which fails"),
            Finding::new(Verdict::Fails, "B* ⊆ T* implies W ⊆ T*, which fails"),
        )
    } else {
        let a = a_condition(lq, cone, settings)?;
        let b = b_condition(lq, cone, entry)?;
        let b = if b.verdict == Verdict::Inconclusive && a.verdict == Verdict::Holds {
            Finding::new(Verdict::Holds, "implied by the A condition")
        } else {
            b
        };
        (a, b)
    };

    // Upgrades along the chain.
    if b_dual_sufficient.verdict == Verdict::Holds && w_condition.verdict == Verdict::Inconclusive {
        w_condition = Finding::new(Verdict::Holds, "implied by the B condition");
    }
    let necessary = if w_condition.verdict == Verdict::Holds && necessary.verdict != Verdict::Holds {
        Finding::new(Verdict::Holds, "implied by the W condition")
    } else {
        necessary
    };
    Ok(ChainReport { a_sufficient, b_dual_sufficient, w_condition, necessary })
}

fn a_condition(lq: &LQData, cone: &TangentCone, settings: &CheckSettings) -> Result<Finding> {
    let ctx = AContext::new(lq)?;
    let dirs = cone.sample_directions(settings.directions, derive_seed(settings.seed, 4));
    // Certificates are cheap; try them on every direction before any decomposition search.
    for (i, d) in dirs.iter().enumerate() {
        if ctx.contains(d, 0, derive_seed(settings.seed, 100 + i as u64)) == Some(false) {
            return Ok(Finding::new(Verdict::Fails, "cone direction outside Q(ker L) + im L").samples(i + 1).witness(d));
        }
    }
    let mut unknown = 0;
    for (i, d) in dirs.iter().enumerate() {
        match ctx.contains(d, settings.restarts, derive_seed(settings.seed, 100 + i as u64)) {
            Some(true) => {}
            Some(false) => {
                return Ok(Finding::new(Verdict::Fails, "cone direction outside Q(ker L) + im L").samples(i + 1).witness(d));
            }
            None => unknown += 1,
        }
    }
    Ok(if unknown > 0 {
        Finding::new(Verdict::Inconclusive, format!("{unknown} directions neither decomposed nor certified outside A"))
            .samples(dirs.len())
    } else {
        Finding::new(Verdict::Holds, "every sampled cone direction decomposes as Q(v) + Lu").samples(dirs.len())
    })
}

fn b_condition(lq: &LQData, cone: &TangentCone, entry: Option<&CatalogEntry>) -> Result<Finding> {
    let Some(e) = entry else {
        return Ok(Finding::new(Verdict::Inconclusive, "no degenerate-direction generator for a generic lift"));
    };
    let dirs = match e.degenerate_directions(&lq.y, 64) {
        Ok(d) => d,
        Err(LiftError::NoDegeneracy) | Err(LiftError::InvalidInput(_)) => {
            return Ok(Finding::new(Verdict::Inconclusive, "no degenerate directions available at this point"));
        }
        Err(e) => return Err(e),
    };
    // The certificate needs the constructive sequences to behave as claimed.
    let mut worst_q: f64 = 0.0;
    for d in &dirs {
        worst_q = worst_q.max((lq.q(&d.v) - &d.limit).norm());
    }
    if worst_q > 1e-9 {
        return Ok(Finding::new(Verdict::Inconclusive, "degenerate directions do not reproduce their limits").residual(worst_q));
    }
    let limits = Matrix::from_columns(&dirs.iter().map(|d| d.limit.clone()).collect::<Vec<_>>());
    let span = hcat(&limits, &lq.im_l);
    let tol = TolerancePolicy::default();
    let rest = complement_basis(&crate::numerics::range_basis(&span, &tol)?, lq.ambient_dim(), &tol)?;
    let n = dirs.len();
    if rest.ncols() == 0 {
        return Ok(Finding::new(Verdict::Holds, "degenerate limits and im L span everything, so B* = {0}").samples(n).residual(worst_q));
    }
    for k in 0..rest.ncols() {
        for sign in [1.0, -1.0] {
            let w = rest.column(k) * sign;
            if cone.stationarity_gap(&w) < -STATIONARY_TOL {
                return Ok(Finding::new(Verdict::Inconclusive, "B* bound is not inside the dual cone").samples(n));
            }
        }
    }
    Ok(Finding::new(Verdict::Holds, "orthogonal complement of the degenerate limits lies in the dual cone").samples(n))
}

/// Distances along one pathological sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlpRow {
    pub i: usize,
    pub x_distance: f64,
    /// Smallest distance from a sampled lift of `x_i` to `y`; `None` when `x_i` has no lift.
    pub best_lift_distance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlpEvidence {
    pub rows: Vec<SlpRow>,
    pub fiber_samples: usize,
    pub margin: f64,
}

impl SlpEvidence {
    pub fn supports_failure(&self) -> bool {
        self.rows.iter().all(|r| {
            r.x_distance <= 1.0 / r.i as f64 + 1e-12 && r.best_lift_distance.is_none_or(|d| d >= self.margin)
        })
    }
}

/// Indices used for sequence evidence.
pub const SLP_INDICES: [usize; 5] = [4, 8, 16, 32, 64];

/// Best-lift distances along the catalog's pathological sequence at `y`.
pub fn slp_evidence(entry: &CatalogEntry, y: &Vector, settings: &CheckSettings) -> Result<SlpEvidence> {
    let x = entry.lift.value(y)?;
    let mut rows = Vec::new();
    for &i in &SLP_INDICES {
        let xi = entry.pathological_sequence(y, i)?;
        let mut best: Option<f64> = None;
        for s in 0..settings.fiber_samples {
            match entry.lift_point(&xi, derive_seed(settings.seed, (i * 100_000 + s) as u64)) {
                Ok(yi) => {
                    let d = (&yi - y).norm();
                    best = Some(best.map_or(d, |b| b.min(d)));
                }
                // x_i outside the image of this lift (e.g. outside a chart): no lift at all.
                Err(LiftError::InvalidInput(_)) => {}
                Err(e) => return Err(e),
            }
        }
        rows.push(SlpRow { i, x_distance: (&xi - &x).norm(), best_lift_distance: best });
    }
    Ok(SlpEvidence { rows, fiber_samples: settings.fiber_samples, margin: SLP_MARGIN })
}

/// "local⇒local" from the catalog classification, with sequence evidence on failure.
pub fn local_to_local_verdict(entry: &CatalogEntry, y: &Vector, settings: &CheckSettings) -> Result<(Finding, Option<SlpEvidence>)> {
    let exp = entry.expected(y)?;
    Ok(match exp.local_to_local {
        Some(true) => (Finding::new(Verdict::Holds, "φ is open at y (classification)"), None),
        None => (Finding::new(Verdict::Inconclusive, "openness at y is not classified"), None),
        Some(false) => match slp_evidence(entry, y, settings) {
            Ok(ev) => {
                let worst = ev.rows.iter().filter_map(|r| r.best_lift_distance).fold(f64::INFINITY, f64::min);
                let mut f = Finding::new(Verdict::Fails, "φ is not open at y; pathological sequence attached").samples(ev.fiber_samples);
                if worst.is_finite() {
                    f = f.residual(worst);
                }
                if !ev.supports_failure() {
                    f.note.push_str(" (sequence evidence below the margin)");
                }
                (f, Some(ev))
            }
            Err(LiftError::NoPathology) => (Finding::new(Verdict::Fails, "φ is not open at y (classification)"), None),
            Err(e) => return Err(e),
        },
    })
}

/// Stable hexadecimal digest of the coordinates of a point.
pub fn point_digest(y: &Vector) -> String {
    let h = y.iter().fold(0xcbf29ce484222325u64, |h, v| {
        v.to_bits().to_le_bytes().iter().fold(h, |h, b| (h ^ *b as u64).wrapping_mul(0x100000001b3))
    });
    format!("{h:016x}")
}

/// Everything the checker says about one point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyReport {
    pub digest: String,
    pub lift: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub entry: Option<EntryId>,
    pub point: Vec<f64>,
    pub cone: String,
    pub rank_l: usize,
    pub tangent_dim: usize,
    pub local_to_local: Finding,
    pub one_to_one: Finding,
    pub two_to_one: Finding,
    pub chain: ChainReport,
    pub witnesses: Vec<WitnessCost>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slp: Option<SlpEvidence>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expected: Option<Expected>,
    /// Properties whose verdict differs from the classification (Inconclusive counts).
    pub mismatches: Vec<String>,
}

impl PropertyReport {
    pub fn verdict(&self, p: Property) -> Verdict {
        match p {
            Property::LocalToLocal => self.local_to_local.verdict,
            Property::OneToOne => self.one_to_one.verdict,
            Property::TwoToOne => self.two_to_one.verdict,
        }
    }

    pub fn witnesses_valid(&self) -> bool {
        self.witnesses.iter().all(|w| w.is_valid())
    }
}

/// Full check of a generic lift; "local⇒local" is reported Inconclusive.
pub fn check_lift(lift: &Lift, set: &crate::cones::SetDesc, y: &Vector, settings: &CheckSettings) -> Result<PropertyReport> {
    run_checks(lift, set, None, y, settings)
}

/// Full check of a catalog entry at `y`, compared against its classification.
pub fn check_point(entry: &CatalogEntry, y: &Vector, settings: &CheckSettings) -> Result<PropertyReport> {
    run_checks(&entry.lift, &entry.set, Some(entry), y, settings)
}

fn run_checks(
    lift: &Lift,
    set: &crate::cones::SetDesc,
    entry: Option<&CatalogEntry>,
    y: &Vector,
    settings: &CheckSettings,
) -> Result<PropertyReport> {
    let lq = lift.lq(y)?;
    let cone = set.cone_at(&lq.x, &lift.tol)?;
    let one = one_implies_one(&lq, &cone, settings.seed)?;
    let chain = chain_from(lift, &lq, &cone, entry, settings, one.verdict)?;
    let mut witnesses = Vec::new();
    if one.verdict == Verdict::Fails {
        witnesses.push(witness_linear_cost(lift, y, &cone, settings.seed)?);
    }
    if chain.w_condition.verdict == Verdict::Fails {
        let w = Vector::from_column_slice(chain.w_condition.witness.as_deref().unwrap_or_default());
        witnesses.push(witness_quadratic_cost(lift, y, &w, &cone)?);
    }
    let (local, slp, expected) = match entry {
        Some(e) => {
            let (f, ev) = local_to_local_verdict(e, y, settings)?;
            (f, ev, Some(e.expected(y)?))
        }
        None => (Finding::new(Verdict::Inconclusive, "openness is not decidable for a generic lift"), None, None),
    };
    let two = chain.w_condition.clone();
    let mut report = PropertyReport {
        digest: point_digest(y),
        lift: lift.name.clone(),
        entry: entry.map(|e| e.id.clone()),
        point: y.as_slice().to_vec(),
        cone: cone.kind().to_string(),
        rank_l: lq.rank,
        tangent_dim: lq.tangent_dim(),
        local_to_local: local,
        one_to_one: one,
        two_to_one: two,
        chain,
        witnesses,
        slp,
        expected,
        mismatches: vec![],
    };
    if let Some(exp) = expected {
        for p in Property::ALL {
            if let Some(want) = exp.get(p) {
                if report.verdict(p).as_bool() != Some(want) {
                    report.mismatches.push(format!("{p}: expected {}, got {:?}", if want { "Holds" } else { "Fails" }, report.verdict(p)));
                }
            }
        }
    }
    Ok(report)
}
