//! Calculus of `g = f∘φ` upstairs and a second-order local solver.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::cones::TangentCone;
use crate::error::{invalid, LiftError, Result};
use crate::lift::{LQData, Lift};
use crate::numerics::{gaussian_vector, loglog_slope, random_unit, rng, sym, sym_eig, Matrix, Vector};

type ValueFn = Arc<dyn Fn(&Vector) -> f64 + Send + Sync>;
type GradFn = Arc<dyn Fn(&Vector) -> Vector + Send + Sync>;
type HessVecFn = Arc<dyn Fn(&Vector, &Vector) -> Vector + Send + Sync>;

/// What a cost is, for reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CostTag {
    Linear { w: Vec<f64> },
    QuadraticShift { w: Vec<f64>, alpha: f64, center: Vec<f64> },
    Custom { name: String },
}

/// A smooth downstairs cost `f` given by value, gradient and Hessian-vector oracles.
#[derive(Clone)]
pub struct Cost {
    pub dim: usize,
    pub tag: CostTag,
    value: ValueFn,
    grad: GradFn,
    hess_vec: HessVecFn,
}

impl fmt::Debug for Cost {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Cost").field("dim", &self.dim).field("tag", &self.tag).finish()
    }
}

impl Cost {
    pub fn custom(
        name: impl Into<String>,
        dim: usize,
        value: impl Fn(&Vector) -> f64 + Send + Sync + 'static,
        grad: impl Fn(&Vector) -> Vector + Send + Sync + 'static,
        hess_vec: impl Fn(&Vector, &Vector) -> Vector + Send + Sync + 'static,
    ) -> Self {
        Self {
            dim,
            tag: CostTag::Custom { name: name.into() },
            value: Arc::new(value),
            grad: Arc::new(grad),
            hess_vec: Arc::new(hess_vec),
        }
    }

    /// `f(x) = <w, x>`.
    pub fn linear(w: Vector) -> Self {
        let dim = w.len();
        let (w1, w2) = (w.clone(), w.clone());
        let mut c = Self::custom("linear", dim, move |x| w1.dot(x), move |_| w2.clone(), move |_, u| Vector::zeros(u.len()));
        c.tag = CostTag::Linear { w: w.as_slice().to_vec() };
        c
    }

    /// `f(x) = <w, x> + α/2 ‖x - center‖²`.
    pub fn quadratic_shift(w: Vector, alpha: f64, center: Vector) -> Self {
        let dim = w.len();
        let (w1, w2, c1, c2) = (w.clone(), w.clone(), center.clone(), center.clone());
        let mut c = Self::custom(
            "quadratic_shift",
            dim,
            move |x| w1.dot(x) + 0.5 * alpha * (x - &c1).norm_squared(),
            move |x| &w2 + (x - &c2) * alpha,
            move |_, u| u * alpha,
        );
        c.tag = CostTag::QuadraticShift { w: w.as_slice().to_vec(), alpha, center: center.as_slice().to_vec() };
        c
    }

    /// `f(x) = ½ xᵀAx + bᵀx + (c/4) Σ x_i⁴` with `A` symmetrized.
    pub fn quadratic_quartic(a: Matrix, b: Vector, quartic: f64) -> Self {
        let a = sym(&a);
        let (a1, a2, a3) = (a.clone(), a.clone(), a);
        let (b1, b2) = (b.clone(), b.clone());
        Self::custom(
            if quartic == 0.0 { "quadratic" } else { "quadratic_quartic" },
            b.len(),
            move |x| 0.5 * x.dot(&(&a1 * x)) + b1.dot(x) + 0.25 * quartic * x.iter().map(|v| v.powi(4)).sum::<f64>(),
            move |x| &a2 * x + &b2 + x.map(|v| quartic * v.powi(3)),
            move |x, u| &a3 * u + x.zip_map(u, |xi, ui| 3.0 * quartic * xi * xi * ui),
        )
    }

    pub fn constant(dim: usize, c: f64) -> Self {
        Self::custom("constant", dim, move |_| c, move |x| Vector::zeros(x.len()), |_, u| Vector::zeros(u.len()))
    }

    pub fn value(&self, x: &Vector) -> f64 {
        (self.value)(x)
    }

    pub fn grad(&self, x: &Vector) -> Vector {
        (self.grad)(x)
    }

    pub fn hess_vec(&self, x: &Vector, u: &Vector) -> Vector {
        (self.hess_vec)(x, u)
    }

    fn check_dim(&self, lift: &Lift) -> Result<()> {
        if self.dim != lift.map.out_dim() {
            return invalid(format!("cost on R^{} but the lift maps into R^{}", self.dim, lift.map.out_dim()));
        }
        Ok(())
    }
}

/// Solver settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverParams {
    pub grad_tol: f64,
    /// Accepts `λ_min(∇²g) ≥ -hess_tol`.
    pub hess_tol: f64,
    pub max_iters: usize,
    pub perturbation_radius: f64,
    pub seed: u64,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self { grad_tol: 1e-9, hess_tol: 1e-7, max_iters: 5000, perturbation_radius: 1e-3, seed: 0 }
    }
}

impl SolverParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.grad_tol > 0.0 && self.hess_tol > 0.0 && self.max_iters > 0 && self.perturbation_radius > 0.0;
        if !ok {
            return invalid("solver tolerances, iteration cap and perturbation radius must be positive");
        }
        Ok(())
    }
}

fn grad_from(lq: &LQData, cost: &Cost) -> Vector {
    lq.l.transpose() * cost.grad(&lq.x)
}

fn hess_from(lq: &LQData, cost: &Cost) -> Matrix {
    let d = lq.tangent_dim();
    let mut hl = Matrix::zeros(lq.ambient_dim(), d);
    for k in 0..d {
        hl.set_column(k, &cost.hess_vec(&lq.x, &lq.l.column(k).into_owned()));
    }
    sym(&(lq.l.transpose() * hl + lq.tensor().form(&cost.grad(&lq.x))))
}

/// `∇g(y) = L_yᵀ ∇f(φ(y))` in tangent-basis coordinates.
pub fn grad_g(lift: &Lift, y: &Vector, cost: &Cost) -> Result<Vector> {
    cost.check_dim(lift)?;
    Ok(grad_from(&lift.lq(y)?, cost))
}

/// `∇²g(y)` in tangent-basis coordinates, from `L` and `Q`.
pub fn hess_g(lift: &Lift, y: &Vector, cost: &Cost) -> Result<Matrix> {
    cost.check_dim(lift)?;
    Ok(hess_from(&lift.lq(y)?, cost))
}

fn ambient_grad(lift: &Lift, y: &Vector, cost: &Cost) -> Result<Vector> {
    let lq = lift.lq(y)?;
    Ok(&lq.basis * grad_from(&lq, cost))
}

/// Hessian from central differences of the ambient gradient along curves, projected to `T_yM`.
pub fn hess_g_fd(lift: &Lift, y: &Vector, cost: &Cost, h: f64) -> Result<Matrix> {
    cost.check_dim(lift)?;
    let basis = lift.manifold.tangent_basis(y, &lift.tol)?;
    let d = basis.ncols();
    let mut out = Matrix::zeros(d, d);
    for k in 0..d {
        let v = basis.column(k).into_owned();
        let gp = ambient_grad(lift, &lift.curve(y, &v, h)?, cost)?;
        let gm = ambient_grad(lift, &lift.curve(y, &v, -h)?, cost)?;
        out.set_column(k, &(basis.transpose() * (gp - gm) / (2.0 * h)));
    }
    Ok(sym(&out))
}

/// Taylor steps used by [`fd_validate`].
pub const FD_STEPS: [f64; 4] = [1e-1, 1e-2, 1e-3, 1e-4];

/// Log-log slopes of Taylor remainders of `g` along a curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FdReport {
    pub ts: Vec<f64>,
    /// `|g(c(t)) - g(y) - t <∇g, v>|`, expected `O(t²)`.
    pub grad_residuals: Vec<f64>,
    /// `|g(c(t)) - g(y) - t <∇g, v> - t²/2 ∇²g[v, v]|`, expected `O(t³)`.
    pub hess_residuals: Vec<f64>,
    pub grad_slope: f64,
    pub hess_slope: f64,
    /// Every residual sits at rounding level, so slopes carry no information.
    pub at_machine_precision: bool,
}

impl FdReport {
    pub fn passes(&self) -> bool {
        self.at_machine_precision || (self.grad_slope >= 1.9 && self.hess_slope >= 2.9)
    }
}

/// Slope over the residuals above the rounding floor.
fn robust_slope(ts: &[f64], rs: &[f64], floor: f64) -> Option<f64> {
    let (t, r): (Vec<f64>, Vec<f64>) = ts.iter().zip(rs).filter(|(_, r)| **r > floor).map(|(t, r)| (*t, *r)).unzip();
    (t.len() >= 2).then(|| loglog_slope(&t, &r))
}

/// Checks `grad_g` and `hess_g` against the cost along a random curve through `y`.
pub fn fd_validate(lift: &Lift, cost: &Cost, y: &Vector, seed: u64) -> Result<FdReport> {
    cost.check_dim(lift)?;
    let lq = lift.lq(y)?;
    let d = lq.tangent_dim();
    if d == 0 {
        return invalid("zero-dimensional manifold");
    }
    let c = random_unit(&mut rng(seed), d);
    let v = &lq.basis * &c;
    let g0 = cost.value(&lq.x);
    let slope = grad_from(&lq, cost).dot(&c);
    let curv = c.dot(&(hess_from(&lq, cost) * &c));
    let mut r1 = Vec::new();
    let mut r2 = Vec::new();
    // Both directions, so a one-sided cancellation of leading terms cannot fake a slope.
    for &t in &FD_STEPS {
        let (mut a, mut b) = (0f64, 0f64);
        for s in [t, -t] {
            let gt = cost.value(&lift.value(&lift.curve(y, &v, s)?)?);
            a = a.max((gt - g0 - s * slope).abs());
            b = b.max((gt - g0 - s * slope - 0.5 * s * s * curv).abs());
        }
        r1.push(a);
        r2.push(b);
    }
    // Curve evaluation itself carries errors near 1e-13.
    let floor = 1e-11 * g0.abs().max(1.0);
    let s1 = robust_slope(&FD_STEPS, &r1, floor);
    let s2 = robust_slope(&FD_STEPS, &r2, floor);
    Ok(FdReport {
        ts: FD_STEPS.to_vec(),
        at_machine_precision: r1.iter().chain(&r2).all(|r| *r <= floor),
        grad_slope: s1.unwrap_or(f64::INFINITY),
        hess_slope: s2.unwrap_or(f64::INFINITY),
        grad_residuals: r1,
        hess_residuals: r2,
    })
}

/// `hess_g`, replaced by [`hess_g_fd`] when the Taylor check fails; the flag says which.
pub fn hess_g_checked(lift: &Lift, y: &Vector, cost: &Cost, seed: u64) -> Result<(Matrix, bool)> {
    if fd_validate(lift, cost, y, seed)?.passes() {
        Ok((hess_g(lift, y, cost)?, false))
    } else {
        Ok((hess_g_fd(lift, y, cost, 1e-4)?, true))
    }
}

/// One row of the solver trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iter: usize,
    pub grad_norm: f64,
    pub min_eig: f64,
    pub value: f64,
}

/// Output of [`find_second_order_point`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverResult {
    pub y: Vec<f64>,
    pub value: f64,
    pub grad_norm: f64,
    pub min_eig: f64,
    pub iters: usize,
    pub trace: Vec<TraceRow>,
}

impl SolverResult {
    pub fn point(&self) -> Vector {
        Vector::from_column_slice(&self.y)
    }
}

struct Probe {
    y: Vector,
    lq: LQData,
    value: f64,
}

fn probe(lift: &Lift, cost: &Cost, y: Vector) -> Result<Probe> {
    let lq = lift.lq(&y)?;
    let value = cost.value(&lq.x);
    if !value.is_finite() {
        return invalid("cost is not finite");
    }
    Ok(Probe { y, lq, value })
}

/// Backtracking along `t -> R(y + t v)`; accepts sufficient decrease `value(t) <= value(0) - c t`.
fn backtrack(lift: &Lift, cost: &Cost, at: &Probe, v: &Vector, t0: f64, decrease: impl Fn(f64) -> f64) -> Option<Probe> {
    let zero = Vector::zeros(v.len());
    let mut t = t0;
    for _ in 0..60 {
        if let Ok(y) = lift.manifold.curve(&at.y, v, &zero, t, &lift.tol) {
            if let Ok(p) = probe(lift, cost, y) {
                if p.value <= at.value - decrease(t) {
                    return Some(p);
                }
            }
        }
        t *= 0.5;
    }
    None
}

fn keep(best: &mut Option<Probe>, p: Option<Probe>) {
    if let Some(p) = p {
        if best.as_ref().is_none_or(|c| p.value < c.value) {
            *best = Some(p);
        }
    }
}

/// Approximate 2-critical point of `g` from `y0`.
///
/// Each iteration tries a Newton step when the Hessian is positive definite, a steepest
/// descent step with Armijo backtracking, and, under negative curvature, a step along the
/// minimal eigenvector with both signs. The lowest value wins.
pub fn find_second_order_point(lift: &Lift, cost: &Cost, y0: &Vector, params: &SolverParams) -> Result<SolverResult> {
    params.validate()?;
    cost.check_dim(lift)?;
    let mut g = rng(params.seed);
    let mut at = probe(lift, cost, y0.clone())?;
    let mut trace = Vec::new();
    let mut best: Option<(f64, Vector)> = None;
    for iter in 0..params.max_iters {
        let grad = grad_from(&at.lq, cost);
        let hess = hess_from(&at.lq, cost);
        let (vals, vecs) = sym_eig(&hess)?;
        let lmin = vals.first().copied().unwrap_or(0.0);
        let gn = grad.norm();
        trace.push(TraceRow { iter, grad_norm: gn, min_eig: lmin, value: at.value });
        if best.as_ref().is_none_or(|(b, _)| gn < *b) {
            best = Some((gn, at.y.clone()));
        }
        if gn <= params.grad_tol && lmin >= -params.hess_tol {
            return Ok(SolverResult {
                y: at.y.as_slice().to_vec(),
                value: at.value,
                grad_norm: gn,
                min_eig: lmin,
                iters: iter,
                trace,
            });
        }
        let basis = &at.lq.basis;
        let negative = lmin < -params.hess_tol;
        // Symmetries of the lift leave flat directions, curved by O(|grad|) away from
        // critical points, so Newton acts on the clearly positive part only.
        let flat = 1e-8 * vals.last().copied().unwrap_or(1.0).abs().max(1.0);
        let newton = lmin >= -params.hess_tol.max(gn.sqrt()) && vals.iter().any(|&l| l > flat);
        let mut next: Option<Probe> = None;
        if newton {
            let inv_vals = Vector::from_iterator(vals.len(), vals.iter().map(|&l| if l > flat { 1.0 / l } else { 0.0 }));
            let inv = &vecs * Matrix::from_diagonal(&inv_vals) * vecs.transpose();
            let step = basis * -(inv * &grad);
            // Near the solution the decrease drops below rounding; accept a full step that
            // contracts the gradient without increasing the value beyond rounding.
            let full = lift.manifold.curve(&at.y, &step, &Vector::zeros(step.len()), 1.0, &lift.tol).ok().and_then(|y| probe(lift, cost, y).ok());
            let contracting = full.filter(|p| {
                p.value <= at.value + 1e-14 * at.value.abs().max(1.0) && grad_from(&p.lq, cost).norm() <= 0.5 * gn
            });
            if contracting.is_some() {
                keep(&mut next, contracting);
            } else {
                let slope = -grad.dot(&(basis.transpose() * &step));
                keep(&mut next, backtrack(lift, cost, &at, &step, 1.0, |t| 1e-4 * t * slope));
            }
        }
        if next.is_none() && gn > 0.0 {
            let t0 = 1.0 / hess.norm().max(1e-12);
            keep(&mut next, backtrack(lift, cost, &at, &(basis * -&grad), 4.0 * t0, |t| 1e-4 * t * gn * gn));
        }
        if negative {
            let e = vecs.column(0).into_owned();
            for sign in [1.0, -1.0] {
                let dir = basis * (&e * sign);
                keep(&mut next, backtrack(lift, cost, &at, &dir, 1.0, |t| 0.25 * t * t * lmin.abs()));
            }
        }
        at = match next {
            Some(p) => p,
            None => {
                // No decrease at rounding level: perturb within the radius and retry.
                let dir = basis * gaussian_vector(&mut g, basis.ncols());
                let dir = &dir / dir.norm().max(1e-300) * params.perturbation_radius;
                let zero = Vector::zeros(dir.len());
                match lift.manifold.curve(&at.y, &dir, &zero, 1.0, &lift.tol).and_then(|y| probe(lift, cost, y)) {
                    Ok(p) if gn > params.grad_tol || negative => p,
                    _ => break,
                }
            }
        };
    }
    let (grad_norm, y) = best.map(|(g, y)| (g, y)).unwrap_or((f64::INFINITY, at.y.clone()));
    let min_eig = sym_eig(&hess_g(lift, &y, cost)?)?.0.first().copied().unwrap_or(0.0);
    Err(LiftError::NotConverged { iters: params.max_iters, grad_norm, min_eig, best: y.as_slice().to_vec(), trace })
}

/// Stationarity gap of `∇f(φ(y))` for the tangent cone at `φ(y)`.
pub fn downstream_stationarity(lift: &Lift, cost: &Cost, y: &Vector, cone: &TangentCone) -> Result<f64> {
    cost.check_dim(lift)?;
    let x = lift.value(y)?;
    Ok(cone.stationarity_gap(&cost.grad(&x)))
}
