//! Downstairs sets and their tangent cones.
//!
//! Matrix-valued sets are flattened column-major (see [`crate::numerics::vec_of`]).
//! Symmetric sets live in the full space `R^{n x n}`, so their tangent cones
//! contain only symmetric matrices while their duals also contain every
//! skew-symmetric matrix.
//!
//! Stationarity gaps are `inf { <w, v> : v in K, ||v|| <= 1 } = -||P_K(-w)||`,
//! computed with exact projections. For unions of convex cones `P_K` picks the
//! component with the longest projection.

use std::fmt;
use std::sync::Arc;

use rand::Rng;

use crate::error::{invalid, LiftError, Result};
use crate::manifold::SmoothMap;
use crate::numerics::{
    block_diag, complement_basis, derive_seed, gaussian_matrix, gaussian_vector, kernel_basis,
    mat_of, nnls, pinv, random_unit, range_basis, rng, skew, svd, sym, sym_eig, vec_of, Matrix,
    Rng64, TolerancePolicy, Vector,
};

/// A point belongs to a set when its residual is below this (times `max(1, ||x||)`).
pub const FEASIBILITY_TOL: f64 = 1e-9;
/// Inequalities with slack below this are treated as active.
pub const ACTIVE_TOL: f64 = 1e-10;
/// `w` is treated as a dual member (x stationary) when its gap is at least `-STATIONARY_TOL`.
pub const STATIONARY_TOL: f64 = 1e-6;
/// Largest displacement used by [`empirical_tangents`].
pub const EMPIRICAL_RADIUS: f64 = 1e-4;

/// Data of a rank-constrained SDP feasible set `{X ⪰ 0, rank X <= r, <A_i, X> = b_i}`.
#[derive(Debug, Clone)]
pub struct SdpData {
    pub n: usize,
    pub r: usize,
    /// Symmetric `n x n` constraint matrices.
    pub a: Vec<Matrix>,
    pub b: Vec<f64>,
}

impl SdpData {
    pub fn new(n: usize, r: usize, a: Vec<Matrix>, b: Vec<f64>) -> Result<Self> {
        if a.len() != b.len() {
            return invalid("number of constraint matrices and right-hand sides differ");
        }
        if r == 0 || r > n {
            return invalid(format!("rank bound {r} must be in 1..={n}"));
        }
        if a.iter().any(|ai| ai.shape() != (n, n)) {
            return invalid("constraint matrices must be n x n");
        }
        let a = a.iter().map(sym).collect();
        Ok(Self { n, r, a, b })
    }

    pub fn constraint_rows(&self) -> Matrix {
        let mut rows = Matrix::zeros(self.a.len(), self.n * self.n);
        for (i, ai) in self.a.iter().enumerate() {
            rows.set_row(i, &vec_of(ai).transpose());
        }
        rows
    }

    /// `h_i(R) = <A_i R, R> - b_i`.
    pub fn factor_residual(&self, r: &Matrix) -> Vector {
        Vector::from_iterator(
            self.a.len(),
            self.a.iter().zip(&self.b).map(|(ai, bi)| (ai * r).dot(r) - bi),
        )
    }

    /// Jacobian of `R -> h(R)` with rows `vec(2 A_i R)^T`.
    pub fn factor_jacobian(&self, r: &Matrix) -> Matrix {
        let mut j = Matrix::zeros(self.a.len(), r.len());
        for (i, ai) in self.a.iter().enumerate() {
            j.set_row(i, &vec_of(&(ai * r * 2.0)).transpose());
        }
        j
    }

    /// Gauss-Newton projection of a factor onto `{h(R) = 0}`.
    pub fn project_factor(&self, r: &Matrix) -> Option<Matrix> {
        let tol = TolerancePolicy::default();
        let mut r = r.clone();
        for _ in 0..60 {
            let h = self.factor_residual(&r);
            if !h.iter().all(|v| v.is_finite()) {
                return None;
            }
            if h.norm() < 1e-13 * r.norm_squared().max(1.0) {
                return Some(r);
            }
            let step = pinv(&self.factor_jacobian(&r), &tol).ok()? * h;
            r -= mat_of(step.as_slice(), self.n, self.r);
        }
        None
    }

    /// An `n x r` factor `R` with `R R^T = X`.
    pub fn factor_of(&self, x: &Matrix) -> Result<Matrix> {
        let (vals, vecs) = sym_eig(x)?;
        let mut r = Matrix::zeros(self.n, self.r);
        for k in 0..self.r.min(self.n) {
            let idx = self.n - 1 - k;
            let lam = vals[idx].max(0.0);
            r.set_column(k, &(vecs.column(idx) * lam.sqrt()));
        }
        Ok(r)
    }
}

/// Downstairs sets `X`.
#[derive(Clone)]
pub enum SetDesc {
    /// Probability simplex in `R^n`.
    Simplex(usize),
    /// `n x m` matrices whose columns lie in the simplex.
    StochasticMatrices(usize, usize),
    /// Closed unit ball in `R^n`.
    Ball(usize),
    /// Closed unit disk; identical to `Ball(n)` and kept for naming.
    Disk(usize),
    Annulus { n: usize, r1: f64, r2: f64 },
    Orthant(usize),
    BoundedRank { m: usize, n: usize, r: usize },
    PsdBoundedRank { n: usize, r: usize },
    SmoothSdpSlice(Arc<SdpData>),
    /// `{x in R^2 : x_2^2 = x_1^2 (x_1 + 1)}`.
    NodalCubic,
    /// Tensors of CP rank at most one with the given mode sizes.
    CpRank1(Vec<usize>),
    Product(Vec<SetDesc>),
    /// `{x : F(x) in Z}`.
    Preimage { f: Arc<dyn SmoothMap>, inner: Box<SetDesc> },
}

impl fmt::Debug for SetDesc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Simplex(n) => write!(f, "Simplex({n})"),
            Self::StochasticMatrices(n, m) => write!(f, "StochasticMatrices({n},{m})"),
            Self::Ball(n) => write!(f, "Ball({n})"),
            Self::Disk(n) => write!(f, "Disk({n})"),
            Self::Annulus { n, r1, r2 } => write!(f, "Annulus({n},{r1},{r2})"),
            Self::Orthant(n) => write!(f, "Orthant({n})"),
            Self::BoundedRank { m, n, r } => write!(f, "BoundedRank({m},{n},{r})"),
            Self::PsdBoundedRank { n, r } => write!(f, "PsdBoundedRank({n},{r})"),
            Self::SmoothSdpSlice(d) => write!(f, "SmoothSdpSlice(n={}, r={}, m={})", d.n, d.r, d.a.len()),
            Self::NodalCubic => write!(f, "NodalCubic"),
            Self::CpRank1(dims) => write!(f, "CpRank1({dims:?})"),
            Self::Product(parts) => f.debug_tuple("Product").field(parts).finish(),
            Self::Preimage { inner, .. } => f.debug_tuple("Preimage").field(inner).finish(),
        }
    }
}

fn scale_of(x: &Vector) -> f64 {
    x.norm().max(1.0)
}

/// Euclidean projection onto the probability simplex.
pub fn project_simplex(z: &Vector) -> Vector {
    let n = z.len();
    let mut s: Vec<f64> = z.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (k, &v) in s.iter().enumerate() {
        cum += v;
        let t = (cum - 1.0) / (k + 1) as f64;
        if v - t > 0.0 {
            theta = t;
        }
    }
    Vector::from_fn(n, |i, _| (z[i] - theta).max(0.0))
}

/// Nearest PSD matrix of rank at most `r` to the symmetric part of `z`.
pub fn project_psd_rank(z: &Matrix, r: usize) -> Result<Matrix> {
    let n = z.nrows();
    let (vals, vecs) = sym_eig(z)?;
    let mut out = Matrix::zeros(n, n);
    for k in 0..r.min(n) {
        let idx = n - 1 - k;
        if vals[idx] > 0.0 {
            out += vecs.column(idx) * vecs.column(idx).transpose() * vals[idx];
        }
    }
    Ok(out)
}

/// Nearest matrix of rank at most `r`.
pub fn project_rank(z: &Matrix, r: usize) -> Result<Matrix> {
    let d = svd(z)?;
    let mut out = Matrix::zeros(z.nrows(), z.ncols());
    for k in 0..r.min(d.s.len()) {
        out += d.u.column(k) * d.v.column(k).transpose() * d.s[k];
    }
    Ok(out)
}

impl SetDesc {
    pub fn dim(&self) -> usize {
        match self {
            Self::Simplex(n) | Self::Ball(n) | Self::Disk(n) | Self::Orthant(n) => *n,
            Self::StochasticMatrices(n, m) => n * m,
            Self::Annulus { n, .. } => *n,
            Self::BoundedRank { m, n, .. } => m * n,
            Self::PsdBoundedRank { n, .. } => n * n,
            Self::SmoothSdpSlice(d) => d.n * d.n,
            Self::NodalCubic => 2,
            Self::CpRank1(dims) => dims.iter().product(),
            Self::Product(parts) => parts.iter().map(|p| p.dim()).sum(),
            Self::Preimage { f, .. } => f.in_dim(),
        }
    }

    fn simplex_parts(&self) -> Option<Vec<SetDesc>> {
        match self {
            Self::StochasticMatrices(n, m) => Some(vec![Self::Simplex(*n); *m]),
            _ => None,
        }
    }

    fn split(parts: &[SetDesc], x: &Vector) -> Vec<Vector> {
        let mut off = 0;
        parts
            .iter()
            .map(|p| {
                let b = x.rows(off, p.dim()).into_owned();
                off += p.dim();
                b
            })
            .collect()
    }

    /// Violation of the defining relations (0 on the set).
    pub fn residual(&self, x: &Vector) -> f64 {
        if x.len() != self.dim() {
            return f64::INFINITY;
        }
        match self {
            Self::Simplex(_) => {
                let neg: f64 = x.iter().map(|v| (-v).max(0.0)).sum();
                (x.sum() - 1.0).abs() + neg
            }
            Self::StochasticMatrices(..) => {
                let parts = self.simplex_parts().unwrap();
                Self::split(&parts, x).iter().zip(&parts).map(|(xi, p)| p.residual(xi)).sum()
            }
            Self::Ball(_) | Self::Disk(_) => (x.norm() - 1.0).max(0.0),
            Self::Annulus { r1, r2, .. } => {
                let nx = x.norm();
                (r1 - nx).max(0.0) + (nx - r2).max(0.0)
            }
            Self::Orthant(_) => x.iter().map(|v| (-v).max(0.0)).sum(),
            Self::BoundedRank { m, n, r } => {
                let d = match svd(&mat_of(x.as_slice(), *m, *n)) {
                    Ok(d) => d,
                    Err(_) => return f64::INFINITY,
                };
                d.s.get(*r).copied().unwrap_or(0.0)
            }
            Self::PsdBoundedRank { n, r } => psd_rank_residual(&mat_of(x.as_slice(), *n, *n), *r),
            Self::SmoothSdpSlice(d) => {
                let xm = mat_of(x.as_slice(), d.n, d.n);
                psd_rank_residual(&xm, d.r)
                    + d.a.iter().zip(&d.b).map(|(ai, bi)| (ai.dot(&xm) - bi).abs()).sum::<f64>()
            }
            Self::NodalCubic => (x[1] * x[1] - x[0] * x[0] * (x[0] + 1.0)).abs(),
            Self::CpRank1(dims) => (0..dims.len())
                .map(|k| {
                    svd(&unfold(x, dims, k))
                        .map(|d| d.s.get(1).copied().unwrap_or(0.0))
                        .unwrap_or(f64::INFINITY)
                })
                .fold(0.0, f64::max),
            Self::Product(parts) => Self::split(parts, x).iter().zip(parts).map(|(xi, p)| p.residual(xi)).sum(),
            Self::Preimage { f, inner } => inner.residual(&f.value(x)),
        }
    }

    pub fn contains(&self, x: &Vector) -> bool {
        self.residual(x) <= FEASIBILITY_TOL * scale_of(x)
    }

    /// Euclidean projection onto the set, when a closed form exists.
    pub fn project(&self, z: &Vector) -> Option<Vector> {
        match self {
            Self::Simplex(_) => Some(project_simplex(z)),
            Self::StochasticMatrices(..) => {
                let parts = self.simplex_parts().unwrap();
                let blocks: Vec<Vector> = Self::split(&parts, z).iter().map(project_simplex).collect();
                Some(crate::manifold::concat(&blocks))
            }
            Self::Ball(_) | Self::Disk(_) => {
                let nz = z.norm();
                Some(if nz > 1.0 { z / nz } else { z.clone() })
            }
            Self::Annulus { r1, r2, .. } => {
                let nz = z.norm();
                Some(if nz < *r1 {
                    if nz == 0.0 {
                        let mut e = Vector::zeros(z.len());
                        e[0] = *r1;
                        e
                    } else {
                        z * (r1 / nz)
                    }
                } else if nz > *r2 {
                    z * (r2 / nz)
                } else {
                    z.clone()
                })
            }
            Self::Orthant(_) => Some(z.map(|v| v.max(0.0))),
            Self::BoundedRank { m, n, r } => project_rank(&mat_of(z.as_slice(), *m, *n), *r).ok().map(|p| vec_of(&p)),
            Self::PsdBoundedRank { n, r } => {
                project_psd_rank(&mat_of(z.as_slice(), *n, *n), *r).ok().map(|p| vec_of(&p))
            }
            Self::Product(parts) => {
                let blocks = Self::split(parts, z)
                    .iter()
                    .zip(parts)
                    .map(|(zi, p)| p.project(zi))
                    .collect::<Option<Vec<_>>>()?;
                Some(crate::manifold::concat(&blocks))
            }
            _ => None,
        }
    }

    /// Tangent cone at a feasible point.
    pub fn cone_at(&self, x: &Vector, tol: &TolerancePolicy) -> Result<TangentCone> {
        if x.len() != self.dim() {
            return invalid(format!("point of length {} for a set in R^{}", x.len(), self.dim()));
        }
        let res = self.residual(x);
        if res > FEASIBILITY_TOL * scale_of(x) {
            return invalid(format!("point is infeasible (residual {res:e})"));
        }
        let n = self.dim();
        let cone = match self {
            Self::Simplex(_) => {
                let eq = Matrix::from_element(1, n, 1.0);
                let active: Vec<usize> = (0..n).filter(|&i| x[i] <= ACTIVE_TOL).collect();
                let mut ineq = Matrix::zeros(active.len(), n);
                for (row, &i) in active.iter().enumerate() {
                    ineq[(row, i)] = 1.0;
                }
                TangentCone::Polyhedral { eq, ineq }
            }
            Self::StochasticMatrices(..) => {
                let parts = self.simplex_parts().unwrap();
                let cones = Self::split(&parts, x)
                    .iter()
                    .zip(&parts)
                    .map(|(xi, p)| p.cone_at(xi, tol))
                    .collect::<Result<Vec<_>>>()?;
                TangentCone::Product(cones)
            }
            Self::Ball(_) | Self::Disk(_) => {
                if (x.norm() - 1.0).abs() <= ACTIVE_TOL {
                    TangentCone::Polyhedral {
                        eq: Matrix::zeros(0, n),
                        ineq: -Matrix::from_row_slice(1, n, x.as_slice()),
                    }
                } else {
                    TangentCone::Subspace { basis: Matrix::identity(n, n) }
                }
            }
            Self::Annulus { r1, r2, .. } => {
                let nx = x.norm();
                let row = Matrix::from_row_slice(1, n, x.as_slice());
                if (nx - r1).abs() <= ACTIVE_TOL {
                    TangentCone::Polyhedral { eq: Matrix::zeros(0, n), ineq: row }
                } else if (nx - r2).abs() <= ACTIVE_TOL {
                    TangentCone::Polyhedral { eq: Matrix::zeros(0, n), ineq: -row }
                } else {
                    TangentCone::Subspace { basis: Matrix::identity(n, n) }
                }
            }
            Self::Orthant(_) => {
                let active: Vec<usize> = (0..n).filter(|&i| x[i] <= ACTIVE_TOL).collect();
                let mut ineq = Matrix::zeros(active.len(), n);
                for (row, &i) in active.iter().enumerate() {
                    ineq[(row, i)] = 1.0;
                }
                TangentCone::Polyhedral { eq: Matrix::zeros(0, n), ineq }
            }
            Self::BoundedRank { m, n: cols, r } => bounded_rank_cone(&mat_of(x.as_slice(), *m, *cols), *r, tol)?,
            Self::PsdBoundedRank { n: dim, r } => psd_rank_cone(&mat_of(x.as_slice(), *dim, *dim), *r, tol)?,
            Self::SmoothSdpSlice(d) => {
                let base = psd_rank_cone(&mat_of(x.as_slice(), d.n, d.n), d.r, tol)?;
                TangentCone::Slice {
                    base: Box::new(base),
                    constraints: d.constraint_rows(),
                }
            }
            Self::NodalCubic => {
                if x.norm() <= ACTIVE_TOL {
                    let s = std::f64::consts::FRAC_1_SQRT_2;
                    TangentCone::Union(vec![
                        TangentCone::Subspace { basis: Matrix::from_column_slice(2, 1, &[s, s]) },
                        TangentCone::Subspace { basis: Matrix::from_column_slice(2, 1, &[s, -s]) },
                    ])
                } else {
                    let g = Matrix::from_row_slice(1, 2, &[-3.0 * x[0] * x[0] - 2.0 * x[0], 2.0 * x[1]]);
                    TangentCone::Subspace { basis: kernel_basis(&g, tol)? }
                }
            }
            Self::CpRank1(dims) => {
                if x.norm() <= ACTIVE_TOL {
                    TangentCone::Rank1Tensor { dims: dims.clone() }
                } else {
                    let (sigma, factors) = hopm(x, dims, 4, &mut rng(0));
                    let mut scaled = factors.clone();
                    scaled[0] *= sigma;
                    TangentCone::Subspace { basis: range_basis(&outer_jacobian(&scaled), tol)? }
                }
            }
            Self::Product(parts) => TangentCone::Product(
                Self::split(parts, x)
                    .iter()
                    .zip(parts)
                    .map(|(xi, p)| p.cone_at(xi, tol))
                    .collect::<Result<Vec<_>>>()?,
            ),
            Self::Preimage { f, inner } => {
                let j = f.jacobian(x);
                match inner.cone_at(&f.value(x), tol)?.simplify(tol)? {
                    TangentCone::Subspace { basis } => {
                        let p = Matrix::identity(basis.nrows(), basis.nrows()) - &basis * basis.transpose();
                        TangentCone::Subspace { basis: kernel_basis(&(p * j), tol)? }
                    }
                    TangentCone::Polyhedral { eq, ineq } => TangentCone::Polyhedral { eq: eq * &j, ineq: ineq * &j },
                    other => {
                        return invalid(format!(
                            "preimage cones are supported for subspace and polyhedral inner cones, got {}",
                            other.kind()
                        ))
                    }
                }
            }
        };
        cone.simplify(tol)
    }

    /// Feasible point at distance at most `radius` from `x` (or `None`).
    pub fn sample_near(&self, x: &Vector, radius: f64, g: &mut Rng64) -> Option<Vector> {
        match self {
            Self::SmoothSdpSlice(d) => {
                let xm = mat_of(x.as_slice(), d.n, d.n);
                let r0 = d.factor_of(&xm).ok()?;
                let dir = gaussian_matrix(g, d.n, d.r);
                let dir = &dir / dir.norm();
                let mut t = radius / (2.0 * r0.norm() + 1.0);
                for _ in 0..30 {
                    if let Some(r1) = d.project_factor(&(&r0 + &dir * t)) {
                        let x1 = vec_of(&(&r1 * r1.transpose()));
                        let dist = (&x1 - x).norm();
                        if dist <= radius {
                            return Some(x1);
                        }
                    }
                    t *= 0.5;
                }
                None
            }
            Self::NodalCubic => {
                let params: Vec<f64> = if x[0].abs() > 1e-12 {
                    vec![x[1] / x[0]]
                } else if x[1].abs() <= 1e-12 {
                    vec![1.0, -1.0]
                } else {
                    return None;
                };
                let t0 = params[g.random_range(0..params.len())];
                let sign = if g.random::<bool>() { 1.0 } else { -1.0 };
                let speed = ((2.0 * t0).powi(2) + (3.0 * t0 * t0 - 1.0).powi(2)).sqrt().max(1.0);
                let delta = sign * radius * g.random_range(0.05..0.5) / speed;
                let p = nodal_param(t0 + delta);
                ((&p - x).norm() <= radius).then_some(p)
            }
            Self::CpRank1(dims) => {
                let order = dims.len() as f64;
                let (sigma, mut factors) = if x.norm() <= ACTIVE_TOL {
                    (0.0, dims.iter().map(|&d| Vector::zeros(d)).collect())
                } else {
                    hopm(x, dims, 4, g)
                };
                factors[0] *= sigma;
                let mut s = if sigma == 0.0 {
                    (radius * 0.5).powf(1.0 / order)
                } else {
                    radius / (4.0 * (1.0 + sigma))
                };
                let pert: Vec<Vector> = dims.iter().map(|&d| random_unit(g, d)).collect();
                for _ in 0..30 {
                    let f: Vec<Vector> = factors.iter().zip(&pert).map(|(a, p)| a + p * s).collect();
                    let x1 = outer(&f);
                    if (&x1 - x).norm() <= radius {
                        return Some(x1);
                    }
                    s *= 0.5;
                }
                None
            }
            Self::Product(parts) => {
                let xs = Self::split(parts, x);
                let k = parts.len();
                let mut moved = vec![true; k];
                if k > 1 {
                    for m in moved.iter_mut() {
                        *m = g.random_range(0..3) != 0;
                    }
                    if !moved.iter().any(|&m| m) {
                        moved[g.random_range(0..k)] = true;
                    }
                }
                let sub = radius / (k as f64).sqrt();
                let blocks = parts
                    .iter()
                    .zip(&xs)
                    .zip(&moved)
                    .map(|((p, xi), &m)| if m { p.sample_near(xi, sub, g) } else { Some(xi.clone()) })
                    .collect::<Option<Vec<_>>>()?;
                Some(crate::manifold::concat(&blocks))
            }
            Self::Preimage { f, inner } => {
                let tol = TolerancePolicy::default();
                let t = radius * g.random_range(0.05..0.5);
                let mut z = x + random_unit(g, x.len()) * t;
                for _ in 0..60 {
                    let fz = f.value(&z);
                    let target = inner.project(&fz)?;
                    let r = &fz - target;
                    if r.norm() <= 1e-13 * scale_of(&fz) {
                        return ((&z - x).norm() <= radius && self.contains(&z)).then_some(z);
                    }
                    z -= pinv(&f.jacobian(&z), &tol).ok()? * r;
                }
                None
            }
            _ => {
                let t = radius * g.random_range(0.05..1.0);
                let z = x + random_unit(g, x.len()) * t;
                self.project(&z)
            }
        }
    }

    /// A random feasible point; boundary strata are hit with positive probability.
    pub fn random_point(&self, seed: u64) -> Result<Vector> {
        let mut g = rng(seed);
        let n = self.dim();
        let p = match self {
            Self::Simplex(_) | Self::StochasticMatrices(..) | Self::Orthant(_) => {
                let z = gaussian_vector(&mut g, n) * 0.5;
                self.project(&z).unwrap()
            }
            Self::Ball(_) | Self::Disk(_) | Self::Annulus { .. } => {
                let (lo, hi) = match self {
                    Self::Annulus { r1, r2, .. } => (*r1, *r2),
                    _ => (0.0, 1.0),
                };
                let rad = g.random_range(lo * 0.8..hi * 1.2);
                self.project(&(random_unit(&mut g, n) * rad)).unwrap()
            }
            Self::BoundedRank { m, n: cols, r } => {
                let s = g.random_range(0..=*r);
                vec_of(&(gaussian_matrix(&mut g, *m, s) * gaussian_matrix(&mut g, s, *cols)))
            }
            Self::PsdBoundedRank { n: dim, r } => {
                let s = g.random_range(0..=*r);
                let f = gaussian_matrix(&mut g, *dim, s);
                vec_of(&(&f * f.transpose()))
            }
            Self::SmoothSdpSlice(d) => {
                let mut out = None;
                for _ in 0..20 {
                    if let Some(rf) = d.project_factor(&gaussian_matrix(&mut g, d.n, d.r)) {
                        out = Some(vec_of(&(&rf * rf.transpose())));
                        break;
                    }
                }
                out.ok_or(LiftError::SamplerExhausted { requested: 1, produced: 0 })?
            }
            Self::NodalCubic => nodal_param(g.random_range(-1.5..1.5)),
            Self::CpRank1(dims) => outer(&dims.iter().map(|&d| gaussian_vector(&mut g, d)).collect::<Vec<_>>()),
            Self::Product(parts) => crate::manifold::concat(
                &parts
                    .iter()
                    .enumerate()
                    .map(|(i, p)| p.random_point(derive_seed(seed, i as u64)))
                    .collect::<Result<Vec<_>>>()?,
            ),
            Self::Preimage { inner, .. } => {
                let start = gaussian_vector(&mut g, n) * 0.1;
                let _ = inner;
                return self
                    .sample_near(&start, f64::INFINITY, &mut g)
                    .ok_or(LiftError::SamplerExhausted { requested: 1, produced: 0 });
            }
        };
        Ok(p)
    }
}

fn psd_rank_residual(x: &Matrix, r: usize) -> f64 {
    let n = x.nrows();
    let sk = skew(x).norm();
    match sym_eig(x) {
        Ok((vals, _)) => {
            let neg = (-vals[0]).max(0.0);
            let extra = if r < n { vals[n - 1 - r].max(0.0) } else { 0.0 };
            sk + neg + extra
        }
        Err(_) => f64::INFINITY,
    }
}

/// Point `(t^2 - 1, t^3 - t)` of the nodal cubic.
pub fn nodal_param(t: f64) -> Vector {
    Vector::from_vec(vec![t * t - 1.0, t * t * t - t])
}

fn bounded_rank_cone(x: &Matrix, r: usize, tol: &TolerancePolicy) -> Result<TangentCone> {
    let (m, n) = x.shape();
    let d = svd(x)?;
    let s = d.rank(tol);
    if s > r {
        return invalid(format!("matrix has rank {s} > {r}"));
    }
    let u = d.u.columns(0, s).into_owned();
    let v = d.v.columns(0, s).into_owned();
    let u_perp = complement_basis(&u, m, tol)?;
    let v_perp = complement_basis(&v, n, tol)?;
    let discarded = d.s.get(s).copied().unwrap_or(0.0);
    Ok(TangentCone::BoundedRank {
        m,
        n,
        u,
        v,
        u_perp,
        v_perp,
        budget: r - s,
        discarded,
    })
}

fn psd_rank_cone(x: &Matrix, r: usize, tol: &TolerancePolicy) -> Result<TangentCone> {
    let n = x.nrows();
    let (vals, vecs) = sym_eig(x)?;
    let lmax = vals.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    let thr = tol.rank_threshold(lmax, n, n);
    let kept: Vec<usize> = (0..n).rev().filter(|&i| vals[i] > thr).collect();
    let s = kept.len();
    if s > r {
        return invalid(format!("matrix has rank {s} > {r}"));
    }
    let mut u = Matrix::zeros(n, s);
    for (k, &i) in kept.iter().enumerate() {
        u.set_column(k, &vecs.column(i));
    }
    let u_perp = complement_basis(&u, n, tol)?;
    let discarded = (0..n).filter(|i| !kept.contains(i)).map(|i| vals[i].abs()).fold(0.0, f64::max);
    Ok(TangentCone::PsdRank {
        n,
        u,
        u_perp,
        budget: (r - s).min(n - s),
        discarded,
    })
}

/// Result of a membership test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Membership {
    pub inside: bool,
    pub violation: f64,
}

/// Certified bounds on a stationarity gap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapBounds {
    pub lower: f64,
    pub upper: f64,
}

impl GapBounds {
    pub fn exact(g: f64) -> Self {
        Self { lower: g, upper: g }
    }
}

/// Tangent cone `T_x X` in one of a few closed forms.
#[derive(Debug, Clone)]
pub enum TangentCone {
    /// Linear subspace spanned by orthonormal columns.
    Subspace { basis: Matrix },
    /// `{v : eq v = 0, ineq v >= 0}`.
    Polyhedral { eq: Matrix, ineq: Matrix },
    /// `{V : rank(U_⊥^T V V_⊥) <= budget}` at a matrix with column/row bases `u`, `v`.
    BoundedRank {
        m: usize,
        n: usize,
        u: Matrix,
        v: Matrix,
        u_perp: Matrix,
        v_perp: Matrix,
        budget: usize,
        /// Largest singular value classified as zero.
        discarded: f64,
    },
    /// Symmetric `V` with `U_⊥^T V U_⊥ ⪰ 0` of rank at most `budget`.
    PsdRank {
        n: usize,
        u: Matrix,
        u_perp: Matrix,
        budget: usize,
        discarded: f64,
    },
    Union(Vec<TangentCone>),
    Product(Vec<TangentCone>),
    /// `base ∩ {v : constraints v = 0}`.
    Slice { base: Box<TangentCone>, constraints: Matrix },
    /// Tensors of CP rank at most one.
    Rank1Tensor { dims: Vec<usize> },
}

fn embed_blocks(left: &Matrix, block: &Matrix, right: &Matrix) -> Matrix {
    left * block * right.transpose()
}

impl TangentCone {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::Subspace { .. } => "subspace",
            Self::Polyhedral { .. } => "polyhedral",
            Self::BoundedRank { .. } => "bounded-rank",
            Self::PsdRank { .. } => "psd-rank",
            Self::Union(_) => "union",
            Self::Product(_) => "product",
            Self::Slice { .. } => "slice",
            Self::Rank1Tensor { .. } => "rank-one-tensor",
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Subspace { basis } => basis.nrows(),
            Self::Polyhedral { eq, .. } => eq.ncols(),
            Self::BoundedRank { m, n, .. } => m * n,
            Self::PsdRank { n, .. } => n * n,
            Self::Union(parts) => parts.first().map_or(0, |p| p.dim()),
            Self::Product(parts) => parts.iter().map(|p| p.dim()).sum(),
            Self::Slice { base, .. } => base.dim(),
            Self::Rank1Tensor { dims } => dims.iter().product(),
        }
    }

    /// Basis when the cone is a linear subspace.
    pub fn as_subspace(&self) -> Option<&Matrix> {
        match self {
            Self::Subspace { basis } => Some(basis),
            _ => None,
        }
    }

    /// Rewrites the cone as a subspace whenever it is one.
    pub fn simplify(self, tol: &TolerancePolicy) -> Result<Self> {
        Ok(match self {
            Self::Polyhedral { eq, ineq } if ineq.nrows() == 0 => Self::Subspace { basis: kernel_basis(&eq, tol)? },
            Self::BoundedRank { budget: 0, .. } | Self::PsdRank { budget: 0, .. } => Self::Subspace {
                basis: self.lineality()?,
            },
            Self::Product(parts) => {
                let parts = parts.into_iter().map(|p| p.simplify(tol)).collect::<Result<Vec<_>>>()?;
                if parts.iter().all(|p| p.as_subspace().is_some()) {
                    let blocks: Vec<Matrix> = parts.iter().map(|p| p.as_subspace().unwrap().clone()).collect();
                    Self::Subspace { basis: block_diag(&blocks) }
                } else {
                    Self::Product(parts)
                }
            }
            Self::Slice { base, constraints } => match base.simplify(tol)? {
                Self::Subspace { basis } => {
                    let k = kernel_basis(&(&constraints * &basis), tol)?;
                    Self::Subspace { basis: &basis * k }
                }
                other => Self::Slice {
                    base: Box::new(other),
                    constraints,
                },
            },
            other => other,
        })
    }

    /// Distance-like violation, zero exactly on the cone.
    pub fn violation(&self, v: &Vector) -> f64 {
        if v.len() != self.dim() {
            return f64::INFINITY;
        }
        match self {
            Self::Subspace { basis } => (v - basis * (basis.transpose() * v)).norm(),
            Self::Polyhedral { eq, ineq } => {
                (eq * v).norm() + (ineq * v).iter().map(|t| (-t).max(0.0)).sum::<f64>()
            }
            Self::BoundedRank { m, n, u_perp, v_perp, budget, .. } => {
                let vm = mat_of(v.as_slice(), *m, *n);
                let block = u_perp.transpose() * vm * v_perp;
                svd(&block).map(|d| d.s.get(*budget).copied().unwrap_or(0.0)).unwrap_or(f64::INFINITY)
            }
            Self::PsdRank { n, u_perp, budget, .. } => {
                let vm = mat_of(v.as_slice(), *n, *n);
                let v3 = u_perp.transpose() * sym(&vm) * u_perp;
                let k = v3.nrows();
                let (vals, _) = match sym_eig(&v3) {
                    Ok(e) => e,
                    Err(_) => return f64::INFINITY,
                };
                let neg = vals.first().map_or(0.0, |l| (-l).max(0.0));
                let extra = if *budget < k { vals[k - 1 - budget].max(0.0) } else { 0.0 };
                skew(&vm).norm() + neg + extra
            }
            Self::Union(parts) => parts.iter().map(|p| p.violation(v)).fold(f64::INFINITY, f64::min),
            Self::Product(parts) => split_like(parts, v).iter().zip(parts).map(|(vi, p)| p.violation(vi)).sum(),
            Self::Slice { base, constraints } => base.violation(v) + (constraints * v).norm(),
            Self::Rank1Tensor { dims } => (0..dims.len())
                .map(|k| svd(&unfold(v, dims, k)).map(|d| d.s.get(1).copied().unwrap_or(0.0)).unwrap_or(f64::INFINITY))
                .fold(0.0, f64::max),
        }
    }

    pub fn member(&self, v: &Vector, tol: f64) -> Membership {
        let violation = self.violation(v);
        Membership {
            inside: violation <= tol * v.norm().max(1.0),
            violation,
        }
    }

    /// Euclidean projection onto the cone (best component for unions).
    pub fn project(&self, z: &Vector) -> Vector {
        match self {
            Self::Subspace { basis } => basis * (basis.transpose() * z),
            Self::Polyhedral { eq, ineq } => {
                let n = z.len();
                let tol = TolerancePolicy::default();
                let p = if eq.nrows() == 0 {
                    Matrix::identity(n, n)
                } else {
                    let r = range_basis(&eq.transpose(), &tol).unwrap_or_else(|_| Matrix::zeros(n, 0));
                    Matrix::identity(n, n) - &r * r.transpose()
                };
                if ineq.nrows() == 0 {
                    return &p * z;
                }
                let a = &p * ineq.transpose();
                let lambda = nnls(&a, &(-(&p * z)));
                &p * (z + ineq.transpose() * lambda)
            }
            Self::BoundedRank { m, n, u, v, u_perp, v_perp, budget, .. } => {
                let zm = mat_of(z.as_slice(), *m, *n);
                let mut out = embed_blocks(u, &(u.transpose() * &zm * v), v)
                    + embed_blocks(u, &(u.transpose() * &zm * v_perp), v_perp)
                    + embed_blocks(u_perp, &(u_perp.transpose() * &zm * v), v);
                let w22 = u_perp.transpose() * &zm * v_perp;
                if let Ok(trunc) = project_rank(&w22, *budget) {
                    out += embed_blocks(u_perp, &trunc, v_perp);
                }
                vec_of(&out)
            }
            Self::PsdRank { n, u, u_perp, budget, .. } => {
                let zs = sym(&mat_of(z.as_slice(), *n, *n));
                let w1 = u.transpose() * &zs * u;
                let w2 = u.transpose() * &zs * u_perp;
                let w3 = u_perp.transpose() * &zs * u_perp;
                let mut out = embed_blocks(u, &w1, u) + embed_blocks(u, &w2, u_perp) + embed_blocks(u_perp, &w2.transpose(), u);
                if let Ok(p3) = project_psd_rank(&w3, *budget) {
                    out += embed_blocks(u_perp, &p3, u_perp);
                }
                vec_of(&out)
            }
            Self::Union(parts) => parts
                .iter()
                .map(|p| p.project(z))
                .max_by(|a, b| a.norm().total_cmp(&b.norm()))
                .unwrap_or_else(|| Vector::zeros(z.len())),
            Self::Product(parts) => crate::manifold::concat(
                &split_like(parts, z).iter().zip(parts).map(|(zi, p)| p.project(zi)).collect::<Vec<_>>(),
            ),
            Self::Slice { base, constraints } => slice_project(base, constraints, z).0,
            Self::Rank1Tensor { dims } => {
                let (sigma, mut f) = hopm(z, dims, 8, &mut rng(derive_seed(0x7e57, z.len() as u64)));
                if sigma <= 0.0 {
                    return Vector::zeros(z.len());
                }
                f[0] *= sigma;
                outer(&f)
            }
        }
    }

    /// `inf { <w, v> : v in K, ||v|| <= 1 }`; for slices of nonconvex cones a certified lower bound.
    pub fn stationarity_gap(&self, w: &Vector) -> f64 {
        -self.project(&-w).norm()
    }

    /// Lower and upper bounds on the gap. They coincide except for slices of
    /// nonconvex cones and for the rank-one tensor cone, whose projection is
    /// computed by power iterations.
    pub fn gap_bounds(&self, w: &Vector, seed: u64) -> GapBounds {
        match self {
            Self::Slice { base, constraints } => {
                let (p, _) = slice_project(base, constraints, &-w);
                let lower = -p.norm();
                let mut upper: f64 = 0.0;
                if p.norm() > 0.0 && self.violation(&p) <= 1e-9 * p.norm() {
                    upper = upper.min(w.dot(&p) / p.norm());
                }
                for d in self.sample_directions(400, seed) {
                    upper = upper.min(w.dot(&d));
                }
                GapBounds { lower: lower.min(upper), upper }
            }
            Self::Rank1Tensor { dims } => {
                let (sigma, _) = hopm(w, dims, 16, &mut rng(seed));
                // Power iterations find a lower estimate of the spectral norm.
                GapBounds { lower: -w.norm(), upper: -sigma }
            }
            _ => GapBounds::exact(self.stationarity_gap(w)),
        }
    }

    /// Basis of the largest subspace contained in the cone.
    pub fn lineality(&self) -> Result<Matrix> {
        let tol = TolerancePolicy::default();
        let n = self.dim();
        Ok(match self {
            Self::Subspace { basis } => basis.clone(),
            Self::Polyhedral { eq, ineq } => {
                let mut stacked = Matrix::zeros(eq.nrows() + ineq.nrows(), n);
                stacked.rows_mut(0, eq.nrows()).copy_from(eq);
                stacked.rows_mut(eq.nrows(), ineq.nrows()).copy_from(ineq);
                kernel_basis(&stacked, &tol)?
            }
            Self::BoundedRank { m, n: cols, u, v, u_perp, v_perp, .. } => {
                let mut cols_out = Vec::new();
                for (left, right) in [(u, v), (u, v_perp), (u_perp, v)] {
                    for i in 0..left.ncols() {
                        for j in 0..right.ncols() {
                            cols_out.push(vec_of(&(left.column(i) * right.column(j).transpose())));
                        }
                    }
                }
                let _ = (m, cols);
                Matrix::from_columns(&cols_out).resize_horizontally(cols_out.len(), 0.0)
            }
            Self::PsdRank { u, u_perp, .. } => {
                let mut cols_out = Vec::new();
                let s = u.ncols();
                let h = std::f64::consts::FRAC_1_SQRT_2;
                for i in 0..s {
                    for j in i..s {
                        let e = u.column(i) * u.column(j).transpose();
                        let m = if i == j { e } else { (&e + e.transpose()) * h };
                        cols_out.push(vec_of(&m));
                    }
                    for j in 0..u_perp.ncols() {
                        let e = u.column(i) * u_perp.column(j).transpose();
                        cols_out.push(vec_of(&((&e + e.transpose()) * h)));
                    }
                }
                if cols_out.is_empty() {
                    Matrix::zeros(n, 0)
                } else {
                    Matrix::from_columns(&cols_out)
                }
            }
            Self::Product(parts) => block_diag(&parts.iter().map(|p| p.lineality()).collect::<Result<Vec<_>>>()?),
            Self::Slice { base, constraints } => {
                let l = base.lineality()?;
                if l.ncols() == 0 {
                    l
                } else {
                    &l * kernel_basis(&(constraints * &l), &tol)?
                }
            }
            Self::Union(_) | Self::Rank1Tensor { .. } => Matrix::zeros(n, 0),
        })
    }

    /// Up to `k` unit vectors in the cone (none when the cone is `{0}`).
    pub fn sample_directions(&self, k: usize, seed: u64) -> Vec<Vector> {
        let mut g = rng(seed);
        let mut out = Vec::with_capacity(k);
        let mut attempts = 0;
        while out.len() < k && attempts < 20 * k + 20 {
            attempts += 1;
            if let Some(v) = self.raw_direction(&mut g) {
                let nv = v.norm();
                if nv > 1e-12 {
                    let v = v / nv;
                    if self.violation(&v) <= 1e-10 {
                        out.push(v);
                    }
                }
            } else {
                break;
            }
        }
        out
    }

    fn raw_direction(&self, g: &mut Rng64) -> Option<Vector> {
        let n = self.dim();
        match self {
            Self::Subspace { basis } => {
                if basis.ncols() == 0 {
                    return None;
                }
                Some(basis * gaussian_vector(g, basis.ncols()))
            }
            Self::Polyhedral { .. } => Some(self.project(&gaussian_vector(g, n))),
            Self::BoundedRank { u, v, u_perp, v_perp, budget, .. } => {
                let mut out = Matrix::zeros(u.nrows(), v.nrows());
                let mut blocks = [(u, v), (u, v_perp), (u_perp, v)];
                let include: Vec<bool> = (0..3).map(|_| g.random_range(0..4) != 0).collect();
                for (b, inc) in blocks.iter_mut().zip(include) {
                    if inc && b.0.ncols() > 0 && b.1.ncols() > 0 {
                        out += embed_blocks(b.0, &gaussian_matrix(g, b.0.ncols(), b.1.ncols()), b.1);
                    }
                }
                let rank = g.random_range(0..=*budget);
                let c = gaussian_matrix(g, u_perp.ncols(), rank) * gaussian_matrix(g, rank, v_perp.ncols());
                out += embed_blocks(u_perp, &c, v_perp);
                Some(vec_of(&out))
            }
            Self::PsdRank { u, u_perp, budget, .. } => {
                let s = u.ncols();
                let mut out = Matrix::zeros(u.nrows(), u.nrows());
                if s > 0 && g.random_range(0..4) != 0 {
                    out += embed_blocks(u, &sym(&gaussian_matrix(g, s, s)), u);
                }
                if s > 0 && u_perp.ncols() > 0 && g.random_range(0..4) != 0 {
                    let b = gaussian_matrix(g, s, u_perp.ncols());
                    out += embed_blocks(u, &b, u_perp) + embed_blocks(u_perp, &b.transpose(), u);
                }
                let rank = g.random_range(0..=*budget);
                let z = gaussian_matrix(g, u_perp.ncols(), rank);
                out += embed_blocks(u_perp, &(&z * z.transpose()), u_perp);
                Some(vec_of(&out))
            }
            Self::Union(parts) => {
                if parts.is_empty() {
                    return None;
                }
                parts[g.random_range(0..parts.len())].raw_direction(g)
            }
            Self::Product(parts) => {
                let blocks: Vec<Vector> = parts
                    .iter()
                    .map(|p| {
                        if g.random_range(0..4) == 0 {
                            Vector::zeros(p.dim())
                        } else {
                            p.raw_direction(g).map(|v| {
                                let nv = v.norm();
                                if nv > 0.0 { v / nv * g.random_range(0.1..1.0) } else { v }
                            })
                            .unwrap_or_else(|| Vector::zeros(p.dim()))
                        }
                    })
                    .collect();
                Some(crate::manifold::concat(&blocks))
            }
            Self::Slice { base, constraints } => {
                let v = base.raw_direction(g)?;
                let l = base.lineality().ok()?;
                if l.ncols() == 0 {
                    return Some(v);
                }
                let al = constraints * &l;
                let fix = pinv(&al, &TolerancePolicy::default()).ok()? * (constraints * &v);
                Some(v - l * fix)
            }
            Self::Rank1Tensor { dims } => Some(outer(&dims.iter().map(|&d| gaussian_vector(g, d)).collect::<Vec<_>>())),
        }
    }

    /// Random elements of the dual cone, from its closed-form description.
    pub fn sample_dual(&self, k: usize, seed: u64) -> Result<Vec<Vector>> {
        let mut g = rng(seed);
        (0..k).map(|_| self.raw_dual(&mut g)).collect()
    }

    fn raw_dual(&self, g: &mut Rng64) -> Result<Vector> {
        let n = self.dim();
        Ok(match self {
            Self::Subspace { basis } => {
                let z = gaussian_vector(g, n);
                &z - basis * (basis.transpose() * &z)
            }
            Self::Polyhedral { eq, ineq } => {
                let mu = gaussian_vector(g, eq.nrows());
                let lambda = Vector::from_fn(ineq.nrows(), |_, _| {
                    if g.random_range(0..3) == 0 { 0.0 } else { g.random_range(0.0..2.0) }
                });
                eq.transpose() * mu + ineq.transpose() * lambda
            }
            Self::BoundedRank { .. } | Self::Rank1Tensor { .. } => Vector::zeros(n),
            Self::PsdRank { n: dim, u_perp, .. } => {
                let z = gaussian_matrix(g, u_perp.ncols(), u_perp.ncols());
                let s = &z * z.transpose();
                vec_of(&(skew(&gaussian_matrix(g, *dim, *dim)) + embed_blocks(u_perp, &s, u_perp)))
            }
            Self::Union(parts) => {
                let mut spans = Vec::new();
                for p in parts {
                    match p {
                        Self::Subspace { basis } => spans.push(basis.clone()),
                        _ => return invalid("dual of a union is implemented for unions of subspaces"),
                    }
                }
                let all = spans.iter().fold(Matrix::zeros(n, 0), |acc, b| crate::numerics::hcat(&acc, b));
                let r = range_basis(&all, &TolerancePolicy::default())?;
                let z = gaussian_vector(g, n);
                &z - &r * (r.transpose() * &z)
            }
            Self::Product(parts) => crate::manifold::concat(&parts.iter().map(|p| p.raw_dual(g)).collect::<Result<Vec<_>>>()?),
            Self::Slice { base, constraints } => base.raw_dual(g)? + constraints.transpose() * gaussian_vector(g, constraints.nrows()),
        })
    }
}

fn split_like(parts: &[TangentCone], v: &Vector) -> Vec<Vector> {
    let mut off = 0;
    parts
        .iter()
        .map(|p| {
            let b = v.rows(off, p.dim()).into_owned();
            off += p.dim();
            b
        })
        .collect()
}

/// Projection of `z` onto `base ∩ ker(A)` through the dual problem
/// `min_c 1/2 ||P_base(z - A^T c)||^2`, solved by Barzilai-Borwein gradient steps.
/// Returns the candidate projection and the multipliers.
fn slice_project(base: &TangentCone, a: &Matrix, z: &Vector) -> (Vector, Vector) {
    let m = a.nrows();
    let tol = TolerancePolicy::default();
    let mut c = pinv(&a.transpose(), &tol).map(|p| p * z).unwrap_or_else(|_| Vector::zeros(m));
    let grad = |c: &Vector| -> (Vector, Vector) {
        let p = base.project(&(z - a.transpose() * c));
        (-(a * &p), p)
    };
    let (mut gr, mut p) = grad(&c);
    let lip = svd(a).map(|d| d.s.first().copied().unwrap_or(1.0)).unwrap_or(1.0).powi(2).max(1e-12);
    let mut step = 1.0 / lip;
    let scale = z.norm().max(1.0) * lip.sqrt();
    for _ in 0..5000 {
        if gr.norm() <= 1e-14 * scale {
            break;
        }
        let c_new = &c - &gr * step;
        let (g_new, p_new) = grad(&c_new);
        let s = &c_new - &c;
        let y = &g_new - &gr;
        let sy = s.dot(&y);
        step = if sy > 0.0 { (s.norm_squared() / sy).min(1e3 / lip) } else { 1.0 / lip };
        c = c_new;
        gr = g_new;
        p = p_new;
    }
    (p, c)
}

/// Column-major outer product `a_0 ⊗ a_1 ⊗ ...` (first index fastest).
pub fn outer(factors: &[Vector]) -> Vector {
    let mut out = Vector::from_element(1, 1.0);
    for f in factors {
        let mut next = Vector::zeros(out.len() * f.len());
        for j in 0..f.len() {
            for i in 0..out.len() {
                next[j * out.len() + i] = out[i] * f[j];
            }
        }
        out = next;
    }
    out
}

fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1; dims.len()];
    for k in 1..dims.len() {
        s[k] = s[k - 1] * dims[k - 1];
    }
    s
}

/// Mode-`k` unfolding: `dims[k] x (product of the others)`.
pub fn unfold(t: &Vector, dims: &[usize], k: usize) -> Matrix {
    let st = strides(dims);
    let total: usize = dims.iter().product();
    let rest = total / dims[k].max(1);
    let mut out = Matrix::zeros(dims[k], rest);
    let mut col_of = vec![0usize; total];
    for (idx, c) in col_of.iter_mut().enumerate() {
        let mut col = 0;
        let mut mult = 1;
        for (j, &d) in dims.iter().enumerate() {
            if j == k {
                continue;
            }
            col += ((idx / st[j]) % d) * mult;
            mult *= d;
        }
        *c = col;
    }
    for (idx, &c) in col_of.iter().enumerate() {
        out[((idx / st[k]) % dims[k], c)] = t[idx];
    }
    out
}

/// Contraction of `t` with every factor except mode `k`.
fn contract_except(t: &Vector, dims: &[usize], factors: &[Vector], k: usize) -> Vector {
    let st = strides(dims);
    let mut out = Vector::zeros(dims[k]);
    for (idx, &val) in t.iter().enumerate() {
        if val == 0.0 {
            continue;
        }
        let mut w = val;
        for (j, f) in factors.iter().enumerate() {
            if j != k {
                w *= f[(idx / st[j]) % dims[j]];
            }
        }
        out[(idx / st[k]) % dims[k]] += w;
    }
    out
}

/// Best rank-one approximation by higher-order power iterations with restarts.
/// Returns `(sigma, unit factors)` with `sigma >= 0`.
pub fn hopm(t: &Vector, dims: &[usize], restarts: usize, g: &mut Rng64) -> (f64, Vec<Vector>) {
    let mut best = (0.0, dims.iter().map(|&d| {
        let mut e = Vector::zeros(d);
        e[0] = 1.0;
        e
    }).collect::<Vec<_>>());
    if t.norm() == 0.0 {
        return best;
    }
    for attempt in 0..restarts.max(1) {
        let mut f: Vec<Vector> = if attempt == 0 {
            // Leading singular vectors of the unfoldings.
            (0..dims.len())
                .map(|k| {
                    svd(&unfold(t, dims, k))
                        .map(|d| d.u.column(0).into_owned())
                        .unwrap_or_else(|_| random_unit(g, dims[k]))
                })
                .collect()
        } else {
            dims.iter().map(|&d| random_unit(g, d)).collect()
        };
        let mut sigma = 0.0;
        for _ in 0..500 {
            let prev = sigma;
            for k in 0..dims.len() {
                let c = contract_except(t, dims, &f, k);
                let nc = c.norm();
                if nc == 0.0 {
                    break;
                }
                f[k] = c / nc;
                sigma = nc;
            }
            if (sigma - prev).abs() <= 1e-15 * sigma.max(1.0) {
                break;
            }
        }
        let value = t.dot(&outer(&f));
        if value.abs() > best.0 {
            if value < 0.0 {
                f[0] = -&f[0];
            }
            best = (value.abs(), f);
        }
    }
    best
}

/// Jacobian of `(a_0, ..., a_k) -> a_0 ⊗ ... ⊗ a_k`.
pub fn outer_jacobian(factors: &[Vector]) -> Matrix {
    let total: usize = factors.iter().map(|f| f.len()).product();
    let nin: usize = factors.iter().map(|f| f.len()).sum();
    let mut j = Matrix::zeros(total, nin);
    let mut col = 0;
    for k in 0..factors.len() {
        for i in 0..factors[k].len() {
            let mut f = factors.to_vec();
            let mut e = Vector::zeros(factors[k].len());
            e[i] = 1.0;
            f[k] = e;
            j.set_column(col, &outer(&f));
            col += 1;
        }
    }
    j
}

/// Unit directions `(x_i - x) / ||x_i - x||` from feasible points within [`EMPIRICAL_RADIUS`] of `x`.
pub fn empirical_tangents(set: &SetDesc, x: &Vector, k: usize, seed: u64) -> Result<Vec<Vector>> {
    let mut g = rng(seed);
    let mut out = Vec::with_capacity(k);
    let mut attempts = 0;
    while out.len() < k && attempts < 30 * k + 30 {
        attempts += 1;
        let radius = EMPIRICAL_RADIUS * 10f64.powf(-g.random_range(0.0..1.5));
        if let Some(xi) = set.sample_near(x, radius, &mut g) {
            let d = &xi - x;
            let nd = d.norm();
            if nd > 1e-9 && nd <= EMPIRICAL_RADIUS && set.contains(&xi) {
                out.push(d / nd);
            }
        }
    }
    if out.len() < k {
        return Err(LiftError::SamplerExhausted { requested: k, produced: out.len() });
    }
    Ok(out)
}

/// Number of linearly independent vectors among `dirs`.
pub fn span_dimension(dirs: &[Vector], tol: &TolerancePolicy) -> Result<usize> {
    if dirs.is_empty() {
        return Ok(0);
    }
    let m = Matrix::from_columns(dirs);
    crate::numerics::numerical_rank(&m, tol)
}
