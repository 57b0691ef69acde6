//! Upstairs manifolds: charts, embedded zero sets and products of these.
//!
//! Every manifold lives in a Euclidean ambient space and is the zero set of a
//! (possibly empty) defining function `h`. Tangent spaces are `ker Dh(y)` and
//! the canonical second-order correction is the least-norm solution of
//! `Dh(y)[u] = -D²h(y)[v, v]`.

use std::fmt;
use std::sync::Arc;

use crate::error::{invalid, LiftError, Result};
use crate::numerics::{
    block_diag, derive_seed, gaussian_vector, kernel_basis, numerical_rank, pinv,
    random_orthonormal, rng, vec_of, Matrix, TolerancePolicy, Vector,
};

/// Residual below which a point counts as lying on the manifold.
pub const ON_MANIFOLD_TOL: f64 = 1e-10;

const PROJECTION_MAX_ITERS: usize = 50;
const PROJECTION_TOL: f64 = 1e-12;

/// A smooth map between Euclidean spaces with first and second derivative oracles.
pub trait SmoothMap: Send + Sync {
    fn in_dim(&self) -> usize;
    fn out_dim(&self) -> usize;
    fn value(&self, y: &Vector) -> Vector;
    /// `out_dim x in_dim` Jacobian.
    fn jacobian(&self, y: &Vector) -> Matrix;
    /// Second directional derivative `D²F(y)[v, v]`.
    fn second(&self, y: &Vector, v: &Vector) -> Vector;
    /// True when derivatives come from finite differences rather than analytic oracles.
    fn is_finite_difference(&self) -> bool {
        false
    }
}

type ValueFn = Arc<dyn Fn(&Vector) -> Vector + Send + Sync>;
type JacFn = Arc<dyn Fn(&Vector) -> Matrix + Send + Sync>;
type SecondFn = Arc<dyn Fn(&Vector, &Vector) -> Vector + Send + Sync>;

/// [`SmoothMap`] assembled from closures.
#[derive(Clone)]
pub struct FnMap {
    pub in_dim: usize,
    pub out_dim: usize,
    value: ValueFn,
    jacobian: JacFn,
    second: SecondFn,
}

impl FnMap {
    pub fn new(
        in_dim: usize,
        out_dim: usize,
        value: impl Fn(&Vector) -> Vector + Send + Sync + 'static,
        jacobian: impl Fn(&Vector) -> Matrix + Send + Sync + 'static,
        second: impl Fn(&Vector, &Vector) -> Vector + Send + Sync + 'static,
    ) -> Self {
        Self {
            in_dim,
            out_dim,
            value: Arc::new(value),
            jacobian: Arc::new(jacobian),
            second: Arc::new(second),
        }
    }

    /// Linear map `y -> A y`.
    pub fn linear(a: Matrix) -> Self {
        let (m, n) = a.shape();
        let a1 = a.clone();
        let a2 = a;
        Self::new(
            n,
            m,
            move |y| &a1 * y,
            move |_| a2.clone(),
            move |_, _| Vector::zeros(m),
        )
    }

    pub fn identity(n: usize) -> Self {
        Self::linear(Matrix::identity(n, n))
    }
}

impl SmoothMap for FnMap {
    fn in_dim(&self) -> usize {
        self.in_dim
    }
    fn out_dim(&self) -> usize {
        self.out_dim
    }
    fn value(&self, y: &Vector) -> Vector {
        (self.value)(y)
    }
    fn jacobian(&self, y: &Vector) -> Matrix {
        (self.jacobian)(y)
    }
    fn second(&self, y: &Vector, v: &Vector) -> Vector {
        (self.second)(y, v)
    }
}

/// [`SmoothMap`] whose derivatives are central differences of a value closure.
///
/// Reports flag lifts built on these maps, since witness verification needs
/// tighter accuracy than differences deliver.
#[derive(Clone)]
pub struct FdMap {
    pub in_dim: usize,
    pub out_dim: usize,
    pub step: f64,
    value: ValueFn,
}

impl FdMap {
    pub fn new(
        in_dim: usize,
        out_dim: usize,
        value: impl Fn(&Vector) -> Vector + Send + Sync + 'static,
    ) -> Self {
        Self {
            in_dim,
            out_dim,
            step: 1e-5,
            value: Arc::new(value),
        }
    }
}

impl SmoothMap for FdMap {
    fn in_dim(&self) -> usize {
        self.in_dim
    }
    fn out_dim(&self) -> usize {
        self.out_dim
    }
    fn value(&self, y: &Vector) -> Vector {
        (self.value)(y)
    }
    fn jacobian(&self, y: &Vector) -> Matrix {
        let h = self.step;
        let mut j = Matrix::zeros(self.out_dim, self.in_dim);
        for k in 0..self.in_dim {
            let mut yp = y.clone();
            let mut ym = y.clone();
            yp[k] += h;
            ym[k] -= h;
            j.set_column(k, &(((self.value)(&yp) - (self.value)(&ym)) / (2.0 * h)));
        }
        j
    }
    fn second(&self, y: &Vector, v: &Vector) -> Vector {
        // Second differences need a larger step than first ones.
        let h = self.step.sqrt() * 1e-1;
        ((self.value)(&(y + v * h)) - (self.value)(y) * 2.0 + (self.value)(&(y - v * h))) / (h * h)
    }
    fn is_finite_difference(&self) -> bool {
        true
    }
}

/// Description of the upstairs manifold.
#[derive(Clone)]
pub enum ManifoldDesc {
    /// An open subset of `R^dim` with the identity chart.
    Chart { dim: usize },
    /// `{y in R^ambient : h(y) = 0}` with `Dh` of full row rank on the zero set.
    Embedded { ambient: usize, h: Arc<dyn SmoothMap> },
    Product(Vec<ManifoldDesc>),
    /// Unit sphere `S^n` in `R^{n+1}`.
    Sphere(usize),
    /// `m x r` matrices with orthonormal columns, flattened column-major.
    Stiefel(usize, usize),
}

impl fmt::Debug for ManifoldDesc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Chart { dim } => write!(f, "Chart({dim})"),
            Self::Embedded { ambient, h } => write!(f, "Embedded(R^{ambient}, codim {})", h.out_dim()),
            Self::Product(parts) => f.debug_tuple("Product").field(parts).finish(),
            Self::Sphere(n) => write!(f, "Sphere({n})"),
            Self::Stiefel(m, r) => write!(f, "Stiefel({m},{r})"),
        }
    }
}

fn stiefel_pairs(r: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(r * (r + 1) / 2);
    for j in 0..r {
        for i in 0..=j {
            out.push((i, j));
        }
    }
    out
}

impl ManifoldDesc {
    pub fn ambient_dim(&self) -> usize {
        match self {
            Self::Chart { dim } => *dim,
            Self::Embedded { ambient, .. } => *ambient,
            Self::Product(parts) => parts.iter().map(|p| p.ambient_dim()).sum(),
            Self::Sphere(n) => n + 1,
            Self::Stiefel(m, r) => m * r,
        }
    }

    /// Number of defining equations.
    pub fn codim(&self) -> usize {
        match self {
            Self::Chart { .. } => 0,
            Self::Embedded { h, .. } => h.out_dim(),
            Self::Product(parts) => parts.iter().map(|p| p.codim()).sum(),
            Self::Sphere(_) => 1,
            Self::Stiefel(_, r) => r * (r + 1) / 2,
        }
    }

    pub fn dim(&self) -> usize {
        self.ambient_dim() - self.codim()
    }

    /// Splits an ambient vector into the factor blocks of a product.
    pub fn split(&self, y: &Vector) -> Vec<Vector> {
        match self {
            Self::Product(parts) => {
                let mut out = Vec::with_capacity(parts.len());
                let mut off = 0;
                for p in parts {
                    let n = p.ambient_dim();
                    out.push(y.rows(off, n).into_owned());
                    off += n;
                }
                out
            }
            _ => vec![y.clone()],
        }
    }

    pub fn constraint_value(&self, y: &Vector) -> Vector {
        match self {
            Self::Chart { .. } => Vector::zeros(0),
            Self::Embedded { h, .. } => h.value(y),
            Self::Sphere(_) => Vector::from_element(1, y.norm_squared() - 1.0),
            Self::Stiefel(m, r) => {
                let u = Matrix::from_column_slice(*m, *r, y.as_slice());
                let g = u.transpose() * &u;
                Vector::from_iterator(
                    r * (r + 1) / 2,
                    stiefel_pairs(*r)
                        .into_iter()
                        .map(|(i, j)| g[(i, j)] - if i == j { 1.0 } else { 0.0 }),
                )
            }
            Self::Product(parts) => {
                let blocks: Vec<Vector> = parts
                    .iter()
                    .zip(self.split(y))
                    .map(|(p, yi)| p.constraint_value(&yi))
                    .collect();
                concat(&blocks)
            }
        }
    }

    /// `codim x ambient` Jacobian of the defining function.
    pub fn constraint_jacobian(&self, y: &Vector) -> Matrix {
        match self {
            Self::Chart { dim } => Matrix::zeros(0, *dim),
            Self::Embedded { h, .. } => h.jacobian(y),
            Self::Sphere(_) => Matrix::from_row_slice(1, y.len(), (y * 2.0).as_slice()),
            Self::Stiefel(m, r) => {
                let (m, r) = (*m, *r);
                let pairs = stiefel_pairs(r);
                let mut j = Matrix::zeros(pairs.len(), m * r);
                // d(u_i^T u_j) = u_j^T du_i + u_i^T du_j
                for (row, &(a, b)) in pairs.iter().enumerate() {
                    for k in 0..m {
                        j[(row, a * m + k)] += y[b * m + k];
                        j[(row, b * m + k)] += y[a * m + k];
                    }
                }
                j
            }
            Self::Product(parts) => {
                let blocks: Vec<Matrix> = parts
                    .iter()
                    .zip(self.split(y))
                    .map(|(p, yi)| p.constraint_jacobian(&yi))
                    .collect();
                block_diag(&blocks)
            }
        }
    }

    /// `D²h(y)[v, v]`.
    pub fn constraint_second(&self, y: &Vector, v: &Vector) -> Vector {
        match self {
            Self::Chart { .. } => Vector::zeros(0),
            Self::Embedded { h, .. } => h.second(y, v),
            Self::Sphere(_) => Vector::from_element(1, 2.0 * v.norm_squared()),
            Self::Stiefel(m, r) => {
                let dv = Matrix::from_column_slice(*m, *r, v.as_slice());
                let g = dv.transpose() * &dv * 2.0;
                Vector::from_iterator(
                    r * (r + 1) / 2,
                    stiefel_pairs(*r).into_iter().map(|(i, j)| g[(i, j)]),
                )
            }
            Self::Product(parts) => {
                let blocks: Vec<Vector> = parts
                    .iter()
                    .zip(self.split(y).into_iter().zip(self.split(v)))
                    .map(|(p, (yi, vi))| p.constraint_second(&yi, &vi))
                    .collect();
                concat(&blocks)
            }
        }
    }

    fn residual_scale(y: &Vector) -> f64 {
        1f64.max(y.norm_squared())
    }

    /// Errors unless `y` has the right length and satisfies the defining equations.
    pub fn check_point(&self, y: &Vector) -> Result<()> {
        if y.len() != self.ambient_dim() {
            return invalid(format!(
                "point has length {} but the manifold lives in R^{}",
                y.len(),
                self.ambient_dim()
            ));
        }
        if !y.iter().all(|v| v.is_finite()) {
            return invalid("point has non-finite coordinates");
        }
        let res = self.constraint_value(y).norm();
        if res > ON_MANIFOLD_TOL * Self::residual_scale(y) {
            return invalid(format!("point is off the manifold (residual {res:e})"));
        }
        Ok(())
    }

    fn checked_jacobian(&self, y: &Vector, tol: &TolerancePolicy) -> Result<Matrix> {
        let j = self.constraint_jacobian(y);
        let k = self.codim();
        if k > 0 {
            let found = numerical_rank(&j, tol)?;
            if found != k {
                return Err(LiftError::ConstantRankViolation { expected: k, found });
            }
        }
        Ok(j)
    }

    /// Orthonormal basis of `T_y M` as an `ambient x dim` matrix.
    pub fn tangent_basis(&self, y: &Vector, tol: &TolerancePolicy) -> Result<Matrix> {
        match self {
            Self::Chart { dim } => Ok(Matrix::identity(*dim, *dim)),
            Self::Product(parts) => {
                let blocks = parts
                    .iter()
                    .zip(self.split(y))
                    .map(|(p, yi)| p.tangent_basis(&yi, tol))
                    .collect::<Result<Vec<_>>>()?;
                Ok(block_diag(&blocks))
            }
            _ => {
                let j = self.checked_jacobian(y, tol)?;
                kernel_basis(&j, tol)
            }
        }
    }

    /// Least-norm `u` with `Dh(y)[u] = -D²h(y)[v, v]`; zero on charts.
    pub fn second_order_correction(&self, y: &Vector, v: &Vector, tol: &TolerancePolicy) -> Result<Vector> {
        if self.codim() == 0 {
            return Ok(Vector::zeros(self.ambient_dim()));
        }
        let j = self.checked_jacobian(y, tol)?;
        Ok(pinv(&j, tol)? * -self.constraint_second(y, v))
    }

    /// Pulls `z` back onto the manifold by Gauss-Newton steps on `h`.
    pub fn project_to_manifold(&self, z: &Vector, tol: &TolerancePolicy) -> Result<Vector> {
        if self.codim() == 0 {
            return Ok(z.clone());
        }
        let mut z = z.clone();
        let mut res = f64::INFINITY;
        for _ in 0..PROJECTION_MAX_ITERS {
            let h = self.constraint_value(&z);
            res = h.norm();
            if !res.is_finite() {
                break;
            }
            if res < PROJECTION_TOL * Self::residual_scale(&z) {
                // One more step takes the residual to rounding level, so a solver cannot
                // gain value from the leftover infeasibility.
                let polished = &z - pinv(&self.constraint_jacobian(&z), tol)? * h;
                if self.constraint_value(&polished).norm() <= res {
                    z = polished;
                }
                return Ok(z);
            }
            let j = self.constraint_jacobian(&z);
            z -= pinv(&j, tol)? * h;
        }
        Err(LiftError::RetractionFailure { residual: res })
    }

    /// Point on `M` agreeing with `y + t v + t²/2 u` up to `O(t³)`.
    pub fn curve(&self, y: &Vector, v: &Vector, u: &Vector, t: f64, tol: &TolerancePolicy) -> Result<Vector> {
        let z = y + v * t + u * (0.5 * t * t);
        self.project_to_manifold(&z, tol)
    }

    /// Curve through `y` with velocity `v` and the canonical acceleration.
    pub fn canonical_curve(&self, y: &Vector, v: &Vector, t: f64, tol: &TolerancePolicy) -> Result<Vector> {
        let u = self.second_order_correction(y, v, tol)?;
        self.curve(y, v, &u, t, tol)
    }

    pub fn project_tangent(&self, y: &Vector, z: &Vector, tol: &TolerancePolicy) -> Result<Vector> {
        let b = self.tangent_basis(y, tol)?;
        Ok(&b * (b.transpose() * z))
    }

    pub fn random_point(&self, seed: u64, tol: &TolerancePolicy) -> Result<Vector> {
        let mut g = rng(seed);
        match self {
            Self::Chart { dim } => Ok(gaussian_vector(&mut g, *dim)),
            Self::Sphere(n) => {
                let v = gaussian_vector(&mut g, n + 1);
                Ok(&v / v.norm())
            }
            Self::Stiefel(m, r) => Ok(vec_of(&random_orthonormal(&mut g, *m, *r))),
            Self::Product(parts) => {
                let blocks = parts
                    .iter()
                    .enumerate()
                    .map(|(i, p)| p.random_point(derive_seed(seed, i as u64), tol))
                    .collect::<Result<Vec<_>>>()?;
                Ok(concat(&blocks))
            }
            Self::Embedded { ambient, .. } => {
                let z = gaussian_vector(&mut g, *ambient);
                self.project_to_manifold(&z, tol)
            }
        }
    }

    /// Unit tangent vector at `y` (zero when the manifold is a point).
    pub fn random_tangent(&self, y: &Vector, seed: u64, tol: &TolerancePolicy) -> Result<Vector> {
        let b = self.tangent_basis(y, tol)?;
        if b.ncols() == 0 {
            return Ok(Vector::zeros(self.ambient_dim()));
        }
        let mut g = rng(seed);
        let c = gaussian_vector(&mut g, b.ncols());
        let v = &b * c;
        Ok(&v / v.norm())
    }

    /// Checks the rank of `Dh` at `y` and at four nearby on-manifold points.
    pub fn constant_rank_spot_check(&self, y: &Vector, seed: u64, tol: &TolerancePolicy) -> Result<()> {
        self.tangent_basis(y, tol)?;
        for i in 0..4 {
            let v = self.random_tangent(y, derive_seed(seed, i), tol)?;
            let z = self.canonical_curve(y, &v, 1e-3, tol)?;
            self.checked_jacobian(&z, tol)?;
        }
        Ok(())
    }
}

/// The defining function of a manifold viewed as a [`SmoothMap`].
#[derive(Clone, Debug)]
pub struct ConstraintMap(pub ManifoldDesc);

impl SmoothMap for ConstraintMap {
    fn in_dim(&self) -> usize {
        self.0.ambient_dim()
    }
    fn out_dim(&self) -> usize {
        self.0.codim()
    }
    fn value(&self, y: &Vector) -> Vector {
        self.0.constraint_value(y)
    }
    fn jacobian(&self, y: &Vector) -> Matrix {
        self.0.constraint_jacobian(y)
    }
    fn second(&self, y: &Vector, v: &Vector) -> Vector {
        self.0.constraint_second(y, v)
    }
}

pub(crate) fn concat(blocks: &[Vector]) -> Vector {
    let n = blocks.iter().map(|b| b.len()).sum();
    let mut out = Vector::zeros(n);
    let mut off = 0;
    for b in blocks {
        out.rows_mut(off, b.len()).copy_from(b);
        off += b.len();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stiefel_jacobian_matches_differences() {
        let m = ManifoldDesc::Stiefel(3, 2);
        let tol = TolerancePolicy::default();
        let y = m.random_point(1, &tol).unwrap();
        let fd = FdMap::new(6, 3, {
            let m = m.clone();
            move |y| m.constraint_value(y)
        });
        let diff = (m.constraint_jacobian(&y) - fd.jacobian(&y)).norm();
        assert!(diff < 1e-8, "{diff}");
    }
}
