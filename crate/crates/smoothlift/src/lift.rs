//! The lift abstraction and its derivative maps.
//!
//! A [`Lift`] pairs a manifold `M` (in ambient space `E'`) with a smooth
//! extension `φ̄: E' -> E` of `φ`. At a point `y`, [`LQData`] holds
//! `L_y = Dφ̄(y)` restricted to an orthonormal basis of `T_y M`, and evaluates
//! `Q_y(v) = D²φ̄(y)[v,v] + Dφ̄(y)[u_v]` with `u_v` the least-norm
//! second-order correction of the manifold.

use std::fmt;
use std::sync::{Arc, OnceLock};

use crate::cones::ACTIVE_TOL;
use crate::error::{invalid, LiftError, Result};
use crate::manifold::{concat, ConstraintMap, FnMap, ManifoldDesc, SmoothMap};
use crate::numerics::{
    block_diag, kernel_basis, numerical_rank, pinv, range_basis, Matrix, TolerancePolicy, Vector,
};

/// Largest component of a covector along `im L` tolerated by [`LQData::qform`].
pub const COEXACT_TOL: f64 = 1e-8;

pub type Guard = Arc<dyn Fn(&Vector) -> Result<()> + Send + Sync>;

/// A smooth lift `φ: M -> X`.
#[derive(Clone)]
pub struct Lift {
    pub name: String,
    pub manifold: ManifoldDesc,
    pub map: Arc<dyn SmoothMap>,
    pub tol: TolerancePolicy,
    guard: Option<Guard>,
}

impl fmt::Debug for Lift {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Lift")
            .field("name", &self.name)
            .field("manifold", &self.manifold)
            .field("ambient_dim", &self.ambient_dim())
            .finish()
    }
}

impl Lift {
    pub fn new(name: impl Into<String>, manifold: ManifoldDesc, map: Arc<dyn SmoothMap>) -> Result<Self> {
        if map.in_dim() != manifold.ambient_dim() {
            return invalid(format!(
                "map takes R^{} but the manifold lives in R^{}",
                map.in_dim(),
                manifold.ambient_dim()
            ));
        }
        Ok(Self {
            name: name.into(),
            manifold,
            map,
            tol: TolerancePolicy::default(),
            guard: None,
        })
    }

    /// Adds an extra admissibility check run before every evaluation.
    pub fn with_guard(mut self, guard: Guard) -> Self {
        self.guard = Some(match self.guard.take() {
            None => guard,
            Some(old) => Arc::new(move |y: &Vector| {
                old(y)?;
                guard(y)
            }),
        });
        self
    }

    pub fn with_tolerance(mut self, tol: TolerancePolicy) -> Self {
        self.tol = tol;
        self
    }

    pub fn ambient_dim(&self) -> usize {
        self.map.out_dim()
    }

    pub fn uses_finite_differences(&self) -> bool {
        self.map.is_finite_difference()
    }

    pub fn check(&self, y: &Vector) -> Result<()> {
        self.manifold.check_point(y)?;
        if let Some(g) = &self.guard {
            g(y)?;
        }
        Ok(())
    }

    pub fn value(&self, y: &Vector) -> Result<Vector> {
        self.check(y)?;
        Ok(self.map.value(y))
    }

    pub fn lq(&self, y: &Vector) -> Result<LQData> {
        self.check(y)?;
        let tol = &self.tol;
        let basis = self.manifold.tangent_basis(y, tol)?;
        let jphi = self.map.jacobian(y);
        let l = &jphi * &basis;
        // Tangent cones treat constraints within ACTIVE_TOL as active. Near such a point a
        // quadratic lift has singular values of order sqrt(ACTIVE_TOL), so those count as
        // zero too and L is ranked at the stratum the cone sees.
        let floor = ACTIVE_TOL.sqrt() * jphi.norm().max(1.0);
        let ltol = TolerancePolicy { zero_tol: tol.zero_tol.max(floor), ..*tol };
        let im_l = range_basis(&l, &ltol)?;
        let ker_l = kernel_basis(&l, &ltol)?;
        let jh_pinv = if self.manifold.codim() == 0 {
            Matrix::zeros(self.manifold.ambient_dim(), 0)
        } else {
            pinv(&self.manifold.constraint_jacobian(y), tol)?
        };
        Ok(LQData {
            y: y.clone(),
            x: self.map.value(y),
            rank: im_l.ncols(),
            basis,
            l,
            im_l,
            ker_l,
            jphi,
            jh_pinv,
            map: self.map.clone(),
            manifold: self.manifold.clone(),
            tensor: OnceLock::new(),
        })
    }

    /// `Q_y(v)` for an ambient tangent vector `v`.
    pub fn qmap(&self, y: &Vector, v: &Vector) -> Result<Vector> {
        self.check(y)?;
        let u = self.manifold.second_order_correction(y, v, &self.tol)?;
        Ok(self.map.second(y, v) + self.map.jacobian(y) * u)
    }

    /// Matrix of `v -> <w, Q_y(v)>` in the tangent basis.
    pub fn qform_matrix(&self, y: &Vector, w: &Vector) -> Result<Matrix> {
        self.lq(y)?.qform(w)
    }

    /// Point on `M` through `y` with velocity `v` and canonical acceleration.
    pub fn curve(&self, y: &Vector, v: &Vector, t: f64) -> Result<Vector> {
        self.manifold.canonical_curve(y, v, t, &self.tol)
    }
}

/// First- and second-order data of a lift at a point.
#[derive(Clone)]
pub struct LQData {
    pub y: Vector,
    pub x: Vector,
    /// Orthonormal basis of `T_y M`, `ambient(M) x d`.
    pub basis: Matrix,
    /// `L_y` in the tangent basis, `ambient(X) x d`.
    pub l: Matrix,
    pub im_l: Matrix,
    /// Kernel of `L_y` in tangent-basis coordinates, `d x k`.
    pub ker_l: Matrix,
    pub rank: usize,
    jphi: Matrix,
    jh_pinv: Matrix,
    map: Arc<dyn SmoothMap>,
    manifold: ManifoldDesc,
    tensor: OnceLock<QTensor>,
}

impl fmt::Debug for LQData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LQData")
            .field("tangent_dim", &self.tangent_dim())
            .field("rank", &self.rank)
            .finish()
    }
}

impl LQData {
    pub fn tangent_dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn ambient_dim(&self) -> usize {
        self.l.nrows()
    }

    /// `Q_y(v)` for an ambient tangent vector.
    pub fn q(&self, v: &Vector) -> Vector {
        let mut out = self.map.second(&self.y, v);
        if self.jh_pinv.ncols() > 0 {
            let u = &self.jh_pinv * -self.manifold.constraint_second(&self.y, v);
            out += &self.jphi * u;
        }
        out
    }

    /// `Q_y` at the tangent vector with basis coordinates `c`.
    pub fn q_coords(&self, c: &Vector) -> Vector {
        self.q(&(&self.basis * c))
    }

    /// Basis of `(im L_y)^⊥`.
    pub fn coker_basis(&self) -> Result<Matrix> {
        crate::numerics::complement_basis(&self.im_l, self.ambient_dim(), &TolerancePolicy::default())
    }

    /// Component of `w` along `im L_y`.
    pub fn im_l_part(&self, w: &Vector) -> Vector {
        &self.im_l * (self.im_l.transpose() * w)
    }

    /// Bilinear form of `Q_y` in the tangent basis, built once by polarization.
    pub fn tensor(&self) -> &QTensor {
        self.tensor.get_or_init(|| QTensor::build(self))
    }

    /// Symmetric matrix of `v -> <w, Q_y(v)>` for `w` orthogonal to `im L_y`.
    pub fn qform(&self, w: &Vector) -> Result<Matrix> {
        if w.len() != self.ambient_dim() {
            return invalid(format!("covector of length {} in R^{}", w.len(), self.ambient_dim()));
        }
        let along = self.im_l_part(w);
        let residual = along.norm();
        if residual > COEXACT_TOL * w.norm().max(1.0) {
            return Err(LiftError::NotCoexact { residual });
        }
        Ok(self.tensor().form(&(w - along)))
    }
}

/// Vectors `B(b_i, b_j)` with `Q_y(Σ c_i b_i) = Σ c_i c_j B(b_i, b_j)`.
#[derive(Clone, Debug)]
pub struct QTensor {
    pub d: usize,
    entries: Vec<Vector>,
}

impl QTensor {
    fn build(lq: &LQData) -> Self {
        let d = lq.tangent_dim();
        let cols: Vec<Vector> = (0..d).map(|i| lq.basis.column(i).into_owned()).collect();
        let diag: Vec<Vector> = cols.iter().map(|b| lq.q(b)).collect();
        let mut entries = vec![Vector::zeros(lq.ambient_dim()); d * d];
        for i in 0..d {
            entries[i * d + i] = diag[i].clone();
            for j in (i + 1)..d {
                let b = (lq.q(&(&cols[i] + &cols[j])) - &diag[i] - &diag[j]) * 0.5;
                entries[i * d + j] = b.clone();
                entries[j * d + i] = b;
            }
        }
        Self { d, entries }
    }

    pub fn entry(&self, i: usize, j: usize) -> &Vector {
        &self.entries[i * self.d + j]
    }

    /// Matrix `[<w, B(b_i, b_j)>]`.
    pub fn form(&self, w: &Vector) -> Matrix {
        Matrix::from_fn(self.d, self.d, |i, j| w.dot(self.entry(i, j)))
    }

    /// `Q_y` at basis coordinates `c`.
    pub fn apply(&self, c: &Vector) -> Vector {
        let n = self.entries.first().map_or(0, |e| e.len());
        let mut out = Vector::zeros(n);
        for i in 0..self.d {
            if c[i] == 0.0 {
                continue;
            }
            for j in 0..self.d {
                out.axpy(c[i] * c[j], self.entry(i, j), 1.0);
            }
        }
        out
    }

    /// Jacobian of `c -> Q(c)`, column `i` equal to `2 Σ_j c_j B(b_i, b_j)`.
    pub fn jacobian(&self, c: &Vector) -> Matrix {
        let n = self.entries.first().map_or(0, |e| e.len());
        let mut out = Matrix::zeros(n, self.d);
        for i in 0..self.d {
            let mut col = Vector::zeros(n);
            for j in 0..self.d {
                col.axpy(2.0 * c[j], self.entry(i, j), 1.0);
            }
            out.set_column(i, &col);
        }
        out
    }
}

/// Lift `φ∘ψ` on `N`, where `ψ: N -> M` is a submersion given on ambient spaces.
pub fn compose_submersion(
    phi: &Lift,
    n: ManifoldDesc,
    psi: Arc<dyn SmoothMap>,
) -> Result<Lift> {
    if psi.in_dim() != n.ambient_dim() || psi.out_dim() != phi.manifold.ambient_dim() {
        return invalid("submersion dimensions do not match the manifolds");
    }
    let (f1, f2, f3) = (phi.map.clone(), phi.map.clone(), phi.map.clone());
    let (p1, p2, p3) = (psi.clone(), psi.clone(), psi.clone());
    let map = FnMap::new(
        psi.in_dim(),
        phi.ambient_dim(),
        move |z| f1.value(&p1.value(z)),
        move |z| f2.jacobian(&p2.value(z)) * p2.jacobian(z),
        move |z, v| {
            let y = p3.value(z);
            let jv = p3.jacobian(z) * v;
            f3.second(&y, &jv) + f3.jacobian(&y) * p3.second(z, v)
        },
    );
    let base = phi.clone();
    let n_for_guard = n.clone();
    let tol = phi.tol;
    let guard: Guard = Arc::new(move |z: &Vector| {
        let y = psi.value(z);
        base.check(&y)?;
        let bn = n_for_guard.tangent_basis(z, &tol)?;
        let bm = base.manifold.tangent_basis(&y, &tol)?;
        let needed = bm.ncols();
        let rank = numerical_rank(&(bm.transpose() * psi.jacobian(z) * bn), &tol)?;
        if rank < needed {
            return Err(LiftError::NotSubmersion { rank, needed });
        }
        Ok(())
    });
    Ok(Lift::new(format!("{}∘ψ", phi.name), n, Arc::new(map))?
        .with_tolerance(phi.tol)
        .with_guard(guard))
}

/// Product lift `φ_1 × ... × φ_k`.
pub fn product(lifts: &[Lift]) -> Result<Lift> {
    if lifts.is_empty() {
        return invalid("product of zero lifts");
    }
    let manifold = ManifoldDesc::Product(lifts.iter().map(|l| l.manifold.clone()).collect());
    let maps: Vec<Arc<dyn SmoothMap>> = lifts.iter().map(|l| l.map.clone()).collect();
    let in_dims: Vec<usize> = maps.iter().map(|m| m.in_dim()).collect();
    let out_dim: usize = maps.iter().map(|m| m.out_dim()).sum();
    let split = {
        let in_dims = in_dims.clone();
        move |y: &Vector| -> Vec<Vector> {
            let mut off = 0;
            in_dims
                .iter()
                .map(|&n| {
                    let b = y.rows(off, n).into_owned();
                    off += n;
                    b
                })
                .collect()
        }
    };
    let (m1, m2, m3) = (maps.clone(), maps.clone(), maps);
    let (s1, s2, s3, s4) = (split.clone(), split.clone(), split.clone(), split);
    let map = FnMap::new(
        in_dims.iter().sum(),
        out_dim,
        move |y| concat(&m1.iter().zip(s1(y)).map(|(m, yi)| m.value(&yi)).collect::<Vec<_>>()),
        move |y| block_diag(&m2.iter().zip(s2(y)).map(|(m, yi)| m.jacobian(&yi)).collect::<Vec<_>>()),
        move |y, v| {
            concat(
                &m3.iter()
                    .zip(s3(y).into_iter().zip(s3(v)))
                    .map(|(m, (yi, vi))| m.second(&yi, &vi))
                    .collect::<Vec<_>>(),
            )
        },
    );
    let name = lifts.iter().map(|l| l.name.as_str()).collect::<Vec<_>>().join("×");
    let factors: Vec<Lift> = lifts.to_vec();
    let guard: Guard = Arc::new(move |y: &Vector| {
        for (l, yi) in factors.iter().zip(s4(y)) {
            if let Some(g) = &l.guard {
                g(&yi)?;
            }
        }
        Ok(())
    });
    Ok(Lift::new(name, manifold, Arc::new(map))?
        .with_tolerance(lifts[0].tol)
        .with_guard(guard))
}

/// Fiber product lift of `X = F^{-1}(Z)` from a lift `ψ: N -> Z`.
///
/// The manifold is `{(x, y) : F(x) = ψ(y), y in N}` in `E × E_N` and the map is
/// `(x, y) -> x`.
pub fn fiber_product(name: impl Into<String>, f: Arc<dyn SmoothMap>, psi: &Lift) -> Result<Lift> {
    if f.out_dim() != psi.ambient_dim() {
        return invalid(format!(
            "F maps into R^{} but ψ maps into R^{}",
            f.out_dim(),
            psi.ambient_dim()
        ));
    }
    let nx = f.in_dim();
    let ny = psi.manifold.ambient_dim();
    let h_n = ConstraintMap(psi.manifold.clone());
    let k = f.out_dim() + h_n.out_dim();
    let (f1, f2, f3) = (f.clone(), f.clone(), f);
    let (g1, g2, g3) = (psi.map.clone(), psi.map.clone(), psi.map.clone());
    let (h1, h2, h3) = (h_n.clone(), h_n.clone(), h_n);
    let parts = move |z: &Vector| (z.rows(0, nx).into_owned(), z.rows(nx, ny).into_owned());
    let (pa, pb, pc) = (parts, parts, parts);
    let h = FnMap::new(
        nx + ny,
        k,
        move |z| {
            let (x, y) = pa(z);
            concat(&[f1.value(&x) - g1.value(&y), h1.value(&y)])
        },
        move |z| {
            let (x, y) = pb(z);
            let jf = f2.jacobian(&x);
            let jg = g2.jacobian(&y);
            let jh = h2.jacobian(&y);
            let mut j = Matrix::zeros(k, nx + ny);
            j.view_mut((0, 0), jf.shape()).copy_from(&jf);
            j.view_mut((0, nx), jg.shape()).copy_from(&-jg);
            j.view_mut((jf.nrows(), nx), jh.shape()).copy_from(&jh);
            j
        },
        move |z, v| {
            let (x, y) = pc(z);
            let (vx, vy) = pc(v);
            concat(&[f3.second(&x, &vx) - g3.second(&y, &vy), h3.second(&y, &vy)])
        },
    );
    let manifold = ManifoldDesc::Embedded {
        ambient: nx + ny,
        h: Arc::new(h),
    };
    let mut select = Matrix::zeros(nx, nx + ny);
    select.view_mut((0, 0), (nx, nx)).fill_with_identity();
    let mut lift = Lift::new(name, manifold, Arc::new(FnMap::linear(select)))?.with_tolerance(psi.tol);
    if let Some(g) = psi.guard.clone() {
        lift = lift.with_guard(Arc::new(move |z: &Vector| g(&z.rows(nx, ny).into_owned())));
    }
    Ok(lift)
}
