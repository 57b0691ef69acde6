//! Concrete lifts with their downstairs sets and known classifications.
//!
//! Flattening conventions (all column-major):
//!
//! | entry | upstairs point `y` | downstairs point `x` |
//! |---|---|---|
//! | `hadamard(n)` | `y` on `S^{n-1}` | `y ⊙ y` |
//! | `hadprod(n,m)` | `[y_1; ...; y_m]`, each on `S^{n-1}` | `vec [y_1⊙y_1, ..., y_m⊙y_m]` |
//! | `ball(n)` | `[x; t]` with `|x|² + t² = 1` | `x` |
//! | `annulus(n,r1,r2)` | `[x; s_1; s_2]` with `|x|² - r1² = s_1²`, `r2² - |x|² = s_2²` | `x` |
//! | `burer_monteiro`, `psd_lowrank` | `vec R` (`n x r`) | `vec RRᵀ` |
//! | `lr(m,n,r)` | `[vec L; vec R]` | `vec LRᵀ` |
//! | `desing_chart(m,n,r,Π)` | `[vec Z; vec W]`, `Z: m x r`, `W: r x (n-r)` | `vec [-ZW, Z]Π` |
//! | `svd(m,n,r)` | `[vec U; σ; vec V]` | `vec U diag(σ) Vᵀ` |
//! | `msvd(m,n,r)` | `[vec U; vec M; vec V]` | `vec U M Vᵀ` |
//! | `cp_rank1(dims)` | `[a_1; ...; a_d]` | `a_1 ⊗ ... ⊗ a_d` |
//! | `nodal_cubic` | `y` with `y_1 = y_3² - 1`, `y_2 = y_1 y_3` | `(y_1, y_2)` |
//! | `disk_quartic` | `y` with `y_1² + y_2² + y_3⁴ = 1` | `(y_1, y_2)` |
//! | `eigen_simplex(U)` | `y` on `S^{n-1}` | `(Uᵀy) ⊙ (Uᵀy)` |

use std::fmt;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cones::{hopm, outer, SdpData, SetDesc};
use crate::error::{invalid, LiftError, Result};
use crate::lift::{compose_submersion, fiber_product, product, Lift};
use crate::manifold::{concat, FnMap, ManifoldDesc};
use crate::numerics::{
    complement_basis, derive_seed, gaussian_matrix, gaussian_vector, hcat, kernel_basis, mat_of,
    numerical_rank, pinv, random_orthonormal, range_basis, random_unit, rng, svd, sym_eig, vec_of, Matrix,
    Rng64, TolerancePolicy, Vector,
};

/// Identifier and parameters of a catalog entry; also the `entry` table of a config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EntryId {
    Hadamard { n: usize },
    Hadprod { n: usize, m: usize },
    Ball { n: usize },
    Annulus { n: usize, r1: f64, r2: f64 },
    /// Constraint matrices are generated from `seed` unless `a` and `b` are given.
    BurerMonteiro {
        n: usize,
        r: usize,
        #[serde(default = "default_constraints")]
        m: usize,
        #[serde(default)]
        seed: u64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        a: Option<Vec<Vec<Vec<f64>>>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        b: Option<Vec<f64>>,
    },
    PsdLowrank { n: usize, r: usize },
    Lr { m: usize, n: usize, r: usize },
    /// `perm[i]` is the column that column `i` of `[-ZW, Z]` is moved to.
    DesingChart {
        m: usize,
        n: usize,
        r: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        perm: Option<Vec<usize>>,
    },
    Svd { m: usize, n: usize, r: usize },
    Msvd { m: usize, n: usize, r: usize },
    CpRank1 { dims: Vec<usize> },
    NodalCubic,
    DiskQuartic,
    /// Orthogonal `U` (rows) or one drawn from `seed`.
    EigenSimplex {
        n: usize,
        #[serde(default)]
        seed: u64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        u: Option<Vec<Vec<f64>>>,
    },
}

fn default_constraints() -> usize {
    2
}

impl EntryId {
    /// Short name used in reports.
    pub fn name(&self) -> &'static str {
        match self {
            Self::Hadamard { .. } => "hadamard",
            Self::Hadprod { .. } => "hadprod",
            Self::Ball { .. } => "ball",
            Self::Annulus { .. } => "annulus",
            Self::BurerMonteiro { .. } => "burer_monteiro",
            Self::PsdLowrank { .. } => "psd_lowrank",
            Self::Lr { .. } => "lr",
            Self::DesingChart { .. } => "desing_chart",
            Self::Svd { .. } => "svd",
            Self::Msvd { .. } => "msvd",
            Self::CpRank1 { .. } => "cp_rank1",
            Self::NodalCubic => "nodal_cubic",
            Self::DiskQuartic => "disk_quartic",
            Self::EigenSimplex { .. } => "eigen_simplex",
        }
    }

    /// A small default instance of every entry, used by the suite and the tests.
    pub fn defaults() -> Vec<EntryId> {
        vec![
            Self::Hadamard { n: 4 },
            Self::Hadprod { n: 3, m: 2 },
            Self::Ball { n: 3 },
            Self::Annulus { n: 2, r1: 1.0, r2: 2.0 },
            Self::BurerMonteiro { n: 4, r: 2, m: 2, seed: 11, a: None, b: None },
            Self::PsdLowrank { n: 4, r: 2 },
            Self::Lr { m: 4, n: 3, r: 2 },
            Self::DesingChart { m: 4, n: 4, r: 2, perm: Some(vec![2, 0, 3, 1]) },
            Self::Svd { m: 4, n: 3, r: 2 },
            Self::Msvd { m: 4, n: 3, r: 2 },
            Self::CpRank1 { dims: vec![2, 3, 2] },
            Self::NodalCubic,
            Self::DiskQuartic,
            Self::EigenSimplex { n: 4, seed: 5, u: None },
        ]
    }
}

/// The three lift properties.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Property {
    #[serde(rename = "local=>local")]
    LocalToLocal,
    #[serde(rename = "1=>1")]
    OneToOne,
    #[serde(rename = "2=>1")]
    TwoToOne,
}

impl Property {
    pub const ALL: [Property; 3] = [Property::LocalToLocal, Property::OneToOne, Property::TwoToOne];

    pub fn label(self) -> &'static str {
        match self {
            Self::LocalToLocal => "local=>local",
            Self::OneToOne => "1=>1",
            Self::TwoToOne => "2=>1",
        }
    }
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Expected verdicts at a point; `None` where the classification is not known.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Expected {
    pub local_to_local: Option<bool>,
    pub one_to_one: Option<bool>,
    pub two_to_one: Option<bool>,
}

impl Expected {
    fn new(local: Option<bool>, one: Option<bool>, two: Option<bool>) -> Self {
        // "1=>1" implies "2=>1".
        let two = if one == Some(true) { Some(true) } else { two };
        Self { local_to_local: local, one_to_one: one, two_to_one: two }
    }

    pub fn get(&self, p: Property) -> Option<bool> {
        match p {
            Property::LocalToLocal => self.local_to_local,
            Property::OneToOne => self.one_to_one,
            Property::TwoToOne => self.two_to_one,
        }
    }
}

/// One member `v_i` of a degenerate tangent sequence with `L(v_i) -> 0` and `Q(v_i) -> limit`.
#[derive(Debug, Clone)]
pub struct DegenerateDirection {
    /// Ambient tangent vector at `y`.
    pub v: Vector,
    pub limit: Vector,
}

#[derive(Clone)]
enum Data {
    None,
    Sdp(Arc<SdpData>),
    Perm(Matrix),
    Orth(Matrix),
}

/// A lift together with its downstairs set and classification.
#[derive(Clone)]
pub struct CatalogEntry {
    pub id: EntryId,
    pub lift: Lift,
    pub set: SetDesc,
    data: Data,
}

impl fmt::Debug for CatalogEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CatalogEntry")
            .field("id", &self.id)
            .field("lift", &self.lift)
            .field("set", &self.set)
            .finish()
    }
}

/// Map given by its value, directional derivative and second directional derivative.
fn poly_map(
    in_dim: usize,
    out_dim: usize,
    value: impl Fn(&Vector) -> Vector + Send + Sync + 'static,
    deriv: impl Fn(&Vector, &Vector) -> Vector + Send + Sync + 'static,
    second: impl Fn(&Vector, &Vector) -> Vector + Send + Sync + 'static,
) -> FnMap {
    let deriv = Arc::new(deriv);
    let d2 = deriv.clone();
    FnMap::new(
        in_dim,
        out_dim,
        value,
        move |y| {
            let mut j = Matrix::zeros(out_dim, in_dim);
            let mut e = Vector::zeros(in_dim);
            for k in 0..in_dim {
                e[k] = 1.0;
                j.set_column(k, &d2(y, &e));
                e[k] = 0.0;
            }
            j
        },
        second,
    )
}

fn square_map(n: usize) -> FnMap {
    poly_map(
        n,
        n,
        |y| y.component_mul(y),
        |y, v| y.component_mul(v) * 2.0,
        |_, v| v.component_mul(v) * 2.0,
    )
}

/// `R -> RRᵀ` on `n x r` factors.
fn gram_map(n: usize, r: usize) -> FnMap {
    poly_map(
        n * r,
        n * n,
        move |y| {
            let f = mat_of(y.as_slice(), n, r);
            vec_of(&(&f * f.transpose()))
        },
        move |y, v| {
            let f = mat_of(y.as_slice(), n, r);
            let d = mat_of(v.as_slice(), n, r);
            let p = &d * f.transpose();
            vec_of(&(&p + p.transpose()))
        },
        move |_, v| {
            let d = mat_of(v.as_slice(), n, r);
            vec_of(&(&d * d.transpose() * 2.0))
        },
    )
}

fn symmetric_manifold(r: usize) -> ManifoldDesc {
    let pairs: Vec<(usize, usize)> = (0..r).flat_map(|j| (0..j).map(move |i| (i, j))).collect();
    let mut a = Matrix::zeros(pairs.len(), r * r);
    for (row, &(i, j)) in pairs.iter().enumerate() {
        a[(row, j * r + i)] = 1.0;
        a[(row, i * r + j)] = -1.0;
    }
    ManifoldDesc::Embedded { ambient: r * r, h: Arc::new(FnMap::linear(a)) }
}

/// Unit sphere `S^{n-1}` viewed as a lift of itself into `R^n`.
pub fn sphere_embedding(n: usize) -> Result<Lift> {
    if n < 2 {
        return invalid("sphere needs n >= 2");
    }
    Lift::new("sphere", ManifoldDesc::Sphere(n - 1), Arc::new(FnMap::identity(n)))
}

fn hadamard_lift(n: usize) -> Result<Lift> {
    Lift::new("hadamard", ManifoldDesc::Sphere(n - 1), Arc::new(square_map(n)))
}

fn perm_matrix(perm: &[usize]) -> Result<Matrix> {
    let n = perm.len();
    let mut seen = vec![false; n];
    let mut p = Matrix::zeros(n, n);
    for (i, &j) in perm.iter().enumerate() {
        if j >= n || seen[j] {
            return invalid(format!("{perm:?} is not a permutation"));
        }
        seen[j] = true;
        p[(i, j)] = 1.0;
    }
    Ok(p)
}

fn generate_sdp(n: usize, r: usize, m: usize, seed: u64) -> Result<SdpData> {
    let mut g = rng(seed);
    let a: Vec<Matrix> = (0..m)
        .map(|_| {
            let z = gaussian_matrix(&mut g, n, n);
            (&z + z.transpose()) * 0.5
        })
        .collect();
    // Known feasible factor of rank r - 1, so both rank regimes are populated.
    let mut r0 = Matrix::zeros(n, r);
    if r > 1 {
        r0.columns_mut(0, r - 1).copy_from(&gaussian_matrix(&mut g, n, r - 1));
    }
    let r0 = r0 * random_orthonormal(&mut g, r, r);
    let b = a.iter().map(|ai| (ai * &r0).dot(&r0)).collect();
    let data = SdpData::new(n, r, a, b)?;
    Ok(data)
}

fn rows_to_matrix(rows: &[Vec<f64>]) -> Result<Matrix> {
    let nr = rows.len();
    let nc = rows.first().map_or(0, |r| r.len());
    if rows.iter().any(|r| r.len() != nc) {
        return invalid("ragged matrix");
    }
    Ok(Matrix::from_fn(nr, nc, |i, j| rows[i][j]))
}

/// Builds a catalog entry.
pub fn build(id: &EntryId) -> Result<CatalogEntry> {
    let mut data = Data::None;
    let (lift, set) = match id {
        EntryId::Hadamard { n } => {
            if *n < 2 {
                return invalid("hadamard needs n >= 2");
            }
            (hadamard_lift(*n)?, SetDesc::Simplex(*n))
        }
        EntryId::Hadprod { n, m } => {
            if *n < 2 || *m < 1 {
                return invalid("hadprod needs n >= 2 and m >= 1");
            }
            let factors = (0..*m).map(|_| hadamard_lift(*n)).collect::<Result<Vec<_>>>()?;
            let mut l = product(&factors)?;
            l.name = "hadprod".into();
            (l, SetDesc::StochasticMatrices(*n, *m))
        }
        EntryId::Ball { n } => {
            if *n < 1 {
                return invalid("ball needs n >= 1");
            }
            let nn = *n;
            let f = poly_map(
                nn,
                1,
                |x| Vector::from_element(1, 1.0 - x.norm_squared()),
                |x, v| Vector::from_element(1, -2.0 * x.dot(v)),
                |_, v| Vector::from_element(1, -2.0 * v.norm_squared()),
            );
            let psi = Lift::new("square", ManifoldDesc::Chart { dim: 1 }, Arc::new(square_map(1)))?;
            (fiber_product("ball", Arc::new(f), &psi)?, SetDesc::Ball(nn))
        }
        EntryId::Annulus { n, r1, r2 } => {
            if !(*r1 > 0.0 && r2 > r1) || *n < 1 {
                return invalid("annulus needs 0 < r1 < r2 and n >= 1");
            }
            let (a, b) = (r1 * r1, r2 * r2);
            let f = poly_map(
                *n,
                2,
                move |x| Vector::from_vec(vec![x.norm_squared() - a, b - x.norm_squared()]),
                |x, v| {
                    let d = 2.0 * x.dot(v);
                    Vector::from_vec(vec![d, -d])
                },
                |_, v| {
                    let d = 2.0 * v.norm_squared();
                    Vector::from_vec(vec![d, -d])
                },
            );
            let psi = Lift::new("square", ManifoldDesc::Chart { dim: 2 }, Arc::new(square_map(2)))?;
            (
                fiber_product("annulus", Arc::new(f), &psi)?,
                SetDesc::Annulus { n: *n, r1: *r1, r2: *r2 },
            )
        }
        EntryId::BurerMonteiro { n, r, m, seed, a, b } => {
            let (n, r) = (*n, *r);
            if r == 0 || r >= n {
                return invalid("burer_monteiro needs 1 <= r < n");
            }
            let sdp = match (a, b) {
                (Some(a), Some(b)) => {
                    let a = a.iter().map(|rows| rows_to_matrix(rows)).collect::<Result<Vec<_>>>()?;
                    SdpData::new(n, r, a, b.clone())?
                }
                (None, None) => generate_sdp(n, r, *m, *seed)?,
                _ => return invalid("give both a and b or neither"),
            };
            let sdp = Arc::new(sdp);
            let (s1, s2, s3) = (sdp.clone(), sdp.clone(), sdp.clone());
            let h = FnMap::new(
                n * r,
                sdp.a.len(),
                move |y| s1.factor_residual(&mat_of(y.as_slice(), n, r)),
                move |y| s2.factor_jacobian(&mat_of(y.as_slice(), n, r)),
                move |_, v| {
                    let d = mat_of(v.as_slice(), n, r);
                    Vector::from_iterator(s3.a.len(), s3.a.iter().map(|ai| 2.0 * (ai * &d).dot(&d)))
                },
            );
            let manifold = ManifoldDesc::Embedded { ambient: n * r, h: Arc::new(h) };
            data = Data::Sdp(sdp.clone());
            (
                Lift::new("burer_monteiro", manifold, Arc::new(gram_map(n, r)))?,
                SetDesc::SmoothSdpSlice(sdp),
            )
        }
        EntryId::PsdLowrank { n, r } => {
            if *r == 0 || r >= n {
                return invalid("psd_lowrank needs 1 <= r < n");
            }
            (
                Lift::new("psd_lowrank", ManifoldDesc::Chart { dim: n * r }, Arc::new(gram_map(*n, *r)))?,
                SetDesc::PsdBoundedRank { n: *n, r: *r },
            )
        }
        EntryId::Lr { m, n, r } => {
            let (m, n, r) = (*m, *n, *r);
            if r == 0 || r >= m.min(n) {
                return invalid("lr needs 1 <= r < min(m, n)");
            }
            let split = move |y: &Vector| {
                (mat_of(&y.as_slice()[..m * r], m, r), mat_of(&y.as_slice()[m * r..], n, r))
            };
            let map = poly_map(
                (m + n) * r,
                m * n,
                move |y| {
                    let (l, rr) = split(y);
                    vec_of(&(l * rr.transpose()))
                },
                move |y, v| {
                    let (l, rr) = split(y);
                    let (dl, dr) = split(v);
                    vec_of(&(dl * rr.transpose() + l * dr.transpose()))
                },
                move |_, v| {
                    let (dl, dr) = split(v);
                    vec_of(&(dl * dr.transpose() * 2.0))
                },
            );
            (
                Lift::new("lr", ManifoldDesc::Chart { dim: (m + n) * r }, Arc::new(map))?,
                SetDesc::BoundedRank { m, n, r },
            )
        }
        EntryId::DesingChart { m, n, r, perm } => {
            let (m, n, r) = (*m, *n, *r);
            if r == 0 || r >= n || r > m {
                return invalid("desing_chart needs 1 <= r < n and r <= m");
            }
            let p = match perm {
                Some(perm) if perm.len() == n => perm_matrix(perm)?,
                Some(_) => return invalid("permutation length must equal n"),
                None => Matrix::identity(n, n),
            };
            data = Data::Perm(p.clone());
            let k = n - r;
            let split = move |y: &Vector| {
                (mat_of(&y.as_slice()[..m * r], m, r), mat_of(&y.as_slice()[m * r..], r, k))
            };
            let assemble = move |left: Matrix, right: Matrix, p: &Matrix| {
                let mut x = Matrix::zeros(m, n);
                x.columns_mut(0, k).copy_from(&left);
                x.columns_mut(k, r).copy_from(&right);
                vec_of(&(x * p))
            };
            let (p1, p2, p3) = (p.clone(), p.clone(), p);
            let map = poly_map(
                m * r + r * k,
                m * n,
                move |y| {
                    let (z, w) = split(y);
                    assemble(-(&z * w), z, &p1)
                },
                move |y, v| {
                    let (z, w) = split(y);
                    let (dz, dw) = split(v);
                    assemble(-(&dz * w) - z * dw, dz, &p2)
                },
                move |_, v| {
                    let (dz, dw) = split(v);
                    assemble(-(dz * dw * 2.0), Matrix::zeros(m, r), &p3)
                },
            );
            (
                Lift::new("desing_chart", ManifoldDesc::Chart { dim: m * r + r * k }, Arc::new(map))?,
                SetDesc::BoundedRank { m, n, r },
            )
        }
        EntryId::Svd { m, n, r } | EntryId::Msvd { m, n, r } => {
            let (m, n, r) = (*m, *n, *r);
            if r == 0 || r >= m.min(n) {
                return invalid("svd lifts need 1 <= r < min(m, n)");
            }
            let modified = matches!(id, EntryId::Msvd { .. });
            let mid = if modified { r * r } else { r };
            let middle = move |s: &[f64]| {
                if modified {
                    mat_of(s, r, r)
                } else {
                    Matrix::from_diagonal(&Vector::from_column_slice(s))
                }
            };
            let split = move |y: &Vector| {
                let s = y.as_slice();
                (
                    mat_of(&s[..m * r], m, r),
                    middle(&s[m * r..m * r + mid]),
                    mat_of(&s[m * r + mid..], n, r),
                )
            };
            let map = poly_map(
                m * r + mid + n * r,
                m * n,
                move |y| {
                    let (u, s, v) = split(y);
                    vec_of(&(u * s * v.transpose()))
                },
                move |y, d| {
                    let (u, s, v) = split(y);
                    let (du, ds, dv) = split(d);
                    vec_of(&(&du * &s * v.transpose() + &u * ds * v.transpose() + u * s * dv.transpose()))
                },
                move |y, d| {
                    let (u, s, v) = split(y);
                    let (du, ds, dv) = split(d);
                    vec_of(&((&du * &ds * v.transpose() + &du * s * dv.transpose() + u * ds * dv.transpose()) * 2.0))
                },
            );
            let mid_manifold = if modified { symmetric_manifold(r) } else { ManifoldDesc::Chart { dim: r } };
            let manifold = ManifoldDesc::Product(vec![
                ManifoldDesc::Stiefel(m, r),
                mid_manifold,
                ManifoldDesc::Stiefel(n, r),
            ]);
            (
                Lift::new(if modified { "msvd" } else { "svd" }, manifold, Arc::new(map))?,
                SetDesc::BoundedRank { m, n, r },
            )
        }
        EntryId::CpRank1 { dims } => {
            if dims.len() < 2 || dims.iter().any(|&d| d == 0) {
                return invalid("cp_rank1 needs at least two nonzero modes");
            }
            let d1 = dims.clone();
            let d2 = dims.clone();
            let d3 = dims.clone();
            let total: usize = dims.iter().product();
            let map = poly_map(
                dims.iter().sum(),
                total,
                move |y| outer(&split_factors(y, &d1)),
                move |y, v| {
                    let f = split_factors(y, &d2);
                    let dv = split_factors(v, &d2);
                    let mut out = Vector::zeros(total);
                    for k in 0..f.len() {
                        let mut g = f.clone();
                        g[k] = dv[k].clone();
                        out += outer(&g);
                    }
                    out
                },
                move |y, v| {
                    let f = split_factors(y, &d3);
                    let dv = split_factors(v, &d3);
                    let mut out = Vector::zeros(total);
                    for j in 0..f.len() {
                        for k in j + 1..f.len() {
                            let mut g = f.clone();
                            g[j] = dv[j].clone();
                            g[k] = dv[k].clone();
                            out += outer(&g) * 2.0;
                        }
                    }
                    out
                },
            );
            (
                Lift::new("cp_rank1", ManifoldDesc::Chart { dim: dims.iter().sum() }, Arc::new(map))?,
                SetDesc::CpRank1(dims.clone()),
            )
        }
        EntryId::NodalCubic => {
            let h = FnMap::new(
                3,
                2,
                |y| Vector::from_vec(vec![y[0] - y[2] * y[2] + 1.0, y[1] - y[0] * y[2]]),
                |y| Matrix::from_row_slice(2, 3, &[1.0, 0.0, -2.0 * y[2], -y[2], 1.0, -y[0]]),
                |_, v| Vector::from_vec(vec![-2.0 * v[2] * v[2], -2.0 * v[0] * v[2]]),
            );
            let select = Matrix::from_row_slice(2, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
            (
                Lift::new(
                    "nodal_cubic",
                    ManifoldDesc::Embedded { ambient: 3, h: Arc::new(h) },
                    Arc::new(FnMap::linear(select)),
                )?,
                SetDesc::NodalCubic,
            )
        }
        EntryId::DiskQuartic => {
            let h = FnMap::new(
                3,
                1,
                |y| Vector::from_element(1, y[0] * y[0] + y[1] * y[1] + y[2].powi(4) - 1.0),
                |y| Matrix::from_row_slice(1, 3, &[2.0 * y[0], 2.0 * y[1], 4.0 * y[2].powi(3)]),
                |y, v| {
                    Vector::from_element(1, 2.0 * v[0] * v[0] + 2.0 * v[1] * v[1] + 12.0 * y[2] * y[2] * v[2] * v[2])
                },
            );
            let select = Matrix::from_row_slice(2, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
            (
                Lift::new(
                    "disk_quartic",
                    ManifoldDesc::Embedded { ambient: 3, h: Arc::new(h) },
                    Arc::new(FnMap::linear(select)),
                )?,
                SetDesc::Disk(2),
            )
        }
        EntryId::EigenSimplex { n, seed, u } => {
            let n = *n;
            if n < 2 {
                return invalid("eigen_simplex needs n >= 2");
            }
            let u = match u {
                Some(rows) => rows_to_matrix(rows)?,
                None => random_orthonormal(&mut rng(*seed), n, n),
            };
            if u.shape() != (n, n) || (u.transpose() * &u - Matrix::identity(n, n)).norm() > 1e-10 {
                return invalid("U must be an n x n orthogonal matrix");
            }
            data = Data::Orth(u.clone());
            let mut l = compose_submersion(
                &hadamard_lift(n)?,
                ManifoldDesc::Sphere(n - 1),
                Arc::new(FnMap::linear(u.transpose())),
            )?;
            l.name = "eigen_simplex".into();
            (l, SetDesc::Simplex(n))
        }
    };
    Ok(CatalogEntry { id: id.clone(), lift, set, data })
}

fn split_factors(y: &Vector, dims: &[usize]) -> Vec<Vector> {
    let mut off = 0;
    dims.iter()
        .map(|&d| {
            let b = y.rows(off, d).into_owned();
            off += d;
            b
        })
        .collect()
}

fn rank_of(a: &Matrix, tol: &TolerancePolicy) -> usize {
    numerical_rank(a, tol).unwrap_or(0)
}

/// Random invertible `r x r` matrix with condition number below `e^2`.
fn well_conditioned(g: &mut Rng64, r: usize) -> Matrix {
    let q1 = random_orthonormal(g, r, r);
    let q2 = random_orthonormal(g, r, r);
    let d = Vector::from_fn(r, |_, _| g.random_range(-1.0f64..1.0).exp());
    q1 * Matrix::from_diagonal(&d) * q2
}

/// `rows x cols` matrix of rank exactly `s` (generic).
fn rank_s(g: &mut Rng64, rows: usize, cols: usize, s: usize) -> Matrix {
    gaussian_matrix(g, rows, s) * gaussian_matrix(g, s, cols)
}

fn random_signs(g: &mut Rng64, n: usize) -> Vector {
    Vector::from_fn(n, |_, _| if g.random::<bool>() { 1.0 } else { -1.0 })
}

/// Distinct magnitudes in `[0.5, 2]` with random signs.
fn distinct_values(g: &mut Rng64, r: usize) -> Vec<f64> {
    let mut mags: Vec<f64> = (0..r).map(|k| 0.5 + 1.5 * (k as f64 + g.random_range(0.15..0.85)) / r as f64).collect();
    mags.shuffle(g);
    mags.into_iter().map(|m| if g.random::<bool>() { m } else { -m }).collect()
}

impl CatalogEntry {
    pub fn tol(&self) -> &TolerancePolicy {
        &self.lift.tol
    }

    /// Regime tags accepted by [`CatalogEntry::sample_point`].
    pub fn regimes(&self) -> &'static [&'static str] {
        match self.id {
            EntryId::Hadamard { .. } | EntryId::Hadprod { .. } | EntryId::EigenSimplex { .. } => &["interior", "boundary"],
            EntryId::Ball { .. } => &["interior", "boundary"],
            EntryId::Annulus { .. } => &["interior", "inner_boundary", "outer_boundary"],
            EntryId::BurerMonteiro { .. } | EntryId::PsdLowrank { .. } | EntryId::DesingChart { .. } => {
                &["full_rank", "rank_deficient"]
            }
            EntryId::Lr { .. } => &["full_rank", "balanced_deficient", "unbalanced"],
            EntryId::Svd { .. } => &["distinct", "repeated", "zero_sigma"],
            EntryId::Msvd { .. } => &["generic", "opposite_eigs", "singular"],
            EntryId::CpRank1 { .. } => &["generic", "partial_zero", "zero"],
            EntryId::NodalCubic => &["smooth", "node"],
            EntryId::DiskQuartic => &["interior", "boundary"],
        }
    }

    /// A random point of `M` in the given regime.
    pub fn sample_point(&self, regime: &str, seed: u64) -> Result<Vector> {
        if !self.regimes().contains(&regime) {
            return invalid(format!("regime {regime:?} is not one of {:?} for {}", self.regimes(), self.id.name()));
        }
        let mut g = rng(seed);
        let y = match &self.id {
            EntryId::Hadamard { n } | EntryId::EigenSimplex { n, .. } => {
                let y = sphere_point(&mut g, *n, regime == "boundary");
                match &self.data {
                    Data::Orth(u) => u * y,
                    _ => y,
                }
            }
            EntryId::Hadprod { n, m } => {
                let boundary_col = g.random_range(0..*m);
                let cols: Vec<Vector> = (0..*m)
                    .map(|j| {
                        let zeroed = regime == "boundary" && (j == boundary_col || g.random::<bool>());
                        sphere_point(&mut g, *n, zeroed)
                    })
                    .collect();
                concat(&cols)
            }
            EntryId::Ball { n } => {
                let dir = random_unit(&mut g, *n);
                if regime == "boundary" {
                    concat(&[dir, Vector::zeros(1)])
                } else {
                    let rho: f64 = g.random_range(0.1..0.9);
                    let t = (1.0 - rho * rho).sqrt() * if g.random::<bool>() { 1.0 } else { -1.0 };
                    concat(&[dir * rho, Vector::from_element(1, t)])
                }
            }
            EntryId::Annulus { n, r1, r2 } => {
                let dir = random_unit(&mut g, *n);
                let rho = match regime {
                    "inner_boundary" => *r1,
                    "outer_boundary" => *r2,
                    _ => r1 + (r2 - r1) * g.random_range(0.1..0.9),
                };
                let s1 = (rho * rho - r1 * r1).max(0.0).sqrt() * if g.random::<bool>() { 1.0 } else { -1.0 };
                let s2 = (r2 * r2 - rho * rho).max(0.0).sqrt() * if g.random::<bool>() { 1.0 } else { -1.0 };
                concat(&[dir * rho, Vector::from_vec(vec![s1, s2])])
            }
            EntryId::BurerMonteiro { n, r, .. } => {
                let sdp = self.sdp().unwrap();
                let (n, r) = (*n, *r);
                let s = if regime == "full_rank" { r } else { r - 1 };
                let mut found = None;
                for _ in 0..50 {
                    let partial = SdpData { r: s.max(1), ..(**sdp).clone() };
                    let start = if s == 0 { Matrix::zeros(n, 1) } else { gaussian_matrix(&mut g, n, s) };
                    let proj = if s == 0 {
                        sdp.b.iter().all(|b| b.abs() < 1e-12).then(|| start.clone())
                    } else {
                        partial.project_factor(&start)
                    };
                    if let Some(f) = proj {
                        let mut full = Matrix::zeros(n, r);
                        full.columns_mut(0, f.ncols().min(r)).copy_from(&f.columns(0, f.ncols().min(r)));
                        found = Some(vec_of(&(full * random_orthonormal(&mut g, r, r))));
                        break;
                    }
                }
                found.ok_or(LiftError::SamplerExhausted { requested: 1, produced: 0 })?
            }
            EntryId::PsdLowrank { n, r } => {
                let s = if regime == "full_rank" { *r } else { g.random_range(0..*r) };
                let mut f = Matrix::zeros(*n, *r);
                f.columns_mut(0, s).copy_from(&gaussian_matrix(&mut g, *n, s));
                vec_of(&(f * random_orthonormal(&mut g, *r, *r)))
            }
            EntryId::Lr { m, n, r } => {
                let (m, n, r) = (*m, *n, *r);
                let (l, rr) = match regime {
                    "full_rank" => (gaussian_matrix(&mut g, m, r), gaussian_matrix(&mut g, n, r)),
                    "balanced_deficient" => {
                        let s = g.random_range(0..r);
                        let j = well_conditioned(&mut g, r);
                        let mut l0 = Matrix::zeros(m, r);
                        let mut r0 = Matrix::zeros(n, r);
                        l0.columns_mut(0, s).copy_from(&gaussian_matrix(&mut g, m, s));
                        r0.columns_mut(0, s).copy_from(&gaussian_matrix(&mut g, n, s));
                        let jinv_t = j.clone().try_inverse().unwrap().transpose();
                        (l0 * j, r0 * jinv_t)
                    }
                    _ => {
                        if g.random::<bool>() {
                            // rank L = r > rank R
                            let s = g.random_range(0..r);
                            (gaussian_matrix(&mut g, m, r), rank_s(&mut g, n, r, s))
                        } else {
                            // equal factor ranks, product of lower rank
                            let mut l0 = Matrix::zeros(m, r);
                            let mut r0 = Matrix::zeros(n, r);
                            l0.set_column(0, &gaussian_vector(&mut g, m));
                            r0.set_column(r - 1, &gaussian_vector(&mut g, n));
                            if r == 1 {
                                r0 = Matrix::zeros(n, 1);
                                l0 = Matrix::zeros(m, 1);
                                l0.set_column(0, &gaussian_vector(&mut g, m));
                            }
                            let q = random_orthonormal(&mut g, r, r);
                            (l0 * &q, r0 * q)
                        }
                    }
                };
                concat(&[vec_of(&l), vec_of(&rr)])
            }
            EntryId::DesingChart { m, n, r, .. } => {
                let s = if regime == "full_rank" { *r } else { g.random_range(0..*r) };
                let z = rank_s(&mut g, *m, *r, s);
                let w = gaussian_matrix(&mut g, *r, n - r);
                concat(&[vec_of(&z), vec_of(&w)])
            }
            EntryId::Svd { m, n, r } => {
                let mut sigma = distinct_values(&mut g, *r);
                let k = g.random_range(0..*r);
                match regime {
                    "repeated" if *r >= 2 => {
                        let l = (k + 1 + g.random_range(0..r - 1)) % r;
                        sigma[l] = if g.random::<bool>() { sigma[k] } else { -sigma[k] };
                    }
                    "zero_sigma" => sigma[k] = 0.0,
                    "repeated" => return invalid("repeated singular values need r >= 2"),
                    _ => {}
                }
                concat(&[
                    vec_of(&random_orthonormal(&mut g, *m, *r)),
                    Vector::from_vec(sigma),
                    vec_of(&random_orthonormal(&mut g, *n, *r)),
                ])
            }
            EntryId::Msvd { m, n, r } => {
                let mut lam = distinct_values(&mut g, *r);
                let k = g.random_range(0..*r);
                match regime {
                    "opposite_eigs" if *r >= 2 => {
                        let l = (k + 1 + g.random_range(0..r - 1)) % r;
                        lam[l] = -lam[k];
                    }
                    "singular" => lam[k] = 0.0,
                    "opposite_eigs" => return invalid("opposite eigenvalues need r >= 2"),
                    _ => {}
                }
                let w = random_orthonormal(&mut g, *r, *r);
                let mm = &w * Matrix::from_diagonal(&Vector::from_vec(lam)) * w.transpose();
                let mm = (&mm + mm.transpose()) * 0.5;
                concat(&[
                    vec_of(&random_orthonormal(&mut g, *m, *r)),
                    vec_of(&mm),
                    vec_of(&random_orthonormal(&mut g, *n, *r)),
                ])
            }
            EntryId::CpRank1 { dims } => {
                let d = dims.len();
                let zero: Vec<bool> = match regime {
                    "zero" => vec![true; d],
                    "partial_zero" => {
                        let count = g.random_range(1..d);
                        let mut idx: Vec<usize> = (0..d).collect();
                        idx.shuffle(&mut g);
                        (0..d).map(|k| idx[..count].contains(&k)).collect()
                    }
                    _ => vec![false; d],
                };
                concat(
                    &dims
                        .iter()
                        .zip(zero)
                        .map(|(&n, z)| if z { Vector::zeros(n) } else { gaussian_vector(&mut g, n) })
                        .collect::<Vec<_>>(),
                )
            }
            EntryId::NodalCubic => {
                let t = if regime == "node" {
                    if g.random::<bool>() { 1.0 } else { -1.0 }
                } else {
                    let mut t: f64 = g.random_range(-1.6..1.6);
                    while (t.abs() - 1.0).abs() < 0.1 {
                        t = g.random_range(-1.6..1.6);
                    }
                    t
                };
                Vector::from_vec(vec![t * t - 1.0, t * t * t - t, t])
            }
            EntryId::DiskQuartic => {
                let theta: f64 = g.random_range(0.0..std::f64::consts::TAU);
                let y3: f64 = if regime == "boundary" {
                    0.0
                } else {
                    g.random_range(0.3..0.95) * if g.random::<bool>() { 1.0 } else { -1.0 }
                };
                let rho = (1.0 - y3.powi(4)).sqrt();
                Vector::from_vec(vec![rho * theta.cos(), rho * theta.sin(), y3])
            }
        };
        self.lift.check(&y)?;
        Ok(y)
    }

    pub(crate) fn sdp(&self) -> Option<&Arc<SdpData>> {
        match &self.data {
            Data::Sdp(s) => Some(s),
            _ => None,
        }
    }

    fn perm(&self) -> Matrix {
        match &self.data {
            Data::Perm(p) => p.clone(),
            _ => Matrix::zeros(0, 0),
        }
    }

    /// Factor blocks of `y` for the matrix lifts.
    fn blocks(&self, y: &Vector) -> Vec<Matrix> {
        let s = y.as_slice();
        match &self.id {
            EntryId::BurerMonteiro { n, r, .. } | EntryId::PsdLowrank { n, r } => vec![mat_of(s, *n, *r)],
            EntryId::Lr { m, n, r } => vec![mat_of(&s[..m * r], *m, *r), mat_of(&s[m * r..], *n, *r)],
            EntryId::DesingChart { m, n, r, .. } => {
                vec![mat_of(&s[..m * r], *m, *r), mat_of(&s[m * r..], *r, n - r)]
            }
            EntryId::Svd { m, n, r } => vec![
                mat_of(&s[..m * r], *m, *r),
                Matrix::from_column_slice(*r, 1, &s[m * r..m * r + r]),
                mat_of(&s[m * r + r..], *n, *r),
            ],
            EntryId::Msvd { m, n, r } => vec![
                mat_of(&s[..m * r], *m, *r),
                mat_of(&s[m * r..m * r + r * r], *r, *r),
                mat_of(&s[m * r + r * r..], *n, *r),
            ],
            _ => vec![],
        }
    }

    /// The classification at `y`, encoding the known propositions.
    pub fn expected(&self, y: &Vector) -> Result<Expected> {
        self.lift.check(y)?;
        let tol = *self.tol();
        let nz = |v: f64| v.abs() > 1e-9;
        Ok(match &self.id {
            EntryId::Hadamard { .. } | EntryId::Hadprod { .. } => {
                Expected::new(Some(true), Some(y.iter().all(|&v| nz(v))), Some(true))
            }
            EntryId::EigenSimplex { .. } => {
                let Data::Orth(u) = &self.data else { unreachable!() };
                let z = u.transpose() * y;
                Expected::new(Some(true), Some(z.iter().all(|&v| nz(v))), Some(true))
            }
            EntryId::Ball { n } => Expected::new(Some(true), Some(nz(y[*n])), Some(true)),
            EntryId::Annulus { n, .. } => Expected::new(Some(true), Some(nz(y[*n]) && nz(y[n + 1])), Some(true)),
            EntryId::BurerMonteiro { r, .. } | EntryId::PsdLowrank { r, .. } => {
                let full = rank_of(&self.blocks(y)[0], &tol) == *r;
                Expected::new(Some(true), Some(full), Some(true))
            }
            EntryId::Lr { r, .. } => {
                let b = self.blocks(y);
                let (rl, rr) = (rank_of(&b[0], &tol), rank_of(&b[1], &tol));
                let rx = rank_of(&(&b[0] * b[1].transpose()), &tol);
                Expected::new(Some(rl == rr && rr == rx), Some(rl == *r && rr == *r), Some(true))
            }
            EntryId::DesingChart { r, .. } => {
                let full = rank_of(&self.blocks(y)[0], &tol) == *r;
                Expected::new(Some(full), Some(full), Some(true))
            }
            EntryId::Svd { r, .. } => {
                let s = self.blocks(y)[1].column(0).into_owned();
                let any_zero = s.iter().any(|&v| !nz(v));
                let mut distinct = true;
                for i in 0..*r {
                    for j in i + 1..*r {
                        if !nz(s[i].abs() - s[j].abs()) {
                            distinct = false;
                        }
                    }
                }
                let ok = !any_zero && distinct;
                Expected::new(Some(ok), Some(ok), if any_zero { Some(false) } else { None })
            }
            EntryId::Msvd { r, .. } => {
                let (lam, _) = sym_eig(&self.blocks(y)[1])?;
                let mut ok = true;
                for i in 0..*r {
                    for j in i..*r {
                        if !nz(lam[i] + lam[j]) {
                            ok = false;
                        }
                    }
                }
                let singular = lam.iter().any(|&l| !nz(l));
                Expected::new(Some(ok), Some(ok), if singular { Some(false) } else { None })
            }
            EntryId::CpRank1 { dims } => {
                let f = split_factors(y, dims);
                let zeros = f.iter().filter(|a| a.norm() <= 1e-12).count();
                if zeros == 0 {
                    Expected::new(Some(true), Some(true), Some(true))
                } else if zeros == dims.len() {
                    let two = if zeros >= 3 { Some(false) } else { None };
                    Expected::new(Some(true), Some(false), two)
                } else {
                    let two = if zeros >= 3 { Some(false) } else { None };
                    Expected::new(Some(false), Some(false), two)
                }
            }
            EntryId::NodalCubic => {
                let node = (y[2].abs() - 1.0).abs() <= 1e-9;
                Expected::new(Some(!node), Some(!node), Some(!node))
            }
            EntryId::DiskQuartic => {
                let interior = nz(y[2]);
                Expected::new(Some(true), Some(interior), Some(interior))
            }
        })
    }

    /// Members `v_i` of the degenerate sequences from the low-rank proofs, for a
    /// family of `(u, v)` pairs whose limits span the relevant block.
    pub fn degenerate_directions(&self, y: &Vector, i: usize) -> Result<Vec<DegenerateDirection>> {
        self.lift.check(y)?;
        if i == 0 {
            return invalid("sequence index starts at 1");
        }
        let tol = *self.tol();
        let it = i as f64;
        let b = self.blocks(y);
        let basis_pairs = |a: usize, c: usize| -> Vec<(Vector, Vector)> {
            let mut out = Vec::new();
            for p in 0..a {
                for q in 0..c {
                    for sign in [1.0, -1.0] {
                        let mut u = Vector::zeros(a);
                        u[p] = sign;
                        let mut v = Vector::zeros(c);
                        v[q] = 1.0;
                        out.push((u, v));
                    }
                }
            }
            out
        };
        match &self.id {
            EntryId::Lr { m, n, .. } => {
                let (l, r) = (&b[0], &b[1]);
                let kl = kernel_basis(l, &tol)?;
                let kr = kernel_basis(r, &tol)?;
                let (left_small, w) = if kl.ncols() > 0 {
                    (true, kl.column(0).into_owned())
                } else if kr.ncols() > 0 {
                    (false, kr.column(0).into_owned())
                } else {
                    return Err(LiftError::NoDegeneracy);
                };
                Ok(basis_pairs(*m, *n)
                    .into_iter()
                    .map(|(u, v)| {
                        let (dl, dr) = if left_small {
                            (&u * w.transpose() / it, &v * w.transpose() * (it / 2.0))
                        } else {
                            (&u * w.transpose() * (it / 2.0), &v * w.transpose() / it)
                        };
                        DegenerateDirection {
                            v: concat(&[vec_of(&dl), vec_of(&dr)]),
                            limit: vec_of(&(&u * v.transpose())),
                        }
                    })
                    .collect())
            }
            EntryId::DesingChart { m, n, r, .. } => {
                let kz = kernel_basis(&b[0], &tol)?;
                if kz.ncols() == 0 {
                    return Err(LiftError::NoDegeneracy);
                }
                let w = kz.column(0).into_owned();
                let k = n - r;
                let p = self.perm();
                Ok(basis_pairs(*m, k)
                    .into_iter()
                    .map(|(u, v)| {
                        let dz = &u * w.transpose() / it;
                        let dw = &w * v.transpose() * it;
                        let mut lim = Matrix::zeros(*m, *n);
                        lim.columns_mut(0, k).copy_from(&(&u * v.transpose() * -2.0));
                        DegenerateDirection {
                            v: concat(&[vec_of(&dz), vec_of(&dw)]),
                            limit: vec_of(&(lim * &p)),
                        }
                    })
                    .collect())
            }
            _ => invalid(format!("no degenerate-direction generator for {}", self.id.name())),
        }
    }

    /// Downstairs sequence `x_i -> φ(y)` admitting no lift converging to `y`.
    pub fn pathological_sequence(&self, y: &Vector, i: usize) -> Result<Vector> {
        let exp = self.expected(y)?;
        if exp.local_to_local != Some(false) {
            return Err(LiftError::NoPathology);
        }
        if i == 0 {
            return invalid("sequence index starts at 1");
        }
        let tol = *self.tol();
        let it = i as f64;
        let x = self.lift.value(y)?;
        let b = self.blocks(y);
        match &self.id {
            EntryId::DesingChart { m, n, r, .. } => {
                let xm = mat_of(x.as_slice(), *m, *n);
                let d = svd(&xm)?;
                let s = d.rank(&tol);
                let u = d.u.columns(0, s).into_owned();
                let v = d.v.columns(0, s).into_owned();
                let k = r - s;
                let u_perp = complement_basis(&u, *m, &tol)?.columns(0, k).into_owned();
                // First column of V_⊥ lies in the kernel subspace S of the chart point.
                let w = &b[1];
                let mut graph = Matrix::zeros(*n, n - r);
                graph.rows_mut(0, n - r).fill_with_identity();
                graph.rows_mut(n - r, *r).copy_from(w);
                let s_basis = range_basis(&(self.perm().transpose() * graph), &tol)?;
                // Generic choices, fixed across i, keep the kernels of x_i inside the chart.
                let mut g = rng(0x5eed);
                let v1 = &s_basis * random_unit(&mut g, s_basis.ncols());
                let rest = complement_basis(&hcat(&v, &Matrix::from_columns(&[v1.clone()])), *n, &tol)?;
                let mut vv = Matrix::from_columns(&[v1]);
                if k > 1 {
                    let mix = random_orthonormal(&mut g, rest.ncols(), k - 1);
                    vv = hcat(&vv, &(rest * mix));
                }
                let step = &u_perp * vv.transpose() / (it * (k as f64).sqrt());
                Ok(vec_of(&(xm + step)))
            }
            EntryId::Svd { r, .. } => {
                let (u, s, v) = (&b[0], b[1].column(0).into_owned(), &b[2]);
                let alpha = svd_offsets(&s, *r, it);
                if let Some(k) = s.iter().position(|&v| v.abs() <= 1e-9) {
                    let (uk, vk) = (self.orth_extra(u)?, self.orth_extra(v)?);
                    let mut u2 = u.clone();
                    let mut v2 = v.clone();
                    u2.set_column(k, &uk);
                    v2.set_column(k, &vk);
                    return Ok(vec_of(&(u2 * Matrix::from_diagonal(&(s + alpha)) * v2.transpose())));
                }
                let (k, l) = repeated_pair(&s.iter().map(|v| v.abs()).collect::<Vec<_>>())
                    .ok_or(LiftError::NoPathology)?;
                let q = givens(*r, k, l);
                let sg = Matrix::from_diagonal(&s.map(|v| v.signum()));
                let u2 = u * &sg * &q * &sg;
                let v2 = v * &q;
                Ok(vec_of(&(u2 * Matrix::from_diagonal(&(s + alpha)) * v2.transpose())))
            }
            EntryId::Msvd { r, .. } => {
                let (u, mm, v) = (&b[0], &b[1], &b[2]);
                let (lam, w) = sym_eig(mm)?;
                let lam = Vector::from_vec(lam);
                let alpha = svd_offsets(&lam, *r, it);
                let m_i = mm + &w * Matrix::from_diagonal(&alpha) * w.transpose();
                if let Some(k) = lam.iter().position(|&v| v.abs() <= 1e-9) {
                    let uw = u * &w;
                    let vw = v * &w;
                    let y_rot = plane_rotation(&uw.column(k).into_owned(), &self.orth_extra(u)?);
                    let z_rot = plane_rotation(&vw.column(k).into_owned(), &self.orth_extra(v)?);
                    return Ok(vec_of(&(y_rot * u * m_i * (z_rot * v).transpose())));
                }
                let mut found = None;
                for a in 0..*r {
                    for c in a + 1..*r {
                        if (lam[a] + lam[c]).abs() <= 1e-9 {
                            found = Some((a, c));
                        }
                    }
                }
                let (k, l) = found.ok_or(LiftError::NoPathology)?;
                let mut t = Matrix::identity(*r, *r);
                t.swap_columns(k, l);
                let mut sflip = Matrix::identity(*r, *r);
                sflip[(k, k)] = -1.0;
                sflip[(l, l)] = -1.0;
                let u2 = u * &w * &t * &sflip * w.transpose();
                let v2 = v * &w * &t * w.transpose();
                Ok(vec_of(&(u2 * m_i * v2.transpose())))
            }
            EntryId::Lr { m, n, r } => {
                let (l, rr) = (&b[0], &b[1]);
                let xm = l * rr.transpose();
                let d = svd(&xm)?;
                let s = d.rank(&tol);
                let cx = d.u.columns(0, s).into_owned();
                let rx = d.v.columns(0, s).into_owned();
                let lp = lr_perp(l, &cx, *m, *r, s, &tol)?;
                let rp = lr_perp(rr, &rx, *n, *r, s, &tol)?;
                let li = &cx * cx.transpose() * l + lp / it;
                let ri = &rx * rx.transpose() * rr + rp / it;
                Ok(vec_of(&(li * ri.transpose())))
            }
            _ => Err(LiftError::NoPathology),
        }
    }

    /// Unit vector orthogonal to the columns of `a` (needs `rows > cols`).
    fn orth_extra(&self, a: &Matrix) -> Result<Vector> {
        let c = complement_basis(a, a.nrows(), self.tol())?;
        if c.ncols() == 0 {
            return invalid("no orthogonal direction available");
        }
        Ok(c.column(0).into_owned())
    }

    /// Extra covectors worth testing against the dual cone: `a bᵀ` with `a ⟂ U`,
    /// `b ⟂ V` for the factored low-rank lifts. Empty for other entries.
    pub fn obstruction_candidates(&self, y: &Vector) -> Result<Vec<Vector>> {
        self.lift.check(y)?;
        let (m, n) = match &self.id {
            EntryId::Svd { m, n, .. } | EntryId::Msvd { m, n, .. } => (*m, *n),
            _ => return Ok(vec![]),
        };
        let b = self.blocks(y);
        let a = complement_basis(&b[0], m, self.tol())?;
        let c = complement_basis(&b[2], n, self.tol())?;
        let mut out = Vec::new();
        for i in 0..a.ncols() {
            for j in 0..c.ncols() {
                let w = vec_of(&(a.column(i) * c.column(j).transpose()));
                out.push(-&w);
                out.push(w);
            }
        }
        Ok(out)
    }

    /// A random preimage of a downstairs point, from the known fiber structure.
    pub fn lift_point(&self, x: &Vector, seed: u64) -> Result<Vector> {
        if x.len() != self.lift.ambient_dim() {
            return invalid("downstairs point has the wrong length");
        }
        if !self.set.contains(x) {
            return invalid("point is not in the downstairs set");
        }
        let mut g = rng(seed);
        let tol = *self.tol();
        let sign = |g: &mut Rng64| if g.random::<bool>() { 1.0 } else { -1.0 };
        let y = match &self.id {
            EntryId::Hadamard { .. } | EntryId::Hadprod { .. } => {
                x.map(|v| v.max(0.0).sqrt()).component_mul(&random_signs(&mut g, x.len()))
            }
            EntryId::EigenSimplex { .. } => {
                let Data::Orth(u) = &self.data else { unreachable!() };
                u * x.map(|v| v.max(0.0).sqrt()).component_mul(&random_signs(&mut g, x.len()))
            }
            EntryId::Ball { .. } => {
                let t = (1.0 - x.norm_squared()).max(0.0).sqrt() * sign(&mut g);
                concat(&[x.clone(), Vector::from_element(1, t)])
            }
            EntryId::Annulus { r1, r2, .. } => {
                let q = x.norm_squared();
                let s1 = (q - r1 * r1).max(0.0).sqrt() * sign(&mut g);
                let s2 = (r2 * r2 - q).max(0.0).sqrt() * sign(&mut g);
                concat(&[x.clone(), Vector::from_vec(vec![s1, s2])])
            }
            EntryId::BurerMonteiro { n, r, .. } | EntryId::PsdLowrank { n, r } => {
                let data = SdpData { n: *n, r: *r, a: vec![], b: vec![] };
                let f = data.factor_of(&mat_of(x.as_slice(), *n, *n))?;
                vec_of(&(f * random_orthonormal(&mut g, *r, *r)))
            }
            EntryId::Lr { m, n, r } => {
                let d = svd(&mat_of(x.as_slice(), *m, *n))?;
                let half = Matrix::from_diagonal(&Vector::from_fn(*r, |k, _| d.s.get(k).copied().unwrap_or(0.0).sqrt()));
                let j = well_conditioned(&mut g, *r);
                let jinv_t = j.clone().try_inverse().unwrap().transpose();
                let l = d.u.columns(0, *r) * &half * j;
                let rr = d.v.columns(0, *r) * &half * jinv_t;
                concat(&[vec_of(&l), vec_of(&rr)])
            }
            EntryId::DesingChart { m, n, r, .. } => {
                let xp = mat_of(x.as_slice(), *m, *n) * self.perm().transpose();
                let k = n - r;
                let z = xp.columns(k, *r).into_owned();
                let left = xp.columns(0, k).into_owned();
                let mut w = -pinv(&z, &tol)? * &left;
                if (&left + &z * &w).norm() > 1e-8 * xp.norm().max(1.0) {
                    return invalid("point is outside this chart");
                }
                let kz = kernel_basis(&z, &tol)?;
                if kz.ncols() > 0 {
                    w += &kz * gaussian_matrix(&mut g, kz.ncols(), k);
                }
                concat(&[vec_of(&z), vec_of(&w)])
            }
            EntryId::Svd { m, n, r } => {
                let d = svd(&mat_of(x.as_slice(), *m, *n))?;
                let u = d.u.columns(0, *r).into_owned();
                let v = d.v.columns(0, *r).into_owned();
                let s: Vec<f64> = (0..*r).map(|k| d.s.get(k).copied().unwrap_or(0.0)).collect();
                let mut order: Vec<usize> = (0..*r).collect();
                order.shuffle(&mut g);
                let a = random_signs(&mut g, *r);
                let bsg = random_signs(&mut g, *r);
                let u2 = Matrix::from_fn(*m, *r, |i, k| u[(i, order[k])] * a[k]);
                let v2 = Matrix::from_fn(*n, *r, |i, k| v[(i, order[k])] * bsg[k]);
                let sig = Vector::from_fn(*r, |k, _| s[order[k]] * a[k] * bsg[k]);
                concat(&[vec_of(&u2), sig, vec_of(&v2)])
            }
            EntryId::Msvd { m, n, r } => {
                let d = svd(&mat_of(x.as_slice(), *m, *n))?;
                let u = d.u.columns(0, *r).into_owned();
                let v = d.v.columns(0, *r).into_owned();
                let dsg = random_signs(&mut g, *r);
                let lam = Vector::from_fn(*r, |k, _| d.s.get(k).copied().unwrap_or(0.0) * dsg[k]);
                let w = random_orthonormal(&mut g, *r, *r);
                let u2 = u * Matrix::from_diagonal(&dsg) * w.transpose();
                let v2 = v * w.transpose();
                let mm = &w * Matrix::from_diagonal(&lam) * w.transpose();
                let mm = (&mm + mm.transpose()) * 0.5;
                concat(&[vec_of(&u2), vec_of(&mm), vec_of(&v2)])
            }
            EntryId::CpRank1 { dims } => {
                let (sigma, f) = hopm(x, dims, 4, &mut g);
                let d = dims.len() as f64;
                let scale = sigma.powf(1.0 / d);
                let mut c: Vec<f64> = (0..dims.len()).map(|_| g.random_range(-0.5f64..0.5).exp() * sign(&mut g)).collect();
                let prod: f64 = c.iter().product();
                c[0] /= prod;
                concat(&f.iter().zip(&c).map(|(a, ck)| a * (scale * ck)).collect::<Vec<_>>())
            }
            EntryId::NodalCubic => {
                let t = if x[0].abs() > 1e-12 {
                    x[1] / x[0]
                } else if x[1].abs() <= 1e-12 {
                    sign(&mut g)
                } else {
                    return invalid("point is not on the curve");
                };
                Vector::from_vec(vec![t * t - 1.0, t * t * t - t, t])
            }
            EntryId::DiskQuartic => {
                let t = (1.0 - x.norm_squared()).max(0.0).powf(0.25) * sign(&mut g);
                Vector::from_vec(vec![x[0], x[1], t])
            }
        };
        let y = self.lift.manifold.project_to_manifold(&y, &tol).unwrap_or(y);
        Ok(y)
    }

    /// A random point of the fiber `φ^{-1}(φ(y))`.
    pub fn fiber_sample(&self, y: &Vector, seed: u64) -> Result<Vector> {
        self.lift_point(&self.lift.value(y)?, seed)
    }
}

fn sphere_point(g: &mut Rng64, n: usize, boundary: bool) -> Vector {
    let mut y = gaussian_vector(g, n);
    if boundary {
        let count = g.random_range(1..n);
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(g);
        for &i in &idx[..count] {
            y[i] = 0.0;
        }
    }
    &y / y.norm()
}

fn repeated_pair(abs: &[f64]) -> Option<(usize, usize)> {
    for k in 0..abs.len() {
        for l in k + 1..abs.len() {
            if (abs[k] - abs[l]).abs() <= 1e-9 {
                return Some((k, l));
            }
        }
    }
    None
}

/// Offsets `α_i` of norm at most `1/i` making `|s + α_i|` distinct and nonzero.
fn svd_offsets(s: &Vector, r: usize, it: f64) -> Vector {
    let denom = r as f64 * (r as f64).sqrt();
    Vector::from_fn(r, |k, _| {
        let sg = if s[k] < 0.0 { -1.0 } else { 1.0 };
        sg * 0.5 * (k as f64 + 1.0) / denom / it
    })
}

/// Rotation by `π/4` in the `(k, l)` plane.
fn givens(r: usize, k: usize, l: usize) -> Matrix {
    let c = std::f64::consts::FRAC_1_SQRT_2;
    let mut q = Matrix::identity(r, r);
    q[(k, k)] = c;
    q[(l, l)] = c;
    q[(l, k)] = c;
    q[(k, l)] = -c;
    q
}

/// Orthogonal map sending unit `a` to unit `b` (with `a ⟂ b`), identity off their span.
fn plane_rotation(a: &Vector, b: &Vector) -> Matrix {
    let n = a.len();
    Matrix::identity(n, n) + b * a.transpose() - a * b.transpose() - a * a.transpose() - b * b.transpose()
}

/// `L_⊥` of the low-rank construction: first column outside `col(L)`, then
/// `r - s - 1` columns in `col(X)^⊥ ∩ span(v_1)^⊥`, the rest zero.
fn lr_perp(l: &Matrix, cx: &Matrix, m: usize, r: usize, s: usize, tol: &TolerancePolicy) -> Result<Matrix> {
    let cl = range_basis(l, tol)?;
    let v1 = complement_basis(&cl, m, tol)?.column(0).into_owned();
    let both = hcat(cx, &Matrix::from_columns(&[v1.clone()]));
    let rest = complement_basis(&both, m, tol)?;
    let mut out = Matrix::zeros(m, r);
    out.set_column(0, &v1);
    for k in 1..(r - s) {
        out.set_column(k, &rest.column(k - 1));
    }
    Ok(out)
}

/// All default entries, built.
pub fn all_defaults() -> Result<Vec<CatalogEntry>> {
    EntryId::defaults().iter().map(build).collect()
}

/// Seed for trial `k` of a regime, independent of evaluation order.
pub fn trial_seed(seed: u64, entry: &EntryId, regime: &str, k: usize) -> u64 {
    let tag = entry
        .name()
        .bytes()
        .chain(regime.bytes())
        .fold(0xcbf29ce484222325u64, |h, b| (h ^ b as u64).wrapping_mul(0x100000001b3));
    derive_seed(derive_seed(seed, tag), k as u64)
}
