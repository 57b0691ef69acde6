//! Dense linear-algebra kernels and the tolerance policy.
//!
//! Matrices are `nalgebra::DMatrix<f64>`. Matrix-valued points of ambient
//! spaces (e.g. `R^{m x n}`) are flattened column-major with [`vec_of`] and
//! restored with [`mat_of`]; inner products are unaffected by the layout.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, LiftError, Result};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;
pub type Rng64 = ChaCha8Rng;

/// Thresholds used for numerical rank, semidefiniteness and zero tests.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TolerancePolicy {
    /// Singular values at most `rank_tol_factor * s_max * max(rows, cols)` count as zero.
    pub rank_tol_factor: f64,
    pub psd_tol: f64,
    /// Absolute floor below which a quantity is treated as zero.
    pub zero_tol: f64,
}

impl Default for TolerancePolicy {
    fn default() -> Self {
        Self {
            rank_tol_factor: 1e-10,
            psd_tol: 1e-9,
            zero_tol: 1e-11,
        }
    }
}

impl TolerancePolicy {
    pub fn validate(&self) -> Result<()> {
        if self.rank_tol_factor > 0.0 && self.psd_tol > 0.0 && self.zero_tol > 0.0 {
            Ok(())
        } else {
            invalid("tolerances must be positive")
        }
    }

    /// Cut-off for singular values of a `rows x cols` matrix with largest singular value `smax`.
    pub fn rank_threshold(&self, smax: f64, rows: usize, cols: usize) -> f64 {
        (self.rank_tol_factor * smax * rows.max(cols) as f64).max(self.zero_tol)
    }
}

/// Thin singular value decomposition `A = U diag(s) V^T`, `s` descending.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: Matrix,
    pub s: Vec<f64>,
    pub v: Matrix,
}

impl Svd {
    pub fn rank(&self, tol: &TolerancePolicy) -> usize {
        let smax = self.s.first().copied().unwrap_or(0.0);
        let thr = tol.rank_threshold(smax, self.u.nrows(), self.v.nrows());
        self.s.iter().filter(|&&s| s > thr).count()
    }
}

pub fn check_finite(a: &Matrix) -> Result<()> {
    if a.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        invalid("matrix has non-finite entries")
    }
}

pub fn svd(a: &Matrix) -> Result<Svd> {
    check_finite(a)?;
    let (m, n) = a.shape();
    let k = m.min(n);
    if k == 0 {
        return Ok(Svd {
            u: Matrix::zeros(m, 0),
            s: vec![],
            v: Matrix::zeros(n, 0),
        });
    }
    // The default convergence threshold of `svd()` can stop early on clustered singular
    // values; iterate to a tighter one and keep the best reconstruction.
    let scale = a.norm().max(f64::MIN_POSITIVE);
    let mut best: Option<(f64, nalgebra::SVD<f64, nalgebra::Dyn, nalgebra::Dyn>)> = None;
    for eps in [1e-14, 1e-16, 1e-20, 1e-12] {
        let Some(dec) = a.clone().try_svd(true, true, eps, 5_000) else { continue };
        let (Some(u), Some(vt)) = (&dec.u, &dec.v_t) else { continue };
        let err = (u * Matrix::from_diagonal(&dec.singular_values) * vt - a).norm() / scale;
        if best.as_ref().is_none_or(|(e, _)| err < *e) {
            best = Some((err, dec));
        }
        if err <= 1e-12 {
            break;
        }
    }
    let (_, dec) = best.ok_or_else(|| LiftError::InvalidInput("svd failed to converge".into()))?;
    let u = dec.u.ok_or_else(|| LiftError::InvalidInput("svd failed".into()))?;
    let vt = dec.v_t.ok_or_else(|| LiftError::InvalidInput("svd failed".into()))?;
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| dec.singular_values[j].total_cmp(&dec.singular_values[i]));
    let mut uu = Matrix::zeros(m, k);
    let mut vv = Matrix::zeros(n, k);
    let mut s = Vec::with_capacity(k);
    for (dst, &src) in order.iter().enumerate() {
        uu.set_column(dst, &u.column(src));
        vv.set_column(dst, &vt.row(src).transpose());
        s.push(dec.singular_values[src]);
    }
    Ok(Svd { u: uu, s, v: vv })
}

pub fn numerical_rank(a: &Matrix, tol: &TolerancePolicy) -> Result<usize> {
    Ok(svd(a)?.rank(tol))
}

/// Orthonormal basis of the column space of `a`.
pub fn range_basis(a: &Matrix, tol: &TolerancePolicy) -> Result<Matrix> {
    let d = svd(a)?;
    let r = d.rank(tol);
    Ok(d.u.columns(0, r).into_owned())
}

/// Orthonormal basis of the null space of `a`.
pub fn kernel_basis(a: &Matrix, tol: &TolerancePolicy) -> Result<Matrix> {
    check_finite(a)?;
    let (m, n) = a.shape();
    if n == 0 {
        return Ok(Matrix::zeros(0, 0));
    }
    if m == 0 {
        return Ok(Matrix::identity(n, n));
    }
    // Pad with zero rows so the decomposition returns a full right basis.
    let padded = if m < n {
        let mut p = Matrix::zeros(n, n);
        p.rows_mut(0, m).copy_from(a);
        p
    } else {
        a.clone()
    };
    let d = svd(&padded)?;
    let smax = d.s.first().copied().unwrap_or(0.0);
    let thr = tol.rank_threshold(smax, m, n);
    let cols: Vec<usize> = (0..n).filter(|&i| d.s[i] <= thr).collect();
    let mut k = Matrix::zeros(n, cols.len());
    for (j, &i) in cols.iter().enumerate() {
        k.set_column(j, &d.v.column(i));
    }
    Ok(k)
}

/// Orthonormal basis of the orthogonal complement of `span(basis)` in `R^n`.
pub fn complement_basis(basis: &Matrix, n: usize, tol: &TolerancePolicy) -> Result<Matrix> {
    if basis.ncols() == 0 {
        return Ok(Matrix::identity(n, n));
    }
    kernel_basis(&basis.transpose(), tol)
}

pub fn pinv(a: &Matrix, tol: &TolerancePolicy) -> Result<Matrix> {
    let (m, n) = a.shape();
    let d = svd(a)?;
    let r = d.rank(tol);
    let mut p = Matrix::zeros(n, m);
    for i in 0..r {
        p += d.v.column(i) * d.u.column(i).transpose() / d.s[i];
    }
    Ok(p)
}

/// Eigen-decomposition of the symmetric part of `s`; eigenvalues ascending.
pub fn sym_eig(s: &Matrix) -> Result<(Vec<f64>, Matrix)> {
    check_finite(s)?;
    if s.nrows() != s.ncols() {
        return invalid("sym_eig needs a square matrix");
    }
    let n = s.nrows();
    if n == 0 {
        return Ok((vec![], Matrix::zeros(0, 0)));
    }
    let e = SymmetricEigen::new(sym(s));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| e.eigenvalues[i].total_cmp(&e.eigenvalues[j]));
    let mut vecs = Matrix::zeros(n, n);
    let mut vals = Vec::with_capacity(n);
    for (dst, &src) in order.iter().enumerate() {
        vecs.set_column(dst, &e.eigenvectors.column(src));
        vals.push(e.eigenvalues[src]);
    }
    Ok((vals, vecs))
}

/// Smallest eigenvalue of the symmetric part; `+inf` for an empty matrix.
pub fn min_eig(s: &Matrix) -> Result<f64> {
    Ok(sym_eig(s)?.0.first().copied().unwrap_or(f64::INFINITY))
}

/// Least-norm minimizer of `||A x - b||`.
pub fn min_norm_solve(a: &Matrix, b: &Vector, tol: &TolerancePolicy) -> Result<Vector> {
    if a.nrows() != b.len() {
        return invalid(format!(
            "min_norm_solve: {} rows but rhs of length {}",
            a.nrows(),
            b.len()
        ));
    }
    Ok(pinv(a, tol)? * b)
}

pub fn projector(basis: &Matrix) -> Matrix {
    basis * basis.transpose()
}

/// Frobenius distance between the orthogonal projectors onto two spans.
pub fn subspace_distance(b1: &Matrix, b2: &Matrix) -> f64 {
    (projector(b1) - projector(b2)).norm()
}

pub fn sym(a: &Matrix) -> Matrix {
    (a + a.transpose()) * 0.5
}

pub fn skew(a: &Matrix) -> Matrix {
    (a - a.transpose()) * 0.5
}

pub fn vec_of(a: &Matrix) -> Vector {
    Vector::from_column_slice(a.as_slice())
}

pub fn mat_of(v: &[f64], rows: usize, cols: usize) -> Matrix {
    debug_assert_eq!(v.len(), rows * cols);
    Matrix::from_column_slice(rows, cols, v)
}

pub fn block_diag(blocks: &[Matrix]) -> Matrix {
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = Matrix::zeros(rows, cols);
    let (mut r, mut c) = (0, 0);
    for b in blocks {
        out.view_mut((r, c), b.shape()).copy_from(b);
        r += b.nrows();
        c += b.ncols();
    }
    out
}

pub fn hcat(a: &Matrix, b: &Matrix) -> Matrix {
    assert_eq!(a.nrows(), b.nrows());
    let mut out = Matrix::zeros(a.nrows(), a.ncols() + b.ncols());
    out.columns_mut(0, a.ncols()).copy_from(a);
    out.columns_mut(a.ncols(), b.ncols()).copy_from(b);
    out
}

pub fn vcat(a: &Vector, b: &Vector) -> Vector {
    let mut out = Vector::zeros(a.len() + b.len());
    out.rows_mut(0, a.len()).copy_from(a);
    out.rows_mut(a.len(), b.len()).copy_from(b);
    out
}

/// Seeded generator used everywhere randomness is needed.
pub fn rng(seed: u64) -> Rng64 {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Counter-based derivation of independent sub-seeds (SplitMix64 finalizer).
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed
        .wrapping_add(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(stream.wrapping_mul(0xBF58_476D_1CE4_E5B9));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn gaussian_vector(rng: &mut impl Rng, n: usize) -> Vector {
    Vector::from_fn(n, |_, _| rng.sample(StandardNormal))
}

pub fn gaussian_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// Random `n x k` matrix with orthonormal columns.
pub fn random_orthonormal(rng: &mut impl Rng, n: usize, k: usize) -> Matrix {
    assert!(k <= n);
    if k == 0 {
        return Matrix::zeros(n, 0);
    }
    let g = gaussian_matrix(rng, n, k);
    let qr = g.qr();
    let q = qr.q();
    let r = qr.r();
    // Fix signs so the distribution is Haar.
    let mut out = q.columns(0, k).into_owned();
    for j in 0..k {
        if r[(j, j)] < 0.0 {
            out.column_mut(j).neg_mut();
        }
    }
    out
}

pub fn random_unit(rng: &mut impl Rng, n: usize) -> Vector {
    loop {
        let g = gaussian_vector(rng, n);
        let nrm = g.norm();
        if nrm > 1e-12 {
            return g / nrm;
        }
    }
}

/// Least-squares slope of `log r` against `log t`.
pub fn loglog_slope(ts: &[f64], rs: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = ts
        .iter()
        .zip(rs)
        .filter(|(_, &r)| r > 0.0)
        .map(|(&t, &r)| (t.ln(), r.ln()))
        .collect();
    if pts.len() < 2 {
        return f64::NAN;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

/// Nonnegative least squares `argmin_{x >= 0} ||A x - b||` (Lawson-Hanson active set).
pub fn nnls(a: &Matrix, b: &Vector) -> Vector {
    let n = a.ncols();
    let mut x = Vector::zeros(n);
    if n == 0 {
        return x;
    }
    let scale = a.norm().max(1.0) * b.norm().max(1.0);
    let tol = 1e-13 * scale;
    let mut passive = vec![false; n];
    let solve_passive = |passive: &[bool]| -> Vector {
        let idx: Vec<usize> = (0..n).filter(|&i| passive[i]).collect();
        let mut z = Vector::zeros(n);
        if idx.is_empty() {
            return z;
        }
        let mut sub = Matrix::zeros(a.nrows(), idx.len());
        for (k, &i) in idx.iter().enumerate() {
            sub.set_column(k, &a.column(i));
        }
        let sol = pinv(&sub, &TolerancePolicy::default())
            .map(|p| p * b)
            .unwrap_or_else(|_| Vector::zeros(idx.len()));
        for (k, &i) in idx.iter().enumerate() {
            z[i] = sol[k];
        }
        z
    };
    for _ in 0..(3 * n + 30) {
        let grad = a.transpose() * (b - a * &x);
        let candidate = (0..n)
            .filter(|&i| !passive[i] && grad[i] > tol)
            .max_by(|&i, &j| grad[i].total_cmp(&grad[j]));
        let Some(j) = candidate else { break };
        passive[j] = true;
        loop {
            let z = solve_passive(&passive);
            let bad: Vec<usize> = (0..n).filter(|&i| passive[i] && z[i] <= 0.0).collect();
            if bad.is_empty() {
                x = z;
                break;
            }
            let mut alpha = 1.0f64;
            for &i in &bad {
                let denom = x[i] - z[i];
                if denom > 0.0 {
                    alpha = alpha.min(x[i] / denom);
                }
            }
            x += (z - &x) * alpha;
            for i in 0..n {
                if passive[i] && x[i] <= tol.min(1e-15) {
                    passive[i] = false;
                    x[i] = 0.0;
                }
            }
            if !passive.iter().any(|&p| p) {
                break;
            }
        }
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn svd_of_diagonal_sorts_descending() {
        let a = Matrix::from_row_slice(2, 2, &[3.0, 0.0, 0.0, 4.0]);
        let d = svd(&a).unwrap();
        assert!((d.s[0] - 4.0).abs() < 1e-14 && (d.s[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn kernel_of_wide_matrix() {
        let a = Matrix::from_row_slice(1, 2, &[1.0, 0.0]);
        let k = kernel_basis(&a, &TolerancePolicy::default()).unwrap();
        assert_eq!(k.ncols(), 1);
        assert!(k[(0, 0)].abs() < 1e-14 && (k[(1, 0)].abs() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn nonfinite_rejected() {
        let a = Matrix::from_row_slice(1, 1, &[f64::NAN]);
        assert!(matches!(svd(&a), Err(LiftError::InvalidInput(_))));
    }

    #[test]
    fn nnls_clips_negative_solution() {
        let a = Matrix::identity(2, 2);
        let b = Vector::from_vec(vec![1.0, -2.0]);
        let x = nnls(&a, &b);
        assert!((x[0] - 1.0).abs() < 1e-14 && x[1] == 0.0);
    }

    #[test]
    fn derived_seeds_differ() {
        assert_ne!(derive_seed(7, 0), derive_seed(7, 1));
        assert_eq!(derive_seed(7, 3), derive_seed(7, 3));
    }
}
