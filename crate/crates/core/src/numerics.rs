//! Dense complex linear algebra used throughout the crate.
//!
//! Matrices and vectors are `nalgebra` dynamic types over `Complex64`. Bipartite
//! spaces use the composite index `i_A * dim_B + i_B` everywhere. Eigen- and
//! singular value decompositions are delegated to `faer`.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Eigenvalues closer than this are treated as one degenerate cluster.
pub const CLUSTER_GAP: f64 = 1e-8;

#[inline]
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[inline]
pub fn r(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Absolute-plus-relative tolerance shared by every approximate comparison.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    pub eps: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance { eps: 1e-9 }
    }
}

impl Tolerance {
    pub fn new(eps: f64) -> Result<Self> {
        if !eps.is_finite() || eps <= 0.0 {
            return Err(Error::InvalidTolerance(eps));
        }
        Ok(Tolerance { eps })
    }

    /// `|x - y| <= eps * (1 + max(|x|, |y|))`
    pub fn approx_eq(&self, x: f64, y: f64) -> bool {
        (x - y).abs() <= self.eps * (1.0 + x.abs().max(y.abs()))
    }

    pub fn approx_eq_c(&self, x: Complex64, y: Complex64) -> bool {
        (x - y).norm() <= self.eps * (1.0 + x.norm().max(y.norm()))
    }

    /// A residual measured against something of magnitude `scale`.
    pub fn negligible(&self, residual: f64, scale: f64) -> bool {
        residual <= self.eps * (1.0 + scale.abs())
    }

    pub fn scaled(&self, factor: f64) -> Tolerance {
        Tolerance { eps: self.eps * factor }
    }
}

/// One party of a bipartite system.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Side {
    A,
    B,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Side::A => f.write_str("A"),
            Side::B => f.write_str("B"),
        }
    }
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ra, ca) = a.shape();
    let (rb, cb) = b.shape();
    CMatrix::from_fn(ra * rb, ca * cb, |row, col| {
        a[(row / rb, col / cb)] * b[(row % rb, col % cb)]
    })
}

pub fn kron_vec(u: &CVector, v: &CVector) -> CVector {
    let dv = v.len();
    CVector::from_fn(u.len() * dv, |i, _| u[i / dv] * v[i % dv])
}

/// Frobenius norm.
pub fn norm(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn vnorm(v: &CVector) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn inner(u: &CVector, v: &CVector) -> Complex64 {
    u.iter().zip(v.iter()).map(|(a, b)| a.conj() * b).sum()
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

pub fn projector(v: &CVector) -> CMatrix {
    v * v.adjoint()
}

pub fn basis_vector(dim: usize, index: usize) -> CVector {
    let mut v = CVector::zeros(dim);
    v[index] = r(1.0);
    v
}

pub fn is_finite(m: &CMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// View a bipartite vector as its `dim_a x dim_b` coefficient matrix.
pub fn to_coefficients(psi: &CVector, dim_a: usize, dim_b: usize) -> CMatrix {
    CMatrix::from_fn(dim_a, dim_b, |i, j| psi[i * dim_b + j])
}

pub fn from_coefficients(m: &CMatrix) -> CVector {
    let (da, db) = m.shape();
    CVector::from_fn(da * db, |k, _| m[(k / db, k % db)])
}

/// Reduced operator on one party. `keep` names the subsystem that survives.
pub fn partial_trace(rho: &CMatrix, dim_a: usize, dim_b: usize, keep: Side) -> Result<CMatrix> {
    let d = dim_a * dim_b;
    if rho.nrows() != d || rho.ncols() != d {
        return Err(Error::DimensionMismatch(format!(
            "partial trace of {}x{} operator over {}x{} bipartition",
            rho.nrows(),
            rho.ncols(),
            dim_a,
            dim_b
        )));
    }
    Ok(match keep {
        Side::A => CMatrix::from_fn(dim_a, dim_a, |i, j| {
            (0..dim_b).map(|k| rho[(i * dim_b + k, j * dim_b + k)]).sum()
        }),
        Side::B => CMatrix::from_fn(dim_b, dim_b, |i, j| {
            (0..dim_a).map(|k| rho[(k * dim_b + i, k * dim_b + j)]).sum()
        }),
    })
}

/// Make the first non-negligible entry real and positive.
pub fn fix_phase(v: &mut CVector) {
    let scale = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return;
    }
    if let Some(z) = v.iter().find(|z| z.norm() > 1e-8 * scale).copied() {
        let phase = z.conj() / z.norm();
        for e in v.iter_mut() {
            *e *= phase;
        }
    }
}

#[derive(Clone, Debug)]
pub struct HermitianEigen {
    /// Descending.
    pub values: Vec<f64>,
    /// Eigenvectors as columns, aligned with `values`.
    pub vectors: CMatrix,
}

impl HermitianEigen {
    /// Index ranges of eigenvalue clusters (consecutive values closer than `CLUSTER_GAP`).
    pub fn clusters(&self) -> Vec<std::ops::Range<usize>> {
        clusters_of(&self.values)
    }

    pub fn reconstruct(&self) -> CMatrix {
        let d = self.values.len();
        let lam = CMatrix::from_diagonal(&CVector::from_fn(d, |i, _| r(self.values[i])));
        &self.vectors * lam * self.vectors.adjoint()
    }
}

fn clusters_of(values: &[f64]) -> Vec<std::ops::Range<usize>> {
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..=values.len() {
        let split = i == values.len() || (values[i - 1] - values[i]).abs() >= CLUSTER_GAP * (1.0 + values[i].abs());
        if split {
            out.push(start..i);
            start = i;
        }
    }
    out
}

pub fn hermitian_residual(h: &CMatrix) -> f64 {
    norm(&(h - h.adjoint()))
}

/// Eigendecomposition of a Hermitian matrix with a reproducible eigenbasis.
///
/// Within each degenerate cluster the basis is rebuilt from the projections of
/// the standard basis vectors, taken in index order; every eigenvector then has
/// its first non-negligible entry made real positive.
pub fn hermitian_eig(h: &CMatrix, tol: Tolerance) -> Result<HermitianEigen> {
    if !h.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "eigendecomposition of non-square {}x{} matrix",
            h.nrows(),
            h.ncols()
        )));
    }
    let residual = hermitian_residual(h);
    if !tol.negligible(residual, norm(h)) {
        return Err(Error::NotHermitian { residual });
    }
    let d = h.nrows();
    if d == 0 {
        return Ok(HermitianEigen {
            values: vec![],
            vectors: CMatrix::zeros(0, 0),
        });
    }
    let sym = (h + h.adjoint()).scale(0.5);
    let eig = to_faer(&sym)
        .self_adjoint_eigen(faer::Side::Lower)
        .map_err(|_| Error::NotHermitian { residual })?;
    // faer returns ascending eigenvalues
    let values: Vec<f64> = (0..d).rev().map(|i| eig.S()[i].re).collect();
    let u = eig.U();
    let mut vectors = CMatrix::from_fn(d, d, |i, k| u[(i, d - 1 - k)]);

    for range in clusters_of(&values) {
        let cols: Vec<CVector> = range.clone().map(|k| vectors.column(k).into_owned()).collect();
        let canonical = canonical_subspace_basis(&cols);
        for (k, mut v) in range.zip(canonical) {
            fix_phase(&mut v);
            vectors.set_column(k, &v);
        }
    }
    Ok(HermitianEigen { values, vectors })
}

/// Canonical orthonormal basis of `span(cols)` (assumed orthonormal): project
/// `e_0, e_1, ...` in order and Gram-Schmidt the well-conditioned ones.
pub fn canonical_subspace_basis(cols: &[CVector]) -> Vec<CVector> {
    let k = cols.len();
    if k <= 1 {
        return cols.to_vec();
    }
    let d = cols[0].len();
    let project = |v: &CVector| -> CVector {
        let mut out = CVector::zeros(d);
        for q in cols {
            out += q * inner(q, v);
        }
        out
    };
    let mut basis: Vec<CVector> = Vec::with_capacity(k);
    for j in 0..d {
        if basis.len() == k {
            break;
        }
        let mut v = project(&basis_vector(d, j));
        for _ in 0..2 {
            for q in &basis {
                let coef = inner(q, &v);
                v -= q * coef;
            }
        }
        let n = vnorm(&v);
        if n > 1e-3 {
            basis.push(v / r(n));
        }
    }
    if basis.len() < k {
        return cols.to_vec();
    }
    basis
}

/// Orthonormal basis of `span(vs)`; a vector is dropped when its residual after
/// projection is below `eps * (1 + max input norm)`.
pub fn orthonormalize(vs: &[CVector], tol: Tolerance) -> Vec<CVector> {
    let scale = vs.iter().map(vnorm).fold(0.0, f64::max);
    let threshold = tol.eps * (1.0 + scale);
    let mut basis: Vec<CVector> = Vec::new();
    for v in vs {
        if let Some(q) = orthogonal_residual(&basis, v, threshold) {
            basis.push(q);
        }
    }
    basis
}

/// Normalized component of `v` orthogonal to the orthonormal `basis`, or `None`
/// if that component is below `threshold`.
pub fn orthogonal_residual(basis: &[CVector], v: &CVector, threshold: f64) -> Option<CVector> {
    let mut w = v.clone();
    // two passes of modified Gram-Schmidt
    for _ in 0..2 {
        for q in basis {
            let coef = inner(q, &w);
            w -= q * coef;
        }
    }
    let n = vnorm(&w);
    if n > threshold {
        Some(w / r(n))
    } else {
        None
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StructuralFlags {
    pub hermitian: bool,
    pub positive: bool,
    pub projection: bool,
    pub isometry: bool,
    pub unitary: bool,
    pub hermitian_residual: f64,
    pub min_eigenvalue: Option<f64>,
    pub projection_residual: Option<f64>,
    pub isometry_residual: f64,
    pub coisometry_residual: f64,
}

pub fn structural_predicates(m: &CMatrix, tol: Tolerance) -> StructuralFlags {
    let scale = norm(m);
    let square = m.is_square();
    let herm_res = if square { hermitian_residual(m) } else { f64::INFINITY };
    let hermitian = square && tol.negligible(herm_res, scale);

    let min_eigenvalue = if hermitian {
        hermitian_eig(m, tol).ok().and_then(|e| e.values.last().copied())
    } else {
        None
    };
    let positive = min_eigenvalue.is_some_and(|l| l >= -tol.eps * (1.0 + scale));

    let projection_residual = square.then(|| norm(&(m * m - m)));
    let projection = hermitian && projection_residual.is_some_and(|p| tol.negligible(p, scale));

    let id_cols = CMatrix::identity(m.ncols(), m.ncols());
    let id_rows = CMatrix::identity(m.nrows(), m.nrows());
    let isometry_residual = norm(&(m.adjoint() * m - &id_cols));
    let coisometry_residual = norm(&(m * m.adjoint() - &id_rows));
    let isometry = tol.negligible(isometry_residual, 1.0);
    let unitary = square && isometry && tol.negligible(coisometry_residual, 1.0);

    StructuralFlags {
        hermitian,
        positive,
        projection,
        isometry,
        unitary,
        hermitian_residual: herm_res,
        min_eigenvalue,
        projection_residual,
        isometry_residual,
        coisometry_residual,
    }
}

fn to_faer(m: &CMatrix) -> faer::Mat<Complex64> {
    faer::Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

fn from_faer(m: faer::MatRef<'_, Complex64>) -> CMatrix {
    CMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

/// `m = U diag(values) V†` with descending singular values.
#[derive(Clone, Debug)]
pub struct Svd {
    pub u: CMatrix,
    pub values: Vec<f64>,
    pub v: CMatrix,
}

/// Thin SVD: `U` is `rows x k`, `V` is `cols x k`, `k = min(rows, cols)`.
pub fn svd(m: &CMatrix) -> Svd {
    if m.is_empty() {
        return Svd {
            u: CMatrix::zeros(m.nrows(), 0),
            values: vec![],
            v: CMatrix::zeros(m.ncols(), 0),
        };
    }
    let f = to_faer(m).thin_svd().expect("SVD converges for finite input");
    let k = m.nrows().min(m.ncols());
    Svd {
        u: from_faer(f.U()),
        values: (0..k).map(|i| f.S()[i].re).collect(),
        v: from_faer(f.V()),
    }
}

/// Singular values (descending) and the full set of right singular vectors as
/// columns of a square `V`; directions beyond `min(rows, cols)` get value 0.
pub fn svd_right(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let cols = m.ncols();
    if m.is_empty() {
        return (vec![0.0; cols], CMatrix::identity(cols, cols));
    }
    let fm = to_faer(m);
    // a thin factorization already carries every right vector when rows >= cols
    let f = if m.nrows() >= cols { fm.thin_svd() } else { fm.svd() }.expect("SVD converges for finite input");
    let k = m.nrows().min(cols);
    let mut values: Vec<f64> = (0..k).map(|i| f.S()[i].re).collect();
    values.resize(cols, 0.0);
    (values, from_faer(f.V()))
}

pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    svd(m).values
}

/// Null space of `m`: right singular vectors whose singular value is at most
/// `eps * (1 + sigma_max)`. Also returns the smallest singular value kept out.
pub fn null_space(m: &CMatrix, tol: Tolerance) -> NullSpace {
    let (values, v) = svd_right(m);
    let smax = values.first().copied().unwrap_or(0.0);
    let threshold = tol.eps * (1.0 + smax);
    let mut basis = Vec::new();
    let mut smallest_rejected = f64::INFINITY;
    let mut values_kept = Vec::new();
    for (k, &s) in values.iter().enumerate() {
        if s <= threshold {
            basis.push(v.column(k).into_owned());
            values_kept.push(s);
        } else {
            smallest_rejected = smallest_rejected.min(s);
        }
    }
    NullSpace {
        basis,
        residuals: values_kept,
        gap: smallest_rejected,
        scale: smax,
    }
}

#[derive(Clone, Debug)]
pub struct NullSpace {
    pub basis: Vec<CVector>,
    /// Singular values of the accepted directions.
    pub residuals: Vec<f64>,
    /// Smallest singular value above the threshold (infinity if none).
    pub gap: f64,
    pub scale: f64,
}

pub fn numerical_rank(m: &CMatrix, tol: Tolerance) -> usize {
    let sv = singular_values(m);
    let smax = sv.first().copied().unwrap_or(0.0);
    sv.iter().filter(|&&s| s > tol.eps * (1.0 + smax)).count()
}

/// Square root of a positive semidefinite matrix (negative eigenvalues clamped).
pub fn psd_sqrt(m: &CMatrix, tol: Tolerance) -> Result<CMatrix> {
    let eig = hermitian_eig(m, tol)?;
    let d = eig.values.len();
    let root = CVector::from_fn(d, |i, _| r(eig.values[i].max(0.0).sqrt()));
    Ok(&eig.vectors * CMatrix::from_diagonal(&root) * eig.vectors.adjoint())
}

/// Unitary factor of the polar decomposition.
pub fn polar_unitary(m: &CMatrix) -> CMatrix {
    let f = svd(m);
    f.u * f.v.adjoint()
}

/// Identity of size `n`.
pub fn eye(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

/// Real matrix from nested rows.
pub fn real_matrix(rows: &[&[f64]]) -> CMatrix {
    let nr = rows.len();
    let nc = rows.first().map_or(0, |row| row.len());
    CMatrix::from_fn(nr, nc, |i, j| r(rows[i][j]))
}

pub fn real_diag(values: &[f64]) -> CMatrix {
    CMatrix::from_diagonal(&CVector::from_fn(values.len(), |i, _| r(values[i])))
}

/// Block-diagonal direct sum.
pub fn direct_sum(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ra, ca) = a.shape();
    let (rb, cb) = b.shape();
    let mut out = CMatrix::zeros(ra + rb, ca + cb);
    out.view_mut((0, 0), (ra, ca)).copy_from(a);
    out.view_mut((ra, ca), (rb, cb)).copy_from(b);
    out
}
