//! Symmetric PSD checks and factorizations.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Relative eigenvalue tolerance below which a symmetric matrix is not PSD.
pub const PSD_REL_TOL: f64 = 1e-10;
/// Largest diagonal jitter (relative to the largest diagonal entry) tried
/// before a Cholesky factorization is declared failed.
pub const MAX_JITTER: f64 = 1e-12;
/// Relative eigenvalue floor below which a matrix counts as singular.
pub const RANK_REL_TOL: f64 = 1e-13;

pub fn eigen_range(m: &DMatrix<f64>) -> (f64, f64) {
    if m.nrows() == 0 {
        return (0.0, 0.0);
    }
    let ev = m.clone().symmetric_eigenvalues();
    let lo = ev.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = ev.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    eigen_range(m).0
}

pub fn is_psd(m: &DMatrix<f64>) -> bool {
    let (lo, hi) = eigen_range(m);
    lo >= -PSD_REL_TOL * hi.abs().max(f64::MIN_POSITIVE)
}

/// A square factor `F` with `F Fᵀ = C`, stored row-major.
#[derive(Debug, Clone)]
pub struct Factor {
    pub dim: usize,
    pub data: Vec<f64>,
    /// Diagonal jitter that was added before a Cholesky factorization succeeded.
    pub jitter: f64,
    pub min_eigenvalue: f64,
    /// True when the factor came from the eigendecomposition of a singular
    /// matrix (negative rounding eigenvalues set to zero).
    pub semidefinite: bool,
    lower: bool,
}

impl Factor {
    /// `out = F z`.
    #[inline]
    pub fn apply(&self, z: &[f64], out: &mut [f64]) {
        let k = self.dim;
        for i in 0..k {
            let row = &self.data[i * k..(i + 1) * k];
            let end = if self.lower { i + 1 } else { k };
            let mut s = 0.0;
            for j in 0..end {
                s += row[j] * z[j];
            }
            out[i] = s;
        }
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.dim, self.dim, &self.data)
    }

    fn from_lower(l: &DMatrix<f64>, jitter: f64, min_eigenvalue: f64) -> Self {
        let k = l.nrows();
        let mut data = vec![0.0; k * k];
        for i in 0..k {
            for j in 0..=i {
                data[i * k + j] = l[(i, j)];
            }
        }
        Self {
            dim: k,
            data,
            jitter,
            min_eigenvalue,
            semidefinite: false,
            lower: true,
        }
    }
}

fn try_cholesky(m: &DMatrix<f64>) -> Option<(DMatrix<f64>, f64)> {
    let scale = (0..m.nrows()).map(|i| m[(i, i)].abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    if let Some(c) = m.clone().cholesky() {
        return Some((c.l(), 0.0));
    }
    let mut j = 1e-16 * scale;
    while j <= MAX_JITTER * scale * (1.0 + 1e-9) {
        let mut mm = m.clone();
        for i in 0..m.nrows() {
            mm[(i, i)] += j;
        }
        if let Some(c) = mm.cholesky() {
            return Some((c.l(), j));
        }
        j *= 10.0;
    }
    None
}

/// Cholesky factor of a positive definite matrix; at most [`MAX_JITTER`]
/// relative diagonal jitter is tried.
pub fn cholesky_pd(m: &DMatrix<f64>) -> Result<Factor> {
    let (lo, hi) = eigen_range(m);
    // numerically singular matrices are rejected even if jitter would rescue them
    if lo <= RANK_REL_TOL * hi.abs() {
        return Err(Error::NotPositiveDefinite { min_eigenvalue: lo });
    }
    match try_cholesky(m) {
        Some((l, j)) => Ok(Factor::from_lower(&l, j, lo)),
        None => Err(Error::NotPositiveDefinite { min_eigenvalue: lo }),
    }
}

/// Factor of a positive semidefinite matrix. Singular matrices (for example
/// a fully dependent covariance) are factored through their eigenvectors.
pub fn psd_factor(m: &DMatrix<f64>) -> Result<Factor> {
    let k = m.nrows();
    let eig = m.clone().symmetric_eigen();
    let lo = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = eig.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if k > 0 && lo < -PSD_REL_TOL * hi.abs().max(f64::MIN_POSITIVE) {
        return Err(Error::NotPositiveDefinite { min_eigenvalue: lo });
    }
    if lo > PSD_REL_TOL * hi.abs() {
        if let Some((l, j)) = try_cholesky(m) {
            return Ok(Factor::from_lower(&l, j, lo));
        }
    }
    let mut data = vec![0.0; k * k];
    for i in 0..k {
        for c in 0..k {
            data[i * k + c] = eig.eigenvectors[(i, c)] * eig.eigenvalues[c].max(0.0).sqrt();
        }
    }
    Ok(Factor {
        dim: k,
        data,
        jitter: 0.0,
        min_eigenvalue: lo,
        semidefinite: true,
        lower: false,
    })
}

/// Symmetric PSD matrix with eigenvalues below `floor` raised to `floor`.
pub fn clip_eigenvalues(m: &DMatrix<f64>, floor: f64) -> DMatrix<f64> {
    let eig = m.clone().symmetric_eigen();
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|v| v.max(floor)));
    let v = &eig.eigenvectors;
    let mut r = v * d * v.transpose();
    // restore exact symmetry
    for i in 0..r.nrows() {
        for j in 0..i {
            let a = 0.5 * (r[(i, j)] + r[(j, i)]);
            r[(i, j)] = a;
            r[(j, i)] = a;
        }
    }
    r
}
