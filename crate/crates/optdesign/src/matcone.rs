//! Dense symmetric matrices on the positive semidefinite cone.
//!
//! Everything downstream works with small (d ≤ ~10) symmetric matrices:
//! information matrices, atoms, gradients. This module provides the single
//! numeric primitive they share — a symmetric eigendecomposition — and the
//! operations built on it: definiteness tests, negative matrix powers,
//! Moore–Penrose pseudo-inverse, and Löwner-order comparison.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors raised by matrix-cone operations.
#[derive(Debug, Error)]
pub enum MatError {
    #[error("matrix is not positive definite (lambda_min = {lambda_min:.3e})")]
    NotPositiveDefinite { lambda_min: f64 },
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("eigendecomposition failed to converge")]
    NumericFailure,
}

/// A real symmetric d×d matrix.
///
/// Construction symmetrizes via (A + Aᵀ)/2 rather than rejecting asymmetric
/// input: Jacobian products accumulate roundoff asymmetry and the downstream
/// theory only ever sees symmetric matrices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymMatrix {
    dim: usize,
    /// Row-major entries, kept exactly symmetric.
    data: Vec<f64>,
}

impl SymMatrix {
    /// Builds from an arbitrary square matrix, symmetrizing.
    pub fn from_dmatrix(a: &DMatrix<f64>) -> Self {
        assert_eq!(a.nrows(), a.ncols(), "SymMatrix requires a square matrix");
        let d = a.nrows();
        assert!(d >= 1, "SymMatrix requires dim >= 1");
        let mut data = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..d {
                data[i * d + j] = 0.5 * (a[(i, j)] + a[(j, i)]);
            }
        }
        SymMatrix { dim: d, data }
    }

    /// Builds from row-major entries of a square matrix, symmetrizing.
    pub fn from_rows(d: usize, entries: &[f64]) -> Self {
        assert_eq!(entries.len(), d * d, "entry count must be d*d");
        Self::from_dmatrix(&DMatrix::from_row_slice(d, d, entries))
    }

    /// d×d zero matrix.
    pub fn zeros(d: usize) -> Self {
        assert!(d >= 1);
        SymMatrix { dim: d, data: vec![0.0; d * d] }
    }

    /// d×d identity.
    pub fn identity(d: usize) -> Self {
        let mut m = Self::zeros(d);
        for i in 0..d {
            m.data[i * d + i] = 1.0;
        }
        m
    }

    /// Diagonal matrix from the given entries.
    pub fn from_diagonal(diag: &[f64]) -> Self {
        let d = diag.len();
        let mut m = Self::zeros(d);
        for i in 0..d {
            m.data[i * d + i] = diag[i];
        }
        m
    }

    /// Rank-one matrix v vᵀ.
    pub fn outer(v: &[f64]) -> Self {
        let d = v.len();
        let mut m = Self::zeros(d);
        for i in 0..d {
            for j in 0..d {
                m.data[i * d + j] = v[i] * v[j];
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    /// View as a nalgebra matrix (copy).
    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.dim, self.dim, &self.data)
    }

    /// Frobenius inner product ⟨A, B⟩ = tr(AᵀB).
    pub fn inner(&self, other: &SymMatrix) -> f64 {
        assert_eq!(self.dim, other.dim);
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    /// Frobenius norm |M|.
    pub fn frobenius_norm(&self) -> f64 {
        self.inner(self).sqrt()
    }

    /// Operator norm ‖M‖ = max |λ_i|.
    pub fn operator_norm(&self) -> f64 {
        let s = eig_sym(self).expect("eigendecomposition failed");
        s.eigenvalues
            .iter()
            .map(|l| l.abs())
            .fold(0.0_f64, f64::max)
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    /// A + c·B.
    pub fn add_scaled(&self, other: &SymMatrix, c: f64) -> SymMatrix {
        assert_eq!(self.dim, other.dim);
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + c * b)
            .collect();
        SymMatrix { dim: self.dim, data }
    }

    /// c·A.
    pub fn scale(&self, c: f64) -> SymMatrix {
        SymMatrix {
            dim: self.dim,
            data: self.data.iter().map(|a| c * a).collect(),
        }
    }

    /// Flattened row-major entries (length d²).
    pub fn entries(&self) -> &[f64] {
        &self.data
    }

    /// Relative positive-definiteness cutoff: 1e-10 · max(1, λ_max).
    ///
    /// The theory treats singular M via Ψ = ∞; a relative cutoff makes that
    /// decidable in floats.
    pub fn pd_tol(&self) -> f64 {
        let s = eig_sym(self).expect("eigendecomposition failed");
        let lmax = s.eigenvalues.last().copied().unwrap_or(0.0);
        1e-10 * lmax.max(1.0)
    }
}

/// Eigendecomposition M = V Λ Vᵀ with ascending eigenvalues.
#[derive(Debug, Clone)]
pub struct Spectrum {
    /// Eigenvalues λ_1 ≤ … ≤ λ_d.
    pub eigenvalues: Vec<f64>,
    /// Column i is the eigenvector for eigenvalues[i].
    pub eigenvectors: DMatrix<f64>,
}

impl Spectrum {
    /// λ_min.
    pub fn lambda_min(&self) -> f64 {
        self.eigenvalues[0]
    }

    /// λ_max.
    pub fn lambda_max(&self) -> f64 {
        *self.eigenvalues.last().unwrap()
    }

    /// Reassembles V f(Λ) Vᵀ for a scalar spectral map f.
    pub fn apply(&self, f: impl Fn(f64) -> f64) -> SymMatrix {
        let d = self.eigenvalues.len();
        let mut acc = DMatrix::zeros(d, d);
        for i in 0..d {
            let v: DVector<f64> = self.eigenvectors.column(i).into();
            acc += f(self.eigenvalues[i]) * &v * v.transpose();
        }
        SymMatrix::from_dmatrix(&acc)
    }
}

/// Symmetric eigendecomposition with ascending eigenvalues.
pub fn eig_sym(m: &SymMatrix) -> Result<Spectrum, MatError> {
    let se = m.to_dmatrix().symmetric_eigen();
    let d = m.dim();
    if se.eigenvalues.iter().any(|l| !l.is_finite()) {
        return Err(MatError::NumericFailure);
    }
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| se.eigenvalues[a].partial_cmp(&se.eigenvalues[b]).unwrap());
    let eigenvalues: Vec<f64> = order.iter().map(|&i| se.eigenvalues[i]).collect();
    let mut eigenvectors = DMatrix::zeros(d, d);
    for (col, &i) in order.iter().enumerate() {
        eigenvectors.set_column(col, &se.eigenvectors.column(i));
    }
    Ok(Spectrum { eigenvalues, eigenvectors })
}

/// True iff λ_min(M) > tol.
pub fn is_pd(m: &SymMatrix, tol: f64) -> bool {
    match eig_sym(m) {
        Ok(s) => s.lambda_min() > tol,
        Err(_) => false,
    }
}

/// M^{-p} = V diag(λ_i^{-p}) Vᵀ for positive definite M and p > 0.
pub fn mat_pow_neg(m: &SymMatrix, p: f64) -> Result<SymMatrix, MatError> {
    let s = eig_sym(m)?;
    if s.lambda_min() <= m.pd_tol() {
        return Err(MatError::NotPositiveDefinite { lambda_min: s.lambda_min() });
    }
    Ok(s.apply(|l| l.powf(-p)))
}

/// Moore–Penrose pseudo-inverse of a PSD matrix; eigenvalues ≤ rank_tol·λ_max
/// are treated as exactly zero.
pub fn pinv(m: &SymMatrix, rank_tol: f64) -> Result<SymMatrix, MatError> {
    let s = eig_sym(m)?;
    let cut = rank_tol * s.lambda_max().abs().max(f64::MIN_POSITIVE);
    Ok(s.apply(|l| if l.abs() <= cut { 0.0 } else { 1.0 / l }))
}

/// Löwner order test: A ⪯ B up to tolerance, i.e. λ_min(B − A) ≥ −tol.
pub fn loewner_leq(a: &SymMatrix, b: &SymMatrix, tol: f64) -> Result<bool, MatError> {
    if a.dim() != b.dim() {
        return Err(MatError::DimensionMismatch(a.dim(), b.dim()));
    }
    let diff = b.add_scaled(a, -1.0);
    Ok(eig_sym(&diff)?.lambda_min() >= -tol)
}
