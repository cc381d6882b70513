//! Symmetric positive-semidefinite matrix primitives.
//!
//! Every Gaussian formula in this crate goes through [`SymMatrix`]: matrices
//! are symmetrized as `(M + Mᵀ)/2` on construction, and functions of a PSD
//! matrix (square root, pseudoinverse) are taken through its
//! eigendecomposition after clipping round-off negatives to zero.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::{Error, Result};

/// Relative eigenvalue floor below which a matrix is rejected as indefinite:
/// `psd_tol = 1e-10 · max(1, trace/n)`.
pub const PSD_REL_TOL: f64 = 1e-10;

/// Pseudoinverse rank cutoff relative to the largest eigenvalue.
pub const RANK_REL_TOL: f64 = 1e-12;

/// A real symmetric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix(DMatrix<f64>);

/// Eigendecomposition `m = V · diag(w) · Vᵀ` with ascending eigenvalues.
#[derive(Debug, Clone)]
pub struct Eigh {
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

impl Eigh {
    /// Rebuilds `V · diag(f(w)) · Vᵀ`.
    pub fn map_spectrum(&self, f: impl Fn(f64) -> f64) -> SymMatrix {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for j in 0..n {
            let s = f(self.values[j]);
            scaled.column_mut(j).scale_mut(s);
        }
        SymMatrix::symmetrized(&scaled * self.vectors.transpose())
    }
}

impl SymMatrix {
    /// Builds a symmetric matrix from a square matrix of finite entries.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::InvalidMatrix(format!(
                "expected a square matrix, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.nrows() == 0 {
            return Err(Error::InvalidMatrix("empty matrix".into()));
        }
        if m.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidMatrix("non-finite entry".into()));
        }
        Ok(Self::symmetrized(m))
    }

    pub fn from_row_slice(n: usize, data: &[f64]) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::Dim {
                expected: n * n,
                found: data.len(),
            });
        }
        Self::new(DMatrix::from_row_slice(n, n, data))
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&DVector::from_column_slice(diag)))
    }

    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n, n))
    }

    pub fn zeros(n: usize) -> Self {
        Self(DMatrix::zeros(n, n))
    }

    // Callers guarantee finiteness.
    pub(crate) fn symmetrized(m: DMatrix<f64>) -> Self {
        let t = m.transpose();
        Self((m + t) * 0.5)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.norm()
    }

    /// Congruence `a · self · aᵀ`, re-symmetrized.
    pub fn congruence(&self, a: &SymMatrix) -> SymMatrix {
        Self::symmetrized(&a.0 * &self.0 * &a.0)
    }

    /// `psd_tol = 1e-10 · max(1, trace/n)`.
    pub fn psd_tolerance(&self) -> f64 {
        PSD_REL_TOL * (self.trace() / self.dim() as f64).max(1.0)
    }

    /// Symmetric eigendecomposition with eigenvalues in ascending order.
    pub fn eigh(&self) -> Eigh {
        let n = self.dim();
        let eig = SymmetricEigen::new(self.0.clone());
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = DVector::from_iterator(n, order.iter().map(|&k| eig.eigenvalues[k]));
        let mut vectors = DMatrix::zeros(n, n);
        for (dst, &src) in order.iter().enumerate() {
            vectors.set_column(dst, &eig.eigenvectors.column(src));
        }
        Eigh { values, vectors }
    }

    /// Eigendecomposition with eigenvalues in `[-psd_tol, 0)` clipped to zero.
    pub fn psd_eigh(&self) -> Result<Eigh> {
        let mut eig = self.eigh();
        let tol = self.psd_tolerance();
        let min = eig.values.min();
        if min < -tol {
            return Err(Error::NotPsd {
                eigenvalue: min,
                tolerance: tol,
            });
        }
        eig.values.apply(|v| *v = v.max(0.0));
        Ok(eig)
    }

    /// Returns `self` unchanged when it has no negative eigenvalues, the
    /// clipped reconstruction when its negatives are within tolerance, and
    /// [`Error::NotPsd`] otherwise.
    pub fn clip_psd(&self) -> Result<SymMatrix> {
        let eig = self.eigh();
        let tol = self.psd_tolerance();
        let min = eig.values.min();
        if min >= 0.0 {
            return Ok(self.clone());
        }
        if min < -tol {
            return Err(Error::NotPsd {
                eigenvalue: min,
                tolerance: tol,
            });
        }
        Ok(eig.map_spectrum(|v| v.max(0.0)))
    }

    /// Principal square root of a PSD matrix.
    pub fn sqrt_psd(&self) -> Result<SymMatrix> {
        Ok(self.psd_eigh()?.map_spectrum(f64::sqrt))
    }

    /// Moore–Penrose pseudoinverse of a PSD matrix. Eigenvalues at or below
    /// `1e-12 · λ_max` are treated as zero.
    pub fn pinv_psd(&self) -> Result<SymMatrix> {
        let eig = self.psd_eigh()?;
        let cutoff = rank_cutoff(&eig.values);
        Ok(eig.map_spectrum(|v| if v > cutoff { 1.0 / v } else { 0.0 }))
    }

    /// `(self^{1/2})†`, the pseudoinverse square root.
    pub fn pinv_sqrt_psd(&self) -> Result<SymMatrix> {
        let eig = self.psd_eigh()?;
        let cutoff = rank_cutoff(&eig.values);
        Ok(eig.map_spectrum(|v| if v > cutoff { 1.0 / v.sqrt() } else { 0.0 }))
    }

    /// Numerical rank of a PSD matrix under the pseudoinverse cutoff.
    pub fn psd_rank(&self) -> Result<usize> {
        let eig = self.psd_eigh()?;
        let cutoff = rank_cutoff(&eig.values);
        Ok(eig.values.iter().filter(|&&v| v > cutoff).count())
    }
}

fn rank_cutoff(values: &DVector<f64>) -> f64 {
    RANK_REL_TOL * values.max().max(0.0)
}

impl std::ops::Index<(usize, usize)> for SymMatrix {
    type Output = f64;

    fn index(&self, idx: (usize, usize)) -> &f64 {
        &self.0[idx]
    }
}
