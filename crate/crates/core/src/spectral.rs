//! Spectral data of the reference Hamiltonian.

use crate::error::{Error, Result};
use crate::linalg::{c64, hermitian_part, CMatrix, HermitianOperator};

/// Clustered eigenvalues (strictly increasing) with their orthogonal
/// spectral projections.
#[derive(Clone, Debug)]
pub struct SpectralData {
    eigenvalues: Vec<f64>,
    multiplicities: Vec<usize>,
    bases: Vec<CMatrix>,
    projections: Vec<HermitianOperator>,
    cluster_tol: f64,
    dim: usize,
    source: CMatrix,
}

impl SpectralData {
    /// `bases[k]` holds an orthonormal basis of the k-th eigenspace.
    pub(crate) fn from_bases(eigenvalues: Vec<f64>, bases: Vec<CMatrix>, cluster_tol: f64, source: CMatrix) -> Self {
        let dim = bases.first().map_or(0, |b| b.nrows());
        let multiplicities = bases.iter().map(|b| b.ncols()).collect();
        let projections = bases
            .iter()
            .map(|b| HermitianOperator::from_hermitian_part(&hermitian_part(&(b * b.adjoint()))).expect("finite basis"))
            .collect();
        Self {
            eigenvalues,
            multiplicities,
            bases,
            projections,
            cluster_tol,
            dim,
            source,
        }
    }

    /// Hamiltonian diagonal in the standard basis: eigenvalue `k` occupies the
    /// next `multiplicities[k]` basis vectors, in the order given.
    pub fn from_levels(eigenvalues: &[f64], multiplicities: &[usize], cluster_tol: f64) -> Result<Self> {
        if eigenvalues.len() != multiplicities.len() || eigenvalues.is_empty() {
            return Err(Error::InvalidParameter(
                "eigenvalues and multiplicities must be non-empty and of equal length".into(),
            ));
        }
        if multiplicities.contains(&0) {
            return Err(Error::InvalidParameter("multiplicities must be positive".into()));
        }
        if eigenvalues.iter().any(|e| !e.is_finite()) {
            return Err(Error::NonFinite);
        }
        let dim: usize = multiplicities.iter().sum();
        let mut diag = Vec::with_capacity(dim);
        for (&e, &m) in eigenvalues.iter().zip(multiplicities) {
            diag.extend(std::iter::repeat_n(e, m));
        }
        let h = CMatrix::from_fn(dim, dim, |i, j| if i == j { c64(diag[i], 0.0) } else { c64(0.0, 0.0) });
        crate::linalg::hermitian_eig(&HermitianOperator::new(h)?, cluster_tol)
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn multiplicities(&self) -> &[usize] {
        &self.multiplicities
    }

    pub fn projections(&self) -> &[HermitianOperator] {
        &self.projections
    }

    pub fn projection(&self, k: usize) -> &HermitianOperator {
        &self.projections[k]
    }

    /// Orthonormal basis of the k-th eigenspace.
    pub fn eigenbasis(&self, k: usize) -> &CMatrix {
        &self.bases[k]
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cluster_tol(&self) -> f64 {
        self.cluster_tol
    }

    /// The Hermitian matrix this decomposition was computed from.
    pub fn source_matrix(&self) -> &CMatrix {
        &self.source
    }

    /// `Σ_k λ_k P_k`
    pub fn hamiltonian(&self) -> HermitianOperator {
        let mut h = CMatrix::zeros(self.dim, self.dim);
        for (e, p) in self.eigenvalues.iter().zip(&self.projections) {
            h += p.matrix() * c64(*e, 0.0);
        }
        HermitianOperator::from_hermitian_part(&h).expect("finite")
    }

    /// Block-diagonal part `Σ_k P_k A P_k`.
    pub fn pinch(&self, a: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(self.dim, self.dim);
        for p in &self.projections {
            out += p.matrix() * a * p.matrix();
        }
        out
    }
}
