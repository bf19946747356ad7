//! JSON model specifications.
//!
//! Complex numbers are `[re, im]` pairs and matrices are row-major nested
//! arrays of them.
//!
//! ```json
//! {
//!   "dim": 2,
//!   "hamiltonian": {"eigenvalues": [0.0, 1.0], "multiplicities": [1, 1]},
//!   "interaction": [[[0, 0], [1, 0]], [[0, 0], [0, 0]]],
//!   "channels": {"explicit": [{"omega": 1.0, "gamma_minus": 1.0, "gamma_plus": 0.5}]}
//! }
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generator::{ChannelSpec, RateSchedule, WcltGenerator};
use crate::linalg::{from_pair_rows, hermitian_eig, to_pair_rows, CMatrix, HermitianOperator, DEFAULT_CLUSTER_TOL};
use crate::spectral::SpectralData;

pub type MatrixJson = Vec<Vec<[f64; 2]>>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum HamiltonianSpec {
    /// Diagonal in the standard basis, level `k` repeated `multiplicities[k]` times.
    Levels {
        eigenvalues: Vec<f64>,
        multiplicities: Vec<usize>,
    },
    Matrix { matrix: MatrixJson },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub dim: usize,
    pub hamiltonian: HamiltonianSpec,
    pub interaction: MatrixJson,
    pub channels: RateSchedule,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub commutant_term: Option<MatrixJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cluster_tol: Option<f64>,
}

fn check_dim(m: &CMatrix, dim: usize, what: &str) -> Result<()> {
    if m.shape() != (dim, dim) {
        return Err(Error::Spec(format!(
            "{what} is {}x{}, expected {dim}x{dim}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

impl ModelSpec {
    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn spectral(&self) -> Result<SpectralData> {
        let tol = self.cluster_tol.unwrap_or(DEFAULT_CLUSTER_TOL);
        let sd = match &self.hamiltonian {
            HamiltonianSpec::Levels {
                eigenvalues,
                multiplicities,
            } => SpectralData::from_levels(eigenvalues, multiplicities, tol)?,
            HamiltonianSpec::Matrix { matrix } => {
                let h = from_pair_rows(matrix)?;
                check_dim(&h, self.dim, "hamiltonian")?;
                hermitian_eig(&HermitianOperator::new(h)?, tol)?
            }
        };
        if sd.dim() != self.dim {
            return Err(Error::Spec(format!("hamiltonian acts on C^{}, dim is {}", sd.dim(), self.dim)));
        }
        Ok(sd)
    }

    pub fn build(&self) -> Result<WcltGenerator> {
        let sd = self.spectral()?;
        let d = from_pair_rows(&self.interaction)?;
        check_dim(&d, self.dim, "interaction")?;
        let gen = WcltGenerator::with_schedule(sd, d, &self.channels)?;
        match &self.commutant_term {
            Some(m) => {
                let x = from_pair_rows(m)?;
                check_dim(&x, self.dim, "commutant_term")?;
                gen.with_commutant_term(HermitianOperator::new(x)?, 1e-10)
            }
            None => Ok(gen),
        }
    }

    /// Explicit-channel specification of a built generator. Rebuilding it
    /// reproduces the generator's operators exactly.
    pub fn from_generator(gen: &WcltGenerator) -> Self {
        let channels = gen
            .channels()
            .iter()
            .map(|ch| ChannelSpec {
                omega: Some(ch.omega()),
                rates: *ch.rates(),
            })
            .collect();
        Self {
            dim: gen.dim(),
            hamiltonian: HamiltonianSpec::Matrix {
                matrix: to_pair_rows(gen.spectral().source_matrix()),
            },
            interaction: to_pair_rows(gen.interaction()),
            channels: RateSchedule::Explicit(channels),
            commutant_term: gen.commutant_term().map(|x| to_pair_rows(x.matrix())),
            cluster_tol: Some(gen.spectral().cluster_tol()),
        }
    }
}
