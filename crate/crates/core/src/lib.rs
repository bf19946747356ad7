//! Weak-coupling-limit-type quantum Markov semigroups on finite-dimensional
//! Hilbert spaces.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod evolution;
pub mod generator;
pub mod linalg;
pub mod model;
pub mod models;
pub mod spectral;
pub mod stationary;
pub mod verify;

pub use error::{Error, Result};
pub use generator::{
    bohr_frequencies, effective_hamiltonian, gamma_from_temperature, kraus_operator, BohrFrequency, ChannelRates,
    ChannelSpec, FrequencyChannel, FrequencyValue, FrequencyValues, RateSchedule, WcltGenerator,
};
pub use linalg::{CMatrix, CVector, DensityMatrix, HermitianOperator, Subspace, C64};
pub use spectral::SpectralData;
