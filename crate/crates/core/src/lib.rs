//! Approximate error correction for the generalized amplitude damping channel.
//!
//! The crate builds the channel and its n-qubit tensor errors, a registry of
//! stabilizer and nonadditive codes, approximate Knill–Laflamme recoveries,
//! and exact or weight-truncated entanglement fidelities.

pub mod channel;
pub mod codes;
pub mod fidelity;
pub mod linalg;
pub mod recovery;
pub mod series;

use thiserror::Error;

pub use channel::{ErrorIndex, GadParams};
pub use codes::{build_code, CodeName, QuantumCode};
pub use linalg::{DenseMatrix, SparseState, C64};

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Linalg(#[from] linalg::LinalgError),
    #[error(transparent)]
    Channel(#[from] channel::ChannelError),
    #[error(transparent)]
    Code(#[from] codes::CodeError),
    #[error(transparent)]
    Recovery(#[from] recovery::RecoveryError),
    #[error(transparent)]
    Fidelity(#[from] fidelity::FidelityError),
    #[error(transparent)]
    Series(#[from] series::SeriesError),
}
