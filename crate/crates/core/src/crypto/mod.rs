//! Commitments, the keyed PRF that drives sampling, and quantized lookup tables.

mod commitment;
mod prf;
mod sampling;
mod tables;

pub use commitment::{commit, verify_opening, Blinding, Commitment, COMMIT_TAG};
pub use prf::{prf_hash, prf_stream, PrfKey, PRF_ALGORITHM};
pub use sampling::{
    check_decomposition, decompose, gaussian_samples, uniform_samples, DecompositionFault, LimbLayout,
};
pub use tables::{lookup_eval, LookupTable, TableConfig, TableDigests, TableKind, Tables};

use thiserror::Error;

use crate::numeric::NumericError;

#[derive(Debug, Error)]
pub enum CryptoError {
    #[error("need {needed} digests for {count} samples, got {got}")]
    NotEnoughHashes { needed: usize, got: usize, count: usize },
    #[error("key {key} outside the {table} table domain")]
    OutOfDomain { table: TableKind, key: i64 },
    #[error("key scale {found} does not match {table} table scale {expected}")]
    KeyScale {
        table: TableKind,
        expected: i64,
        found: i64,
    },
    #[error("bad table configuration: {0}")]
    TableConfig(String),
    #[error("bad sampling layout: {0}")]
    Layout(String),
    #[error(transparent)]
    Numeric(#[from] NumericError),
}
