//! Evaluation harness: synthetic and CSV datasets, prediction-similarity
//! fidelity of the surrogate, and per-phase timing.

mod datasets;
mod fidelity;
mod timing;

pub use datasets::{load_csv, standardize, synthetic, Dataset, DatasetShape};
pub use fidelity::{
    eval_fidelity, eval_points, prediction_similarity, results_csv, summary_table, surrogate_label,
    EvalSampling, FidelityOptions, FidelityResult,
};
pub use timing::{timing_csv, timing_report, PhaseTimes, TIMING_COLUMNS};

use thiserror::Error;

use crate::lime::LimeError;
use crate::model::ModelError;
use crate::numeric::NumericError;
use crate::protocol::ProtocolError;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Lime(#[from] LimeError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Numeric(#[from] NumericError),
}
