//! LIME in fixed point: neighborhood sampling around an input (optionally
//! shifted to the decision border), kernel weighting, a certified weighted
//! LASSO fit and top-K selection.

pub mod border;
mod config;
mod explain;
pub mod lasso;
pub mod neighborhood;
mod topk;

pub use border::{find_opposite_point, grid_search, search_rays, BorderHit};
pub use config::{BorderConfig, KernelType, LimeConfig, SamplingType, Variant, DEFAULT_DUAL_SCALE};
pub use explain::{certify_options, explain, ExplainOutput, Timings};
pub use lasso::{
    certify, dual_feasible, duality_gap, solve_weighted_lasso, CertifyOptions, Design, GapReport, LassoError,
    LassoSolution,
};
pub use neighborhood::{build_neighborhood, exponential_kernel, weighted_design, Neighborhood};
pub use topk::{ranking, top_k, Explanation, ExplanationEntry};

use thiserror::Error;

use crate::crypto::CryptoError;
use crate::model::ModelError;
use crate::numeric::NumericError;

#[derive(Debug, Error)]
pub enum LimeError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("need {needed} samples, got {got}")]
    SampleShortage { needed: usize, got: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Crypto(#[from] CryptoError),
    #[error(transparent)]
    Lasso(#[from] LassoError),
    #[error(transparent)]
    Numeric(#[from] NumericError),
}
