//! Numerical checks of the limit behaviour, expressivity and oversmoothing
//! properties of subgraph-scoped GNNs. All math is in `f64`.

mod distinct;
mod limit;
mod sgc;
pub mod suite;
mod wl;

pub use distinct::{limit_vectors, scope_distinctness, DistinctnessReport, PhiMode};
pub use limit::{
    fit_log_linear, lambda2_abs, limit_aggregation, markov_curve, markov_error, power_limit, target_function,
    LineFit, StationaryProfile,
};
pub use sgc::{propagated_targets, sgc_sweep, train_logistic, LogisticConfig, SgcRow};
pub use wl::{shadow_wl, wl_refine, WlColoring};

use thiserror::Error;

use crate::cost::CostError;
use crate::extract::ExtractError;
use crate::model::ModelError;

#[derive(Debug, Error)]
pub enum TheoryError {
    #[error("graph has {0} nodes; all-pairs comparison is limited to 5000")]
    TooLarge(usize),
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Extract(#[from] ExtractError),
    #[error(transparent)]
    Cost(#[from] CostError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("i/o error")]
    Io(#[from] std::io::Error),
    #[error("csv error")]
    Csv(#[from] csv::Error),
}
