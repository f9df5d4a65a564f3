//! Dense GNN compute on extracted subgraphs: layers, pooling, heads, the
//! branch ensemble, manual gradients, Adam and the train/eval loops.

pub mod checkpoint;
mod config;
mod forward;
pub mod gradcheck;
mod layers;
mod optim;
mod params;
mod readout;
mod train;

pub use config::{Activation, Arch, ModelConfig, Pooling};
pub use forward::{cross_entropy, loss_and_grad, model_forward, ActivationTape, BranchInput, BranchTape};
pub use layers::{gat_layer, gcn_layer, gin_layer, propagate, sage_layer, sgc_forward, softmax, Act};
pub use optim::{adam_step, AdamConfig, AdamState};
pub use params::{BranchParams, EnsembleParams, Layer, LayerParams, Linear, Mlp2, ParamSet};
pub use readout::{ensemble_combine, head, readout};
pub use train::{
    evaluate, evaluate_prepared, prepare_split, train, write_metrics_csv, EpochMetrics, PreparedSplit, TrainConfig,
    TrainReport,
};

use thiserror::Error;

use crate::extract::ExtractError;
use crate::graph::SplitTag;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid model configuration: {0}")]
    Config(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("label {label} out of range for {num_classes} classes")]
    Label { label: u32, num_classes: usize },
    #[error("loss is not finite")]
    NonFinite,
    #[error("graph has no labels")]
    MissingLabels,
    #[error("graph has no train/val/test split")]
    MissingSplit,
    #[error("split {0:?} has no nodes")]
    EmptySplit(SplitTag),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Extract(#[from] ExtractError),
    #[error("i/o error")]
    Io(#[from] std::io::Error),
    #[error("csv error")]
    Csv(#[from] csv::Error),
}
