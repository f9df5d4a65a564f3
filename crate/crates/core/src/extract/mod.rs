//! Subgraph extraction: choose a bounded, connected scope for each target.

mod batch;
pub mod cache;
mod config;
mod dropedge;
mod khop;
mod ppr;

pub use batch::{extract_batch, extract_ensemble_batch, extract_one, target_rng};
pub use config::{ExtractConfig, ExtractMethod};
pub use dropedge::dropedge;
pub use khop::extract_khop;
pub use ppr::{approximate_ppr, extract_ppr, select_neighbors, PprState};

use thiserror::Error;

use crate::graph::GraphError;

#[derive(Debug, Error)]
pub enum ExtractError {
    #[error("invalid extractor configuration: {0}")]
    InvalidConfig(String),
    #[error("node {node} out of range for {num_nodes} nodes")]
    NodeOutOfRange { node: u32, num_nodes: usize },
    #[error("extraction failed for target {target}")]
    Target {
        target: u32,
        #[source]
        source: Box<ExtractError>,
    },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("subgraph cache: {0}")]
    Cache(String),
    #[error("i/o error")]
    Io(#[from] std::io::Error),
}
