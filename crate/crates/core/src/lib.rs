//! Bounded-scope graph learning.
//!
//! Each target node gets its own small connected subgraph (its *scope*),
//! and a GNN of arbitrary depth runs inside that subgraph only. The crate
//! is organised around that pipeline:
//!
//! - [`graph`]: immutable CSR storage, induced subgraphs, adjacency normalisation.
//! - [`extract`]: approximate-PPR and budgeted k-hop extractors, batching, DropEdge.
//! - [`model`]: dense per-subgraph GCN / GraphSAGE / GIN / GAT / SGC layers,
//!   pooling, ensembles, manual backprop, Adam and the training loop.
//! - [`theory`]: numerical checks of the smoothing limits, Markov convergence,
//!   and Weisfeiler-Lehman refinement on subgraphs.
//! - [`cost`]: analytic multiply-accumulate cost model and hop profiling.
//! - [`fixtures`]: the small named graphs and seeded synthetic generators used
//!   throughout the tests and the `verify` command.

pub mod cost;
pub mod extract;
pub mod fixtures;
pub mod graph;
pub mod model;
pub mod real;
pub mod theory;

pub use graph::{GraphBundle, GraphError, NormAdj, NormKind, SplitTag, Subgraph};
pub use real::Real;
