//! Graph storage and the per-target subgraph representation.

mod bundle;
pub mod io;
mod norm;
mod subgraph;

pub use bundle::{GraphBundle, SplitTag};
pub use io::{load_graph, load_tsv, load_tsv_sized, save_bundle};
pub use norm::{normalize, NormAdj, NormKind};
pub use subgraph::{induced_subgraph, induced_subgraph_report, subgraph_depth, Subgraph, TrimReport};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("i/o error on {path}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed metadata in {path}: {message}")]
    Meta { path: String, message: String },
    #[error("inconsistent sizes: {0}")]
    Size(String),
    #[error("node id {id} out of range for {num_nodes} nodes")]
    NodeOutOfRange { id: u64, num_nodes: usize },
    #[error("adjacency is not symmetric: ({0}, {1}) has no reverse entry")]
    Asymmetric(u32, u32),
    #[error("row {0} is not strictly increasing")]
    UnsortedRow(usize),
    #[error("non-finite feature value at node {node}, column {col}")]
    NonFinite { node: usize, col: usize },
    #[error("target {0} is not in the node set")]
    TargetNotInSet(u32),
    #[error("empty node set")]
    EmptyNodeSet,
    #[error("malformed row {line} in {path}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
    #[error("label {label} at node {node} exceeds num_classes {num_classes}")]
    BadLabel {
        node: usize,
        label: u32,
        num_classes: usize,
    },
}

/// Read-only neighbour access shared by full graphs and subgraphs.
pub trait Adjacency {
    fn node_count(&self) -> usize;
    fn neighbors(&self, u: usize) -> &[u32];

    fn degree(&self, u: usize) -> usize {
        self.neighbors(u).len()
    }

    /// Unweighted BFS distances from `source`; `u32::MAX` marks unreachable nodes.
    fn bfs_distances(&self, source: usize) -> Vec<u32> {
        let mut dist = vec![u32::MAX; self.node_count()];
        let mut queue = std::collections::VecDeque::new();
        dist[source] = 0;
        queue.push_back(source);
        while let Some(u) = queue.pop_front() {
            let next = dist[u] + 1;
            for &w in self.neighbors(u) {
                let w = w as usize;
                if dist[w] == u32::MAX {
                    dist[w] = next;
                    queue.push_back(w);
                }
            }
        }
        dist
    }
}
