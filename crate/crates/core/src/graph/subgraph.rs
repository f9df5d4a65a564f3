use ndarray::Array2;

use super::{Adjacency, GraphBundle, GraphError};
use crate::real::Real;

/// Induced subgraph around one target node.
///
/// Local ids are positions in `globals`, which is sorted ascending. The local
/// CSR rows are sorted as well, so two subgraphs over the same node set are
/// structurally identical.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Subgraph {
    target_local: u32,
    globals: Vec<u32>,
    indptr: Vec<u32>,
    indices: Vec<u32>,
}

/// Nodes dropped from a requested node set because they were not connected to
/// the target through the set.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TrimReport {
    pub dropped: Vec<u32>,
}

impl Subgraph {
    /// Assembles a subgraph from raw parts, checking every structural invariant
    /// except agreement with a parent graph.
    pub fn from_parts(
        target_local: u32,
        globals: Vec<u32>,
        indptr: Vec<u32>,
        indices: Vec<u32>,
    ) -> Result<Self, GraphError> {
        let n = globals.len();
        if n == 0 {
            return Err(GraphError::EmptyNodeSet);
        }
        if target_local as usize >= n {
            return Err(GraphError::NodeOutOfRange {
                id: target_local as u64,
                num_nodes: n,
            });
        }
        if globals.windows(2).any(|w| w[0] >= w[1]) {
            return Err(GraphError::Size("subgraph globals must be strictly increasing".into()));
        }
        if indptr.len() != n + 1
            || indptr[0] != 0
            || indptr[n] as usize != indices.len()
            || indptr.windows(2).any(|w| w[0] > w[1])
        {
            return Err(GraphError::Size("subgraph indptr inconsistent with indices".into()));
        }
        if let Some(&bad) = indices.iter().find(|&&w| w as usize >= n) {
            return Err(GraphError::NodeOutOfRange {
                id: bad as u64,
                num_nodes: n,
            });
        }
        let s = Self {
            target_local,
            globals,
            indptr,
            indices,
        };
        for u in 0..n {
            let row = s.neighbors(u);
            if row.windows(2).any(|w| w[0] >= w[1]) {
                return Err(GraphError::UnsortedRow(u));
            }
            for &w in row {
                if w as usize == u {
                    return Err(GraphError::Size(format!("self-loop at local node {u}")));
                }
                if s.neighbors(w as usize).binary_search(&(u as u32)).is_err() {
                    return Err(GraphError::Asymmetric(u as u32, w));
                }
            }
        }
        Ok(s)
    }

    /// The whole graph as one subgraph (the "full scope").
    pub fn full_graph(g: &GraphBundle, target: u32) -> Result<Self, GraphError> {
        let all: Vec<u32> = (0..g.num_nodes() as u32).collect();
        induced_subgraph(g, &all, target)
    }

    pub fn target_local(&self) -> usize {
        self.target_local as usize
    }

    pub fn target_global(&self) -> u32 {
        self.globals[self.target_local as usize]
    }

    pub fn globals(&self) -> &[u32] {
        &self.globals
    }

    pub fn indptr(&self) -> &[u32] {
        &self.indptr
    }

    pub fn indices(&self) -> &[u32] {
        &self.indices
    }

    pub fn num_nodes(&self) -> usize {
        self.globals.len()
    }

    /// Undirected edge count.
    pub fn num_edges(&self) -> usize {
        self.indices.len() / 2
    }

    /// Directed adjacency entries, `2 * num_edges()`.
    pub fn num_entries(&self) -> usize {
        self.indices.len()
    }

    /// Local id of a global node, if it belongs to the subgraph.
    pub fn local_of(&self, global: u32) -> Option<usize> {
        self.globals.binary_search(&global).ok()
    }

    /// `δ(u)`: degree inside the subgraph plus one for the self-loop.
    pub fn degree_plus_one(&self, u: usize) -> usize {
        self.degree(u) + 1
    }

    /// Edges as local pairs with `u < w`, in CSR order.
    pub fn undirected_edges(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        (0..self.num_nodes()).flat_map(move |u| {
            self.neighbors(u)
                .iter()
                .filter(move |&&w| (u as u32) < w)
                .map(move |&w| (u as u32, w))
        })
    }

    /// Edges as global pairs with `u < w`, sorted.
    pub fn global_edge_set(&self) -> Vec<(u32, u32)> {
        let mut e: Vec<(u32, u32)> = self
            .undirected_edges()
            .map(|(a, b)| {
                let (x, y) = (self.globals[a as usize], self.globals[b as usize]);
                (x.min(y), x.max(y))
            })
            .collect();
        e.sort_unstable();
        e
    }

    /// Feature rows of the subgraph's nodes, in local order.
    pub fn features<F: Real>(&self, g: &GraphBundle) -> Array2<F> {
        let d = g.feature_dim();
        let mut x = Array2::zeros((self.num_nodes(), d));
        for (local, &global) in self.globals.iter().enumerate() {
            for (dst, &src) in x.row_mut(local).iter_mut().zip(g.feature_row(global as usize)) {
                *dst = F::from_f64_lossy(src as f64);
            }
        }
        x
    }

    /// Rows of an arbitrary global matrix gathered in local order.
    pub fn gather_rows<F: Real>(&self, x: &Array2<F>) -> Array2<F> {
        let mut out = Array2::zeros((self.num_nodes(), x.ncols()));
        for (local, &global) in self.globals.iter().enumerate() {
            out.row_mut(local).assign(&x.row(global as usize));
        }
        out
    }

    /// Builds a subgraph from local edges, keeping only the target's component.
    pub(crate) fn from_local_edges(
        target_local: usize,
        globals: &[u32],
        edges: impl IntoIterator<Item = (u32, u32)>,
    ) -> Self {
        let n = globals.len();
        let mut rows: Vec<Vec<u32>> = vec![Vec::new(); n];
        for (u, w) in edges {
            rows[u as usize].push(w);
            rows[w as usize].push(u);
        }
        for r in &mut rows {
            r.sort_unstable();
            r.dedup();
        }
        let raw = Self::from_rows(target_local, globals.to_vec(), &rows);
        raw.trim_to_target_component().0
    }

    fn from_rows(target_local: usize, globals: Vec<u32>, rows: &[Vec<u32>]) -> Self {
        let mut indptr = Vec::with_capacity(rows.len() + 1);
        let mut indices = Vec::new();
        indptr.push(0);
        for r in rows {
            indices.extend_from_slice(r);
            indptr.push(indices.len() as u32);
        }
        Self {
            target_local: target_local as u32,
            globals,
            indptr,
            indices,
        }
    }

    /// Restricts to the connected component of the target.
    pub(crate) fn trim_to_target_component(self) -> (Self, TrimReport) {
        let dist = self.bfs_distances(self.target_local());
        if dist.iter().all(|&d| d != u32::MAX) {
            return (self, TrimReport::default());
        }
        let mut remap = vec![u32::MAX; self.num_nodes()];
        let mut globals = Vec::new();
        let mut dropped = Vec::new();
        for (u, &d) in dist.iter().enumerate() {
            if d == u32::MAX {
                dropped.push(self.globals[u]);
            } else {
                remap[u] = globals.len() as u32;
                globals.push(self.globals[u]);
            }
        }
        let rows: Vec<Vec<u32>> = (0..self.num_nodes())
            .filter(|&u| remap[u] != u32::MAX)
            .map(|u| self.neighbors(u).iter().map(|&w| remap[w as usize]).collect())
            .collect();
        let target = remap[self.target_local()] as usize;
        (Self::from_rows(target, globals, &rows), TrimReport { dropped })
    }
}

impl Adjacency for Subgraph {
    fn node_count(&self) -> usize {
        self.globals.len()
    }

    fn neighbors(&self, u: usize) -> &[u32] {
        &self.indices[self.indptr[u] as usize..self.indptr[u + 1] as usize]
    }
}

/// Induced subgraph of `g` on `node_set`, trimmed to the target's component.
pub fn induced_subgraph(g: &GraphBundle, node_set: &[u32], target: u32) -> Result<Subgraph, GraphError> {
    let (s, report) = induced_subgraph_report(g, node_set, target)?;
    if !report.dropped.is_empty() {
        log::debug!(
            "target {target}: dropped {} node(s) disconnected from the target",
            report.dropped.len()
        );
    }
    Ok(s)
}

/// Like [`induced_subgraph`], also returning the nodes removed by the trim.
pub fn induced_subgraph_report(
    g: &GraphBundle,
    node_set: &[u32],
    target: u32,
) -> Result<(Subgraph, TrimReport), GraphError> {
    if node_set.is_empty() {
        return Err(GraphError::EmptyNodeSet);
    }
    let mut globals = node_set.to_vec();
    globals.sort_unstable();
    globals.dedup();
    if let Some(&bad) = globals.iter().find(|&&u| u as usize >= g.num_nodes()) {
        return Err(GraphError::NodeOutOfRange {
            id: bad as u64,
            num_nodes: g.num_nodes(),
        });
    }
    let target_local = globals
        .binary_search(&target)
        .map_err(|_| GraphError::TargetNotInSet(target))?;

    let mut indptr = Vec::with_capacity(globals.len() + 1);
    let mut indices = Vec::new();
    indptr.push(0u32);
    for &u in &globals {
        let row = g.neighbors(u as usize);
        // Probe the shorter list against the longer one.
        if row.len() < globals.len() {
            for &w in row {
                if let Ok(local) = globals.binary_search(&w) {
                    indices.push(local as u32);
                }
            }
        } else {
            for (local, gw) in globals.iter().enumerate() {
                if row.binary_search(gw).is_ok() {
                    indices.push(local as u32);
                }
            }
        }
        indptr.push(indices.len() as u32);
    }
    let s = Subgraph {
        target_local: target_local as u32,
        globals,
        indptr,
        indices,
    };
    Ok(s.trim_to_target_component())
}

/// Largest shortest-path distance from any subgraph node to the target.
pub fn subgraph_depth(s: &Subgraph) -> usize {
    s.bfs_distances(s.target_local())
        .into_iter()
        .filter(|&d| d != u32::MAX)
        .max()
        .unwrap_or(0) as usize
}
