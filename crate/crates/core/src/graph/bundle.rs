use serde::{Deserialize, Serialize};

use super::{Adjacency, GraphError};

/// Which evaluation split a node belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitTag {
    Train = 0,
    Val = 1,
    Test = 2,
    None = 3,
}

impl SplitTag {
    pub fn from_byte(b: u8) -> Option<Self> {
        match b {
            0 => Some(SplitTag::Train),
            1 => Some(SplitTag::Val),
            2 => Some(SplitTag::Test),
            3 => Some(SplitTag::None),
            _ => None,
        }
    }

    pub fn as_byte(self) -> u8 {
        self as u8
    }
}

/// Immutable undirected graph in CSR form with node features, labels and split.
///
/// Rows are sorted and duplicate-free, the adjacency is symmetric and never
/// stores self-loops; self-loops are introduced by normalisation only.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphBundle {
    num_nodes: usize,
    indptr: Vec<u64>,
    indices: Vec<u32>,
    feature_dim: usize,
    features: Vec<f32>,
    labels: Option<Vec<u32>>,
    num_classes: usize,
    split: Option<Vec<SplitTag>>,
}

impl GraphBundle {
    /// Builds a graph from an arbitrary edge list. Edges are symmetrised,
    /// deduplicated and stripped of self-loops. Features start empty.
    pub fn from_edges<I>(num_nodes: usize, edges: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = (u32, u32)>,
    {
        let mut rows: Vec<Vec<u32>> = vec![Vec::new(); num_nodes];
        for (u, v) in edges {
            for id in [u, v] {
                if id as usize >= num_nodes {
                    return Err(GraphError::NodeOutOfRange {
                        id: id as u64,
                        num_nodes,
                    });
                }
            }
            if u == v {
                continue;
            }
            rows[u as usize].push(v);
            rows[v as usize].push(u);
        }
        let mut indptr = Vec::with_capacity(num_nodes + 1);
        let mut indices = Vec::new();
        indptr.push(0u64);
        for row in &mut rows {
            row.sort_unstable();
            row.dedup();
            indices.extend_from_slice(row);
            indptr.push(indices.len() as u64);
        }
        Ok(Self {
            num_nodes,
            indptr,
            indices,
            feature_dim: 0,
            features: Vec::new(),
            labels: None,
            num_classes: 0,
            split: None,
        })
    }

    /// Builds a graph from CSR arrays.
    ///
    /// With `symmetrize` the arrays are treated as a directed edge list and the
    /// union of both directions is stored. Without it the input must already
    /// satisfy every invariant (self-loops are still dropped).
    pub fn from_csr(
        num_nodes: usize,
        indptr: Vec<u64>,
        indices: Vec<u32>,
        symmetrize: bool,
    ) -> Result<Self, GraphError> {
        if indptr.len() != num_nodes + 1 {
            return Err(GraphError::Size(format!(
                "indptr has {} entries, expected {}",
                indptr.len(),
                num_nodes + 1
            )));
        }
        if indptr[0] != 0 || indptr[num_nodes] != indices.len() as u64 {
            return Err(GraphError::Size(format!(
                "indptr ends at {} but there are {} indices",
                indptr[num_nodes],
                indices.len()
            )));
        }
        if indptr.windows(2).any(|w| w[0] > w[1]) {
            return Err(GraphError::Size("indptr is decreasing".into()));
        }
        if let Some(&bad) = indices.iter().find(|&&w| w as usize >= num_nodes) {
            return Err(GraphError::NodeOutOfRange {
                id: bad as u64,
                num_nodes,
            });
        }
        let edge_iter = (0..num_nodes).flat_map(|u| {
            let (lo, hi) = (indptr[u] as usize, indptr[u + 1] as usize);
            indices[lo..hi].iter().map(move |&w| (u as u32, w))
        });
        if symmetrize {
            return Self::from_edges(num_nodes, edge_iter.collect::<Vec<_>>());
        }
        let row = |u: usize| &indices[indptr[u] as usize..indptr[u + 1] as usize];
        for u in 0..num_nodes {
            if row(u).windows(2).any(|w| w[0] >= w[1]) {
                return Err(GraphError::UnsortedRow(u));
            }
        }
        for (u, w) in edge_iter.clone() {
            if u != w && row(w as usize).binary_search(&u).is_err() {
                return Err(GraphError::Asymmetric(u, w));
            }
        }
        Self::from_edges(num_nodes, edge_iter.collect::<Vec<_>>())
    }

    pub fn with_features(mut self, feature_dim: usize, features: Vec<f32>) -> Result<Self, GraphError> {
        if features.len() != feature_dim * self.num_nodes {
            return Err(GraphError::Size(format!(
                "feature matrix has {} values, expected {} x {}",
                features.len(),
                self.num_nodes,
                feature_dim
            )));
        }
        if let Some(pos) = features.iter().position(|x| !x.is_finite()) {
            return Err(GraphError::NonFinite {
                node: pos / feature_dim,
                col: pos % feature_dim,
            });
        }
        self.feature_dim = feature_dim;
        self.features = features;
        Ok(self)
    }

    pub fn with_labels(mut self, labels: Vec<u32>, num_classes: usize) -> Result<Self, GraphError> {
        if labels.len() != self.num_nodes {
            return Err(GraphError::Size(format!(
                "{} labels for {} nodes",
                labels.len(),
                self.num_nodes
            )));
        }
        if let Some((node, &label)) = labels
            .iter()
            .enumerate()
            .find(|(_, &l)| l as usize >= num_classes)
        {
            return Err(GraphError::BadLabel {
                node,
                label,
                num_classes,
            });
        }
        self.labels = Some(labels);
        self.num_classes = num_classes;
        Ok(self)
    }

    pub fn with_split(mut self, split: Vec<SplitTag>) -> Result<Self, GraphError> {
        if split.len() != self.num_nodes {
            return Err(GraphError::Size(format!(
                "{} split tags for {} nodes",
                split.len(),
                self.num_nodes
            )));
        }
        self.split = Some(split);
        Ok(self)
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    /// Number of undirected edges.
    pub fn num_edges(&self) -> usize {
        self.indices.len() / 2
    }

    /// Number of stored (directed) adjacency entries, i.e. `2 * num_edges()`.
    pub fn num_entries(&self) -> usize {
        self.indices.len()
    }

    pub fn indptr(&self) -> &[u64] {
        &self.indptr
    }

    pub fn indices(&self) -> &[u32] {
        &self.indices
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn features(&self) -> &[f32] {
        &self.features
    }

    pub fn feature_row(&self, u: usize) -> &[f32] {
        &self.features[u * self.feature_dim..(u + 1) * self.feature_dim]
    }

    pub fn labels(&self) -> Option<&[u32]> {
        self.labels.as_deref()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn split(&self) -> Option<&[SplitTag]> {
        self.split.as_deref()
    }

    /// Nodes carrying `tag`, ascending. Empty when no split is attached.
    pub fn split_nodes(&self, tag: SplitTag) -> Vec<u32> {
        match &self.split {
            Some(split) => split
                .iter()
                .enumerate()
                .filter(|(_, &t)| t == tag)
                .map(|(u, _)| u as u32)
                .collect(),
            None => Vec::new(),
        }
    }

    pub fn max_degree(&self) -> usize {
        (0..self.num_nodes).map(|u| self.degree(u)).max().unwrap_or(0)
    }
}

impl Adjacency for GraphBundle {
    fn node_count(&self) -> usize {
        self.num_nodes
    }

    fn neighbors(&self, u: usize) -> &[u32] {
        &self.indices[self.indptr[u] as usize..self.indptr[u + 1] as usize]
    }
}
