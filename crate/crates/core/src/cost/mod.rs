//! Multiply-accumulate (MAC) counts for GNN inference, in the normal
//! layer-wise expansion regime and in the fixed-subgraph regime. Bias,
//! activation and normalization work is not counted.

use std::collections::HashSet;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::extract::target_rng;
use crate::graph::{Adjacency, GraphBundle, Subgraph};
use crate::model::Arch;

#[derive(Debug, Error)]
pub enum CostError {
    #[error("inconsistent scope statistics: {0}")]
    Inconsistent(String),
    #[error("no cost formula for {0:?}")]
    Unsupported(Arch),
    #[error("node {node} is out of range for a graph with {num_nodes} nodes")]
    NodeOutOfRange { node: u32, num_nodes: usize },
}

/// `m·d_in + n_out·d_in·d_out`.
pub fn cost_gcn_layer(m: u64, n_out: u64, d_in: u64, d_out: u64) -> u128 {
    m as u128 * d_in as u128 + n_out as u128 * d_in as u128 * d_out as u128
}

/// `m·d_in + 2·n_out·d_in·d_out`: neighbour and self weights.
pub fn cost_sage_layer(m: u64, n_out: u64, d_in: u64, d_out: u64) -> u128 {
    m as u128 * d_in as u128 + 2 * n_out as u128 * d_in as u128 * d_out as u128
}

/// `3·m·d_out + n_in·d_in·d_out`; the head count cancels when head outputs
/// are concatenated to `d_out` channels.
pub fn cost_gat_layer(m: u64, n_in: u64, d_in: u64, d_out: u64) -> u128 {
    3 * m as u128 * d_out as u128 + n_in as u128 * d_in as u128 * d_out as u128
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Regime {
    #[serde(rename = "NORMAL_LHOP")]
    NormalLhop,
    #[serde(rename = "SHADOW")]
    Shadow,
}

/// Node and edge counts one layer touches, summed over all targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct LayerScope {
    pub n_in: u64,
    pub n_out: u64,
    /// Directed adjacency entries aggregated, self-loops excluded.
    pub m: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScopeStats {
    /// One scope per layer, first layer first.
    Normal { layers: Vec<LayerScope>, targets: u64 },
    /// Every layer runs on the whole subgraph: `n` nodes and `m` entries,
    /// each summed over targets.
    Shadow { n: u64, m: u64, targets: u64 },
}

impl ScopeStats {
    pub fn targets(&self) -> u64 {
        match self {
            ScopeStats::Normal { targets, .. } | ScopeStats::Shadow { targets, .. } => *targets,
        }
    }

    /// Totals over a set of extracted subgraphs.
    pub fn from_subgraphs(subs: &[Subgraph]) -> Self {
        ScopeStats::Shadow {
            n: subs.iter().map(|s| s.num_nodes() as u64).sum(),
            m: subs.iter().map(|s| s.num_entries() as u64).sum(),
            targets: subs.len() as u64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct LayerCost {
    pub n_in: u64,
    pub n_out: u64,
    pub m: u64,
    pub d_in: u64,
    pub d_out: u64,
    pub macs: u128,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CostReport {
    pub regime: Regime,
    pub layers: Vec<LayerCost>,
    /// Sum of the layer costs.
    pub total_macs: u128,
    /// Center readout plus the linear head on `[pooled ∥ target]`, for all targets.
    pub head_macs: u128,
    pub targets: u64,
}

impl CostReport {
    /// Layer MACs per target.
    pub fn per_target(&self) -> f64 {
        self.total_macs as f64 / self.targets.max(1) as f64
    }
}

fn layer_macs(arch: Arch, s: &LayerScope, d: u64) -> Result<u128, CostError> {
    match arch {
        Arch::Gcn => Ok(cost_gcn_layer(s.m, s.n_out, d, d)),
        Arch::Sage => Ok(cost_sage_layer(s.m, s.n_out, d, d)),
        Arch::Gat => Ok(cost_gat_layer(s.m, s.n_in, d, d)),
        other => Err(CostError::Unsupported(other)),
    }
}

/// MACs of an `num_layers`-deep, `dim`-wide model over the given scopes.
pub fn inference_cost(
    arch: Arch,
    num_layers: usize,
    dim: u64,
    num_classes: u64,
    stats: &ScopeStats,
) -> Result<CostReport, CostError> {
    let (regime, scopes) = match stats {
        ScopeStats::Normal { layers, .. } => {
            if layers.len() != num_layers {
                return Err(CostError::Inconsistent(format!(
                    "{} layer scopes for a {num_layers}-layer model",
                    layers.len()
                )));
            }
            if layers.windows(2).any(|w| w[1].n_in != w[0].n_out) {
                return Err(CostError::Inconsistent("each layer must consume the previous layer's outputs".into()));
            }
            (Regime::NormalLhop, layers.clone())
        }
        &ScopeStats::Shadow { n, m, .. } => (Regime::Shadow, vec![LayerScope { n_in: n, n_out: n, m }; num_layers]),
    };
    if scopes.iter().any(|s| s.n_out > s.n_in) {
        return Err(CostError::Inconsistent("a layer cannot output more nodes than it reads".into()));
    }
    let layers = scopes
        .iter()
        .map(|s| {
            Ok(LayerCost {
                n_in: s.n_in,
                n_out: s.n_out,
                m: s.m,
                d_in: dim,
                d_out: dim,
                macs: layer_macs(arch, s, dim)?,
            })
        })
        .collect::<Result<Vec<_>, CostError>>()?;
    let targets = stats.targets();
    Ok(CostReport {
        regime,
        total_macs: layers.iter().map(|l| l.macs).sum(),
        head_macs: targets as u128 * 2 * dim as u128 * num_classes as u128,
        layers,
        targets,
    })
}

/// Average node counts by hop distance from the target.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HopProfile {
    pub counts: Vec<f64>,
    pub fractions: Vec<f64>,
}

impl HopProfile {
    fn from_totals(totals: &[u64], targets: usize) -> Self {
        let all: u64 = totals.iter().sum();
        HopProfile {
            counts: totals.iter().map(|&c| c as f64 / targets.max(1) as f64).collect(),
            fractions: totals.iter().map(|&c| if all == 0 { 0.0 } else { c as f64 / all as f64 }).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HopExpansion {
    pub profile: HopProfile,
    pub scope: ScopeStats,
}

/// Nodes at hops `0..=depth` of one target, each paired with its aggregation
/// work `min(deg, budget)`.
fn hop_levels<R: Rng + ?Sized>(g: &GraphBundle, v: u32, depth: usize, budget: Option<usize>, rng: &mut R) -> Vec<Vec<(u32, u64)>> {
    let work = |u: u32| {
        let d = g.degree(u as usize);
        budget.map_or(d, |b| d.min(b)) as u64
    };
    let mut seen = HashSet::from([v]);
    let mut levels = vec![vec![(v, work(v))]];
    for _ in 0..depth {
        let mut next = Vec::new();
        for &(u, _) in levels.last().expect("non-empty") {
            let nbrs = g.neighbors(u as usize);
            let mut offer = |w: u32| {
                if seen.insert(w) {
                    next.push(w);
                }
            };
            match budget {
                Some(b) if nbrs.len() > b => {
                    let mut picks = rand::seq::index::sample(rng, nbrs.len(), b).into_vec();
                    picks.sort_unstable();
                    picks.into_iter().for_each(|i| offer(nbrs[i]));
                }
                _ => nbrs.iter().copied().for_each(&mut offer),
            }
        }
        next.sort_unstable();
        levels.push(next.into_iter().map(|w| (w, work(w))).collect());
    }
    levels
}

/// Breadth-first (optionally budgeted) expansion around each target, and the
/// layer scopes a `depth`-layer normal GNN needs for those targets: layer `ℓ`
/// reads hops `≤ depth − ℓ + 1` and writes hops `≤ depth − ℓ`.
pub fn hop_expansion(
    g: &GraphBundle,
    targets: &[u32],
    depth: usize,
    budget: Option<usize>,
    seed: u64,
) -> Result<HopExpansion, CostError> {
    if depth < 1 || budget == Some(0) {
        return Err(CostError::Inconsistent("hop expansion needs depth >= 1 and budget >= 1".into()));
    }
    if let Some(&node) = targets.iter().find(|&&t| t as usize >= g.num_nodes()) {
        return Err(CostError::NodeOutOfRange {
            node,
            num_nodes: g.num_nodes(),
        });
    }
    // Per target: node count and summed work per hop.
    let per: Vec<Vec<(u64, u64)>> = targets
        .par_iter()
        .map(|&v| {
            hop_levels(g, v, depth, budget, &mut target_rng(seed, 0, v))
                .iter()
                .map(|lv| (lv.len() as u64, lv.iter().map(|&(_, w)| w).sum()))
                .collect()
        })
        .collect();
    let mut hop_totals = vec![0u64; depth + 1];
    let mut layers = vec![LayerScope { n_in: 0, n_out: 0, m: 0 }; depth];
    for hops in &per {
        let mut cum_nodes = Vec::with_capacity(depth + 1);
        let mut cum_work = Vec::with_capacity(depth + 1);
        let (mut a, mut b) = (0, 0);
        for (h, &(n, w)) in hops.iter().enumerate() {
            hop_totals[h] += n;
            a += n;
            b += w;
            cum_nodes.push(a);
            cum_work.push(b);
        }
        for (l, scope) in layers.iter_mut().enumerate() {
            let out_hop = depth - l - 1;
            scope.n_in += cum_nodes[out_hop + 1];
            scope.n_out += cum_nodes[out_hop];
            scope.m += cum_work[out_hop];
        }
    }
    Ok(HopExpansion {
        profile: HopProfile::from_totals(&hop_totals, targets.len()),
        scope: ScopeStats::Normal {
            layers,
            targets: targets.len() as u64,
        },
    })
}

/// Hop distances, measured in the full graph, of the nodes inside each
/// extracted subgraph.
pub fn scope_composition(g: &GraphBundle, subs: &[Subgraph]) -> HopProfile {
    let per: Vec<Vec<u64>> = subs
        .par_iter()
        .map(|s| {
            let dist = g.bfs_distances(s.target_global() as usize);
            let mut hist = Vec::new();
            for &u in s.globals() {
                let d = dist[u as usize] as usize;
                if hist.len() <= d {
                    hist.resize(d + 1, 0);
                }
                hist[d] += 1;
            }
            hist
        })
        .collect();
    let len = per.iter().map(Vec::len).max().unwrap_or(0);
    let mut totals = vec![0u64; len];
    for h in &per {
        for (t, c) in totals.iter_mut().zip(h) {
            *t += c;
        }
    }
    HopProfile::from_totals(&totals, subs.len())
}
