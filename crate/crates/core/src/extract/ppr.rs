use std::collections::{HashMap, VecDeque};

use super::{ExtractError, ExtractMethod};
use crate::graph::{induced_subgraph, Adjacency, GraphBundle, Subgraph};

/// Result of a local push from one source node.
///
/// `estimate` and `residual` are sparse, sorted by node id. Together they
/// conserve the unit mass started at the source.
#[derive(Debug, Clone, PartialEq)]
pub struct PprState {
    pub source: u32,
    pub estimate: Vec<(u32, f64)>,
    pub residual: Vec<(u32, f64)>,
    pub alpha: f64,
    pub epsilon: f64,
    /// Distinct nodes that received mass.
    pub touched: usize,
    pub pushes: usize,
}

impl PprState {
    pub fn score(&self, u: u32) -> f64 {
        self.estimate
            .binary_search_by_key(&u, |&(id, _)| id)
            .map_or(0.0, |i| self.estimate[i].1)
    }

    pub fn residual_of(&self, u: u32) -> f64 {
        self.residual
            .binary_search_by_key(&u, |&(id, _)| id)
            .map_or(0.0, |i| self.residual[i].1)
    }

    pub fn total_mass(&self) -> f64 {
        self.estimate.iter().map(|e| e.1).sum::<f64>() + self.residual.iter().map(|e| e.1).sum::<f64>()
    }

    /// Every touched node, ascending.
    pub fn touched_nodes(&self) -> Vec<u32> {
        let mut ids: Vec<u32> = self
            .estimate
            .iter()
            .chain(&self.residual)
            .map(|&(id, _)| id)
            .collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }
}

/// Forward push on the self-loop-augmented random walk with restart `alpha`.
///
/// A push at `u` resolves the walk's self-loop in closed form: the residual is
/// scaled by `1 / (1 - c)` with `c = (1 - alpha) / deg*(u)`, `alpha` of it is
/// settled at `u`, and each neighbour receives `c` of it. Nodes are processed
/// from a FIFO queue seeded with `v` until every residual is below
/// `epsilon * deg*(u)`.
pub fn approximate_ppr(g: &GraphBundle, v: u32, alpha: f64, epsilon: f64) -> Result<PprState, ExtractError> {
    if v as usize >= g.num_nodes() {
        return Err(ExtractError::NodeOutOfRange {
            node: v,
            num_nodes: g.num_nodes(),
        });
    }
    if !(alpha > 0.0 && alpha < 1.0) || epsilon.is_nan() || epsilon <= 0.0 {
        return Err(ExtractError::InvalidConfig(format!(
            "need 0 < alpha < 1 and epsilon > 0, got alpha={alpha}, epsilon={epsilon}"
        )));
    }

    let mut slot: HashMap<u32, usize> = HashMap::new();
    let mut ids: Vec<u32> = Vec::new();
    let mut est: Vec<f64> = Vec::new();
    let mut res: Vec<f64> = Vec::new();
    let mut queued: Vec<bool> = Vec::new();
    let mut slot_of = |u: u32, ids: &mut Vec<u32>, est: &mut Vec<f64>, res: &mut Vec<f64>, q: &mut Vec<bool>| {
        *slot.entry(u).or_insert_with(|| {
            ids.push(u);
            est.push(0.0);
            res.push(0.0);
            q.push(false);
            ids.len() - 1
        })
    };

    let s = slot_of(v, &mut ids, &mut est, &mut res, &mut queued);
    res[s] = 1.0;
    let threshold = |u: u32| epsilon * (g.degree(u as usize) + 1) as f64;
    let mut queue = VecDeque::new();
    if res[s] >= threshold(v) {
        queue.push_back(s);
        queued[s] = true;
    }

    let mut pushes = 0;
    while let Some(i) = queue.pop_front() {
        queued[i] = false;
        let u = ids[i];
        let r = res[i];
        if r < threshold(u) {
            continue;
        }
        pushes += 1;
        res[i] = 0.0;
        if g.degree(u as usize) == 0 {
            // The walk never leaves u, so all of its residual settles there.
            est[i] += r;
            continue;
        }
        let deg_star = (g.degree(u as usize) + 1) as f64;
        let c = (1.0 - alpha) / deg_star;
        let scaled = r / (1.0 - c);
        est[i] += alpha * scaled;
        let share = c * scaled;
        for &w in g.neighbors(u as usize) {
            let j = slot_of(w, &mut ids, &mut est, &mut res, &mut queued);
            res[j] += share;
            if !queued[j] && res[j] >= threshold(w) {
                queued[j] = true;
                queue.push_back(j);
            }
        }
    }

    let mut estimate: Vec<(u32, f64)> = Vec::new();
    let mut residual: Vec<(u32, f64)> = Vec::new();
    for (k, &u) in ids.iter().enumerate() {
        if est[k] > 0.0 {
            estimate.push((u, est[k]));
        }
        if res[k] > 0.0 {
            residual.push((u, res[k]));
        }
    }
    estimate.sort_unstable_by_key(|e| e.0);
    residual.sort_unstable_by_key(|e| e.0);
    Ok(PprState {
        source: v,
        estimate,
        residual,
        alpha,
        epsilon,
        touched: ids.len(),
        pushes,
    })
}

/// Picks the subgraph's node set from PPR scores.
///
/// With a threshold: every node scoring above it, truncated to `cap` by
/// descending score. Otherwise the `top_k` best. Ties go to the smaller node
/// id. The source is always kept, displacing the weakest pick if needed.
pub fn select_neighbors(p: &PprState, top_k: usize, threshold: Option<f64>, cap: usize) -> Vec<u32> {
    let mut ranked: Vec<(u32, f64)> = p.touched_nodes().into_iter().map(|u| (u, p.score(u))).collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let limit = match threshold {
        Some(_) => cap,
        None => top_k,
    }
    .max(1);
    let mut chosen: Vec<u32> = match threshold {
        Some(theta) => ranked.iter().filter(|e| e.1 > theta).take(limit).map(|e| e.0).collect(),
        None => ranked.iter().take(limit).map(|e| e.0).collect(),
    };
    if !chosen.contains(&p.source) {
        if chosen.len() >= limit {
            chosen.pop();
        }
        chosen.push(p.source);
    }
    chosen.sort_unstable();
    chosen
}

/// PPR push, neighbour selection, then the induced (connected) subgraph.
pub fn extract_ppr(g: &GraphBundle, v: u32, method: &ExtractMethod) -> Result<Subgraph, ExtractError> {
    let ExtractMethod::Ppr {
        top_k,
        threshold,
        cap,
        alpha,
        epsilon,
    } = method
    else {
        return Err(ExtractError::InvalidConfig("extract_ppr needs a Ppr method".into()));
    };
    method.validate()?;
    let state = approximate_ppr(g, v, *alpha, *epsilon)?;
    let nodes = select_neighbors(&state, *top_k, *threshold, *cap);
    Ok(induced_subgraph(g, &nodes, v)?)
}
