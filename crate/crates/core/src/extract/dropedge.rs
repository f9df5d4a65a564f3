use rand::Rng;

use crate::graph::Subgraph;

/// Drops each undirected edge independently with probability `p_drop`, then
/// keeps only the target's component.
pub fn dropedge<R: Rng + ?Sized>(s: &Subgraph, p_drop: f64, rng: &mut R) -> Subgraph {
    let p = p_drop.clamp(0.0, 1.0);
    if p == 0.0 {
        return s.clone();
    }
    Subgraph::from_local_edges(s.target_local(), s.globals(), kept_edges(s, p, rng))
}

fn kept_edges<R: Rng + ?Sized>(s: &Subgraph, p: f64, rng: &mut R) -> Vec<(u32, u32)> {
    s.undirected_edges().filter(|_| !rng.random_bool(p)).collect()
}
