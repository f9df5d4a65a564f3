use rand::Rng;

use super::ExtractError;
use crate::graph::{induced_subgraph, Adjacency, GraphBundle, Subgraph};

/// Budgeted breadth-first expansion from `v`.
///
/// Frontier nodes are processed in ascending id order. A node with more than
/// `budget` neighbours offers a uniform sample of `budget` of them (without
/// replacement); already-selected nodes are skipped. The result is induced on
/// every selected node, so its depth is at most `depth`.
pub fn extract_khop<R: Rng + ?Sized>(
    g: &GraphBundle,
    v: u32,
    depth: usize,
    budget: Option<usize>,
    rng: &mut R,
) -> Result<Subgraph, ExtractError> {
    if v as usize >= g.num_nodes() {
        return Err(ExtractError::NodeOutOfRange {
            node: v,
            num_nodes: g.num_nodes(),
        });
    }
    if depth < 1 || budget == Some(0) {
        return Err(ExtractError::InvalidConfig("k-hop needs depth >= 1 and budget >= 1".into()));
    }
    let mut selected = vec![v];
    let mut seen = std::collections::HashSet::from([v]);
    let mut frontier = vec![v];
    for _ in 0..depth {
        let mut next = Vec::new();
        for &u in &frontier {
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
                    for i in picks {
                        offer(nbrs[i]);
                    }
                }
                _ => nbrs.iter().copied().for_each(&mut offer),
            }
        }
        if next.is_empty() {
            break;
        }
        next.sort_unstable();
        selected.extend_from_slice(&next);
        frontier = next;
    }
    Ok(induced_subgraph(g, &selected, v)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::graph::subgraph_depth;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn figure1_one_hop() {
        let g = fixtures::figure1();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s = extract_khop(&g, 0, 1, None, &mut rng).unwrap();
        assert_eq!(s.globals(), &[0, 1, 4, 7]);
        assert_eq!(s.num_edges(), 4);
    }

    #[test]
    fn figure1_two_hop_is_whole_graph() {
        let g = fixtures::figure1();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s = extract_khop(&g, 0, 2, None, &mut rng).unwrap();
        assert_eq!(s.num_nodes(), 8);
        assert_eq!(s.num_edges(), 12);
    }

    #[test]
    fn budget_binds_on_star_center() {
        let g = fixtures::star(6);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = extract_khop(&g, 0, 1, Some(1), &mut rng).unwrap();
        assert_eq!(s.num_nodes(), 2);
        assert_eq!(s.num_edges(), 1);
    }

    #[test]
    fn depth_bound_holds_under_budget() {
        let g = fixtures::karate();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for v in 0..34 {
            let s = extract_khop(&g, v, 2, Some(3), &mut rng).unwrap();
            assert!(subgraph_depth(&s) <= 2);
            assert!(s.local_of(v).is_some());
        }
    }
}
