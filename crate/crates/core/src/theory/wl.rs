use std::collections::HashMap;

use super::TheoryError;
use crate::extract::{extract_batch, ExtractConfig};
use crate::graph::{Adjacency, GraphBundle};

/// Color refinement result. Ids are dense and numbered by first occurrence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WlColoring {
    pub colors: Vec<u32>,
    /// Refinement rounds that split at least one class.
    pub rounds: usize,
}

impl WlColoring {
    pub fn num_classes(&self) -> usize {
        self.colors.iter().max().map_or(0, |&c| c as usize + 1)
    }
}

type Signature = (u32, Vec<u32>);

fn signature<A: Adjacency + ?Sized>(a: &A, colors: &[u32], u: usize) -> Signature {
    let mut nb: Vec<u32> = a.neighbors(u).iter().map(|&w| colors[w as usize]).collect();
    nb.sort_unstable();
    (colors[u], nb)
}

fn intern<K: std::hash::Hash + Eq>(dict: &mut HashMap<K, u32>, key: K) -> u32 {
    let next = dict.len() as u32;
    *dict.entry(key).or_insert(next)
}

fn refine_round<A: Adjacency + ?Sized>(a: &A, colors: &[u32], dict: &mut HashMap<Signature, u32>) -> Vec<u32> {
    (0..a.node_count()).map(|u| intern(dict, signature(a, colors, u))).collect()
}

fn canonical(colors: &[u32]) -> Vec<u32> {
    let mut dict = HashMap::new();
    colors.iter().map(|&c| intern(&mut dict, c)).collect()
}

/// 1-WL refinement from `init` (uniform when `None`) until the partition
/// stops splitting or `max_rounds` rounds have run.
pub fn wl_refine<A: Adjacency + ?Sized>(a: &A, init: Option<&[u32]>, max_rounds: usize) -> WlColoring {
    let n = a.node_count();
    let mut colors = match init {
        Some(c) => {
            assert_eq!(c.len(), n, "one initial color per node");
            canonical(c)
        }
        None => vec![0; n],
    };
    let count = |c: &[u32]| c.iter().max().map_or(0, |&m| m as usize + 1);
    let mut rounds = 0;
    while rounds < max_rounds {
        let next = refine_round(a, &colors, &mut HashMap::new());
        if count(&next) == count(&colors) {
            break;
        }
        colors = next;
        rounds += 1;
    }
    WlColoring { colors, rounds }
}

/// 1-WL run inside every node's extracted subgraph, in lockstep with one
/// dictionary per round shared by all subgraphs so colors are comparable
/// across them. A node's label is its final color together with the color
/// histogram of its subgraph; labels are numbered by first occurrence.
pub fn shadow_wl(g: &GraphBundle, extract: &ExtractConfig, rounds: usize) -> Result<Vec<u32>, TheoryError> {
    if rounds == 0 {
        return Err(TheoryError::Invalid("shadow_wl needs at least one round".into()));
    }
    let targets: Vec<u32> = (0..g.num_nodes() as u32).collect();
    let subs = extract_batch(g, &targets, extract)?;
    let mut colors: Vec<Vec<u32>> = subs.iter().map(|s| vec![0; s.num_nodes()]).collect();
    for _ in 0..rounds {
        let mut dict = HashMap::new();
        colors = subs.iter().zip(&colors).map(|(s, c)| refine_round(s, c, &mut dict)).collect();
    }
    let mut labels = HashMap::new();
    Ok(subs
        .iter()
        .zip(&colors)
        .map(|(s, c)| {
            let mut hist: Vec<u32> = c.clone();
            hist.sort_unstable();
            intern(&mut labels, (c[s.target_local()], hist))
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extract::ExtractMethod;
    use crate::fixtures;

    #[test]
    fn star_splits_once() {
        let c = wl_refine(&fixtures::star(3), None, 10);
        assert_eq!(c.colors, vec![0, 1, 1, 1]);
        assert_eq!(c.rounds, 1);
    }

    #[test]
    fn distinct_init_is_stable() {
        let g = fixtures::karate();
        let init: Vec<u32> = (0..34).rev().collect();
        let c = wl_refine(&g, Some(&init), 10);
        assert_eq!(c.rounds, 0);
        assert_eq!(c.colors, (0..34).collect::<Vec<_>>());
    }

    #[test]
    fn path_needs_two_rounds() {
        let c = wl_refine(&fixtures::path(5), None, 10);
        assert_eq!(c.colors, vec![0, 1, 2, 1, 0]);
        assert_eq!(c.rounds, 2);
        assert_eq!(wl_refine(&fixtures::path(5), None, 1).num_classes(), 2);
    }

    #[test]
    fn complete_graph_targets_agree() {
        let g = fixtures::complete(4);
        let labels = shadow_wl(&g, &ExtractConfig::new(ExtractMethod::khop(1, None), 0), 3).unwrap();
        assert_eq!(labels, vec![0; 4]);
    }
}
