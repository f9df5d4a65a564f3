//! Named small graphs and seeded synthetic generators.
//!
//! Named fixtures carry no features; attach them with
//! [`GraphBundle::with_features`] when a test needs them.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::graph::{GraphBundle, SplitTag};

fn build(n: usize, edges: &[(u32, u32)]) -> GraphBundle {
    GraphBundle::from_edges(n, edges.iter().copied()).expect("fixture edges are in range")
}

/// 8-node 3-regular graph: the 8-cycle plus chords (0,4), (1,7), (3,6), (2,5).
///
/// Node 0's one-hop subgraph is a triangle with a pendant, node 2's is a
/// 3-star; 1-WL on the whole graph cannot tell them apart.
pub fn figure1() -> GraphBundle {
    build(
        8,
        &[
            (0, 1),
            (1, 2),
            (2, 3),
            (3, 4),
            (4, 5),
            (5, 6),
            (6, 7),
            (7, 0),
            (0, 4),
            (1, 7),
            (3, 6),
            (2, 5),
        ],
    )
}

/// 2-regular graph with two components: a 6-cycle on 0..6 and a triangle on 6..9.
pub fn two_component_2regular() -> GraphBundle {
    build(
        9,
        &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 0), (6, 7), (7, 8), (8, 6)],
    )
}

pub fn triangle() -> GraphBundle {
    build(3, &[(0, 1), (1, 2), (0, 2)])
}

/// Path `0 - 1 - ... - (n-1)`.
pub fn path(n: usize) -> GraphBundle {
    let edges: Vec<_> = (1..n as u32).map(|i| (i - 1, i)).collect();
    build(n, &edges)
}

/// Star with center 0 and `leaves` leaves.
pub fn star(leaves: usize) -> GraphBundle {
    let edges: Vec<_> = (1..=leaves as u32).map(|i| (0, i)).collect();
    build(leaves + 1, &edges)
}

pub fn complete(n: usize) -> GraphBundle {
    let mut edges = Vec::new();
    for u in 0..n as u32 {
        for v in u + 1..n as u32 {
            edges.push((u, v));
        }
    }
    build(n, &edges)
}

pub fn cycle(n: usize) -> GraphBundle {
    let edges: Vec<_> = (0..n as u32).map(|i| (i, (i + 1) % n as u32)).collect();
    build(n, &edges)
}

const KARATE_EDGES: [(u32, u32); 78] = [
    (0, 1), (0, 2), (0, 3), (0, 4), (0, 5), (0, 6), (0, 7), (0, 8), (0, 10), (0, 11),
    (0, 12), (0, 13), (0, 17), (0, 19), (0, 21), (0, 31), (1, 2), (1, 3), (1, 7), (1, 13),
    (1, 17), (1, 19), (1, 21), (1, 30), (2, 3), (2, 7), (2, 8), (2, 9), (2, 13), (2, 27),
    (2, 28), (2, 32), (3, 7), (3, 12), (3, 13), (4, 6), (4, 10), (5, 6), (5, 10), (5, 16),
    (6, 16), (8, 30), (8, 32), (8, 33), (9, 33), (13, 33), (14, 32), (14, 33), (15, 32),
    (15, 33), (18, 32), (18, 33), (19, 33), (20, 32), (20, 33), (22, 32), (22, 33),
    (23, 25), (23, 27), (23, 29), (23, 32), (23, 33), (24, 25), (24, 27), (24, 31),
    (25, 31), (26, 29), (26, 33), (27, 33), (28, 31), (28, 33), (29, 32), (29, 33),
    (30, 32), (30, 33), (31, 32), (31, 33), (32, 33),
];

/// Zachary's karate club: 34 nodes, 78 edges.
pub fn karate() -> GraphBundle {
    build(34, &KARATE_EDGES)
}

pub fn karate_edges() -> &'static [(u32, u32)] {
    &KARATE_EDGES
}

/// Parameters of the planted-partition generator.
#[derive(Debug, Clone, PartialEq)]
pub struct SbmParams {
    pub block_sizes: Vec<usize>,
    pub p_in: f64,
    pub p_out: f64,
    pub feature_dim: usize,
    /// Distance of each class mean from the origin, in noise standard deviations.
    pub mean_shift: f64,
    /// Constant added to every feature coordinate.
    pub feature_offset: f64,
    pub train_fraction: f64,
    pub val_fraction: f64,
}

impl SbmParams {
    /// Two balanced blocks of 1000 nodes, `p_in = 0.02`, `p_out = 0.002`,
    /// 16-dim Gaussian features whose class means sit 1.4 σ from the origin,
    /// so a features-only linear classifier is right about 92% of the time.
    pub fn separable() -> Self {
        Self {
            block_sizes: vec![1000, 1000],
            p_in: 0.02,
            p_out: 0.002,
            feature_dim: 16,
            mean_shift: 1.4,
            feature_offset: 1.0,
            train_fraction: 0.5,
            val_fraction: 0.25,
        }
    }

    /// 500-node two-block graph used by the distinctness checks.
    pub fn medium() -> Self {
        Self {
            block_sizes: vec![250, 250],
            p_in: 0.04,
            p_out: 0.004,
            ..Self::separable()
        }
    }

    pub fn small_test() -> Self {
        Self {
            block_sizes: vec![20, 20],
            p_in: 0.3,
            p_out: 0.03,
            feature_dim: 4,
            ..Self::separable()
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.block_sizes.iter().sum()
    }
}

/// Stochastic block model with class-shifted Gaussian features, block labels
/// and a random train/val/test split. Fully determined by `seed`.
pub fn sbm(params: &SbmParams, seed: u64) -> GraphBundle {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = params.num_nodes();
    let labels: Vec<u32> = params
        .block_sizes
        .iter()
        .enumerate()
        .flat_map(|(b, &size)| std::iter::repeat_n(b as u32, size))
        .collect();
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            let p = if labels[u] == labels[v] { params.p_in } else { params.p_out };
            if rng.random::<f64>() < p {
                edges.push((u as u32, v as u32));
            }
        }
    }
    let k = params.block_sizes.len();
    let d = params.feature_dim;
    let mean = |class: u32, j: usize| -> f64 {
        if k == 2 {
            // Alternating signs keep the class direction orthogonal to the offset.
            let sign = if (class as usize + j).is_multiple_of(2) { 1.0 } else { -1.0 };
            sign * params.mean_shift / (d as f64).sqrt()
        } else if j == class as usize % d {
            params.mean_shift
        } else {
            0.0
        }
    };
    let mut features = Vec::with_capacity(n * d);
    for &c in &labels {
        for j in 0..d {
            let z: f64 = StandardNormal.sample(&mut rng);
            features.push((z + mean(c, j) + params.feature_offset) as f32);
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let n_train = (params.train_fraction * n as f64).round() as usize;
    let n_val = (params.val_fraction * n as f64).round() as usize;
    let mut split = vec![SplitTag::Test; n];
    for (rank, &u) in order.iter().enumerate() {
        split[u] = if rank < n_train {
            SplitTag::Train
        } else if rank < n_train + n_val {
            SplitTag::Val
        } else {
            SplitTag::Test
        };
    }
    GraphBundle::from_edges(n, edges)
        .and_then(|g| g.with_features(d, features))
        .and_then(|g| g.with_labels(labels, k))
        .and_then(|g| g.with_split(split))
        .expect("generated sbm is valid")
}

/// Uniform-ish random `degree`-regular simple graph via the pairing model,
/// with self-loops and parallel edges removed by random edge switches.
pub fn random_regular(n: usize, degree: usize, seed: u64) -> GraphBundle {
    assert!((n * degree).is_multiple_of(2), "n * degree must be even");
    assert!(degree < n, "degree must be below n");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut stubs: Vec<u32> = (0..n as u32)
        .flat_map(|u| std::iter::repeat_n(u, degree))
        .collect();
    stubs.shuffle(&mut rng);
    let norm = |a: u32, b: u32| (a.min(b), a.max(b));
    let mut edges: Vec<(u32, u32)> = stubs.chunks_exact(2).map(|c| norm(c[0], c[1])).collect();

    // `seen` ends up holding exactly the good edges; `bad` the self-loops and
    // repeated copies that must be switched away.
    let mut seen = HashSet::with_capacity(edges.len());
    let mut bad = Vec::new();
    for (i, &e) in edges.iter().enumerate() {
        if e.0 == e.1 || !seen.insert(e) {
            bad.push(i);
        }
    }
    let mut bad_set: HashSet<usize> = bad.iter().copied().collect();
    while let Some(&i) = bad.last() {
        let j = rng.random_range(0..edges.len());
        if bad_set.contains(&j) {
            continue;
        }
        let (a, b) = edges[i];
        let (c, d) = edges[j];
        let (e1, e2) = if rng.random::<bool>() {
            (norm(a, c), norm(b, d))
        } else {
            (norm(a, d), norm(b, c))
        };
        if e1.0 == e1.1 || e2.0 == e2.1 || e1 == e2 || seen.contains(&e1) || seen.contains(&e2) {
            continue;
        }
        seen.remove(&edges[j]);
        seen.insert(e1);
        seen.insert(e2);
        edges[i] = e1;
        edges[j] = e2;
        bad.pop();
        bad_set.remove(&i);
    }
    GraphBundle::from_edges(n, edges).expect("regular graph is valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Adjacency;

    #[test]
    fn figure1_is_three_regular() {
        let g = figure1();
        assert!((0..8).all(|u| g.degree(u) == 3));
        assert_eq!(g.num_edges(), 12);
    }

    #[test]
    fn karate_counts() {
        let g = karate();
        assert_eq!(g.num_nodes(), 34);
        assert_eq!(g.num_edges(), 78);
    }

    #[test]
    fn random_regular_is_simple_and_regular() {
        let g = random_regular(1000, 10, 7);
        assert!((0..1000).all(|u| g.degree(u) == 10));
        assert_eq!(g.num_edges(), 5000);
    }

    #[test]
    fn sbm_is_seed_deterministic() {
        let p = SbmParams::small_test();
        assert_eq!(sbm(&p, 1), sbm(&p, 1));
        assert_ne!(sbm(&p, 1), sbm(&p, 2));
    }
}
