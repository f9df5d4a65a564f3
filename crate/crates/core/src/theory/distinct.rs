use ndarray::Array2;
use rand::Rng;
use rand_distr::StandardNormal;

use super::limit::limit_aggregation;
use super::TheoryError;
use crate::extract::{extract_batch, ExtractConfig};
use crate::graph::{GraphBundle, Subgraph};

const MAX_NODES: usize = 5000;

/// Scalar applied to each limit aggregation before comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhiMode {
    Identity,
    /// `δ(v)^{-1/2}` of the target inside its own subgraph.
    InvSqrtDegree,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistinctnessReport {
    pub targets: usize,
    pub draws: usize,
    /// Pairs of targets with different node sets whose aggregations agree
    /// within tolerance, summed over draws.
    pub collisions: usize,
    /// Fewest distinct aggregations seen in any draw.
    pub min_distinct: usize,
    /// Largest distance between two aggregations in any draw.
    pub max_pair_distance: f64,
}

/// Scaled limit aggregation of every scope under global features `x`.
pub fn limit_vectors(subs: &[Subgraph], x: &Array2<f64>, phi: PhiMode) -> Vec<Vec<f64>> {
    subs.iter()
        .map(|s| {
            let m = limit_aggregation(s, &s.gather_rows(x)).limit_m;
            let scale = match phi {
                PhiMode::Identity => 1.0,
                PhiMode::InvSqrtDegree => 1.0 / (s.degree_plus_one(s.target_local()) as f64).sqrt(),
            };
            m.iter().map(|v| v * scale).collect()
        })
        .collect()
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Compares the limit aggregations of every target across random feature
/// draws. Classes of "equal" aggregations are the transitive closure of
/// pairs within `tol`.
pub fn scope_distinctness<R: Rng + ?Sized>(
    g: &GraphBundle,
    extract: &ExtractConfig,
    rng: &mut R,
    phi: PhiMode,
    draws: usize,
    feature_dim: usize,
    tol: f64,
) -> Result<DistinctnessReport, TheoryError> {
    let n = g.num_nodes();
    if n > MAX_NODES {
        return Err(TheoryError::TooLarge(n));
    }
    if feature_dim == 0 {
        return Err(TheoryError::Invalid("feature_dim must be at least 1".into()));
    }
    let targets: Vec<u32> = (0..n as u32).collect();
    let subs = extract_batch(g, &targets, extract)?;
    let node_sets: Vec<Vec<u32>> = subs
        .iter()
        .map(|s| {
            let mut v = s.globals().to_vec();
            v.sort_unstable();
            v
        })
        .collect();

    let mut report = DistinctnessReport {
        targets: n,
        draws,
        collisions: 0,
        min_distinct: if draws == 0 { 0 } else { n },
        max_pair_distance: 0.0,
    };
    for _ in 0..draws {
        let x = Array2::from_shape_simple_fn((n, feature_dim), || rng.sample::<f64, _>(StandardNormal));
        let m = limit_vectors(&subs, &x, phi);
        let mut parent: Vec<usize> = (0..n).collect();
        for u in 0..n {
            for v in u + 1..n {
                let d = distance(&m[u], &m[v]);
                report.max_pair_distance = report.max_pair_distance.max(d);
                if d <= tol {
                    if node_sets[u] != node_sets[v] {
                        report.collisions += 1;
                    }
                    let (a, b) = (find(&mut parent, u), find(&mut parent, v));
                    parent[a] = b;
                }
            }
        }
        let distinct = (0..n).filter(|&i| find(&mut parent, i) == i).count();
        report.min_distinct = report.min_distinct.min(distinct);
    }
    Ok(report)
}
