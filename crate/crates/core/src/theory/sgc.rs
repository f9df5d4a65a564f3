use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::TheoryError;
use crate::extract::{extract_batch, ExtractConfig};
use crate::graph::{normalize, GraphBundle, NormKind, SplitTag, Subgraph};

/// Softmax regression on fixed features: one weight matrix, no bias.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticConfig {
    pub epochs: usize,
    pub lr: f64,
    pub dropout: f64,
    pub batch_size: usize,
    pub seed: u64,
    /// Independent initializations averaged by `sgc_sweep`.
    pub restarts: usize,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        Self {
            epochs: 100,
            lr: 0.001,
            dropout: 0.1,
            batch_size: 256,
            seed: 0,
            restarts: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SgcRow {
    pub k: usize,
    /// Mean test accuracies over the restarts.
    pub full_acc: f64,
    pub shadow_acc: f64,
    /// Largest distance between class centroids of the unit-normalized
    /// propagated rows; near zero once features have collapsed.
    pub full_separation: f64,
    pub shadow_separation: f64,
}

/// Target rows of `A_sym^k X` for each requested `k`, either on the whole
/// graph (`subs = None`) or inside each node's own subgraph.
pub fn propagated_targets(g: &GraphBundle, subs: Option<&[Subgraph]>, powers: &[usize]) -> Vec<Array2<f64>> {
    let x = Array2::from_shape_vec((g.num_nodes(), g.feature_dim()), g.features().iter().map(|&v| v as f64).collect())
        .expect("feature matrix shape");
    let k_max = powers.iter().copied().max().unwrap_or(0);
    let mut out: Vec<Array2<f64>> = powers.iter().map(|_| Array2::zeros(x.dim())).collect();
    let mut record = |k: usize, u: usize, row: ndarray::ArrayView1<f64>| {
        for (slot, _) in powers.iter().enumerate().filter(|(_, &p)| p == k) {
            out[slot].row_mut(u).assign(&row);
        }
    };
    match subs {
        None => {
            let a = normalize(g, NormKind::Sym);
            let mut h = x;
            for k in 0..=k_max {
                if k > 0 {
                    h = a.matmul(&h);
                }
                for u in 0..h.nrows() {
                    record(k, u, h.row(u));
                }
            }
        }
        Some(subs) => {
            for s in subs {
                let a = normalize(s, NormKind::Sym);
                let mut h = s.gather_rows(&x);
                let t = s.target_local();
                let u = s.target_global() as usize;
                for k in 0..=k_max {
                    if k > 0 {
                        h = a.matmul(&h);
                    }
                    record(k, u, h.row(t));
                }
            }
        }
    }
    out
}

fn class_separation(x: &Array2<f64>, labels: &[u32], num_classes: usize) -> f64 {
    let d = x.ncols();
    let mut sums = Array2::<f64>::zeros((num_classes, d));
    let mut counts = vec![0usize; num_classes];
    for (row, &y) in x.rows().into_iter().zip(labels) {
        let norm = row.dot(&row).sqrt();
        if norm > 0.0 {
            sums.row_mut(y as usize).scaled_add(1.0 / norm, &row);
        }
        counts[y as usize] += 1;
    }
    let mut best: f64 = 0.0;
    for a in 0..num_classes {
        for b in a + 1..num_classes {
            if counts[a] == 0 || counts[b] == 0 {
                continue;
            }
            let diff = &sums.row(a) / counts[a] as f64 - &sums.row(b) / counts[b] as f64;
            best = best.max(diff.dot(&diff).sqrt());
        }
    }
    best
}

fn softmax_rows(z: &mut Array2<f64>) {
    for mut row in z.rows_mut() {
        let m = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        row.mapv_inplace(|v| (v - m).exp());
        let s = row.sum();
        row /= s;
    }
}

fn accuracy(x: &Array2<f64>, w: &Array2<f64>, idx: &[usize], labels: &[u32]) -> f64 {
    if idx.is_empty() {
        return 0.0;
    }
    let hits = idx
        .iter()
        .filter(|&&i| {
            let z = x.row(i).dot(w);
            let mut best = 0;
            for (c, &v) in z.iter().enumerate() {
                if v > z[best] {
                    best = c;
                }
            }
            best == labels[i] as usize
        })
        .count();
    hits as f64 / idx.len() as f64
}

/// Trains on the train split with Adam and returns the test accuracy of the
/// epoch with the best validation accuracy.
pub fn train_logistic(x: &Array2<f64>, g: &GraphBundle, cfg: &LogisticConfig) -> Result<f64, TheoryError> {
    let labels = g.labels().ok_or_else(|| TheoryError::Invalid("graph has no labels".into()))?;
    if g.split().is_none() {
        return Err(TheoryError::Invalid("graph has no split".into()));
    }
    if cfg.batch_size == 0 || !(0.0..1.0).contains(&cfg.dropout) {
        return Err(TheoryError::Invalid("batch_size must be positive and dropout in [0, 1)".into()));
    }
    let idx = |t: SplitTag| -> Vec<usize> { g.split_nodes(t).into_iter().map(|u| u as usize).collect() };
    let (mut train, val, test) = (idx(SplitTag::Train), idx(SplitTag::Val), idx(SplitTag::Test));
    if train.is_empty() {
        return Err(TheoryError::Invalid("train split is empty".into()));
    }
    let (d, c) = (x.ncols(), g.num_classes());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let bound = (6.0 / (d + c) as f64).sqrt();
    let mut w = Array2::from_shape_simple_fn((d, c), || rng.random_range(-bound..bound));
    let (mut m, mut v) = (Array2::<f64>::zeros((d, c)), Array2::<f64>::zeros((d, c)));
    let (b1, b2, eps) = (0.9f64, 0.999f64, 1e-8);
    let keep = 1.0 - cfg.dropout;
    let mut step = 0i32;
    let mut best = (f64::NEG_INFINITY, accuracy(x, &w, &test, labels));
    for _ in 0..cfg.epochs {
        train.shuffle(&mut rng);
        for batch in train.chunks(cfg.batch_size) {
            let mut xb = x.select(Axis(0), batch);
            if cfg.dropout > 0.0 {
                xb.mapv_inplace(|val| if rng.random::<f64>() < keep { val / keep } else { 0.0 });
            }
            let mut p = xb.dot(&w);
            softmax_rows(&mut p);
            for (r, &i) in batch.iter().enumerate() {
                p[[r, labels[i] as usize]] -= 1.0;
            }
            let grad = xb.t().dot(&p) / batch.len() as f64;
            step += 1;
            m = &m * b1 + &grad * (1.0 - b1);
            v = &v * b2 + &grad.mapv(|g| g * g) * (1.0 - b2);
            let (c1, c2) = (1.0 - b1.powi(step), 1.0 - b2.powi(step));
            ndarray::Zip::from(&mut w).and(&m).and(&v).for_each(|wi, &mi, &vi| {
                *wi -= cfg.lr * (mi / c1) / ((vi / c2).sqrt() + eps);
            });
        }
        let val_acc = accuracy(x, &w, &val, labels);
        if val_acc > best.0 {
            best = (val_acc, accuracy(x, &w, &test, labels));
        }
    }
    Ok(best.1)
}

/// Full-graph versus per-subgraph SGC across propagation depths.
pub fn sgc_sweep(
    g: &GraphBundle,
    extract: &ExtractConfig,
    powers: &[usize],
    cfg: &LogisticConfig,
) -> Result<Vec<SgcRow>, TheoryError> {
    let labels = g.labels().ok_or_else(|| TheoryError::Invalid("graph has no labels".into()))?;
    let targets: Vec<u32> = (0..g.num_nodes() as u32).collect();
    let subs = extract_batch(g, &targets, extract)?;
    let full = propagated_targets(g, None, powers);
    let shadow = propagated_targets(g, Some(&subs), powers);
    if cfg.restarts == 0 {
        return Err(TheoryError::Invalid("restarts must be at least 1".into()));
    }
    let mean_acc = |x: &Array2<f64>| -> Result<f64, TheoryError> {
        let mut sum = 0.0;
        for r in 0..cfg.restarts {
            let run = LogisticConfig {
                seed: cfg.seed.wrapping_add(r as u64),
                ..cfg.clone()
            };
            sum += train_logistic(x, g, &run)?;
        }
        Ok(sum / cfg.restarts as f64)
    };
    powers
        .iter()
        .zip(full.iter().zip(&shadow))
        .map(|(&k, (xf, xs))| {
            Ok(SgcRow {
                k,
                full_acc: mean_acc(xf)?,
                shadow_acc: mean_acc(xs)?,
                full_separation: class_separation(xf, labels, g.num_classes()),
                shadow_separation: class_separation(xs, labels, g.num_classes()),
            })
        })
        .collect()
}
