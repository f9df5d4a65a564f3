use std::io::Write;

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::forward::{backward, cross_entropy, model_forward, BranchInput};
use super::optim::{adam_step, AdamConfig, AdamState};
use super::{ModelConfig, ModelError, ParamSet};
use crate::extract::{extract_ensemble_batch, ExtractConfig};
use crate::graph::{GraphBundle, SplitTag, Subgraph};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    #[serde(default = "default_lr")]
    pub lr: f64,
    /// Epochs without a validation improvement before stopping; `None` never stops early.
    #[serde(default = "default_patience")]
    pub patience: Option<usize>,
    #[serde(default)]
    pub seed: u64,
}

fn default_batch() -> usize {
    64
}
fn default_lr() -> f64 {
    0.01
}
fn default_patience() -> Option<usize> {
    Some(20)
}

impl TrainConfig {
    pub fn new(epochs: usize, seed: u64) -> Self {
        Self {
            epochs,
            batch_size: default_batch(),
            lr: default_lr(),
            patience: default_patience(),
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub split: String,
    pub loss: f64,
    pub accuracy: f64,
}

#[derive(Debug, Clone)]
pub struct TrainReport {
    /// Parameters from the epoch with the best validation accuracy (the
    /// initial parameters when no epoch ran).
    pub params: ParamSet<f32>,
    pub history: Vec<EpochMetrics>,
    pub best_epoch: usize,
}

/// Targets of one split with their extracted subgraphs and feature rows.
#[derive(Debug, Clone)]
pub struct PreparedSplit {
    pub tag: SplitTag,
    pub targets: Vec<u32>,
    pub labels: Vec<u32>,
    /// `branches[i][b]`: target `i`, ensemble branch `b`.
    pub branches: Vec<Vec<(Subgraph, Array2<f32>)>>,
}

impl PreparedSplit {
    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    fn inputs(&self, i: usize) -> Vec<BranchInput<'_, f32>> {
        self.branches[i].iter().map(|(s, x)| BranchInput::new(s, x)).collect()
    }
}

fn split_name(tag: SplitTag) -> &'static str {
    match tag {
        SplitTag::Train => "train",
        SplitTag::Val => "val",
        SplitTag::Test => "test",
        SplitTag::None => "none",
    }
}

/// Extracts subgraphs for every node of `tag`.
pub fn prepare_split(
    g: &GraphBundle,
    tag: SplitTag,
    cfg: &ModelConfig,
    extract: &ExtractConfig,
) -> Result<PreparedSplit, ModelError> {
    let labels = g.labels().ok_or(ModelError::MissingLabels)?;
    if g.split().is_none() {
        return Err(ModelError::MissingSplit);
    }
    if extract.num_branches() != cfg.ensemble_branches {
        return Err(ModelError::Config(format!(
            "extractor yields {} branches but the model has {}",
            extract.num_branches(),
            cfg.ensemble_branches
        )));
    }
    if g.feature_dim() != cfg.in_dim {
        return Err(ModelError::Config(format!(
            "graph features are {}-dim but the model expects {}",
            g.feature_dim(),
            cfg.in_dim
        )));
    }
    let targets = g.split_nodes(tag);
    let subs = extract_ensemble_batch(g, &targets, extract)?;
    let branches = subs
        .into_iter()
        .map(|bs| {
            bs.into_iter()
                .map(|s| {
                    let x = s.features::<f32>(g);
                    (s, x)
                })
                .collect()
        })
        .collect();
    Ok(PreparedSplit {
        tag,
        labels: targets.iter().map(|&t| labels[t as usize]).collect(),
        targets,
        branches,
    })
}

/// Mean loss and accuracy of eval-mode inference over a prepared split.
pub fn evaluate_prepared(data: &PreparedSplit, cfg: &ModelConfig, params: &ParamSet<f32>) -> Result<(f64, f64), ModelError> {
    if data.is_empty() {
        return Err(ModelError::EmptySplit(data.tag));
    }
    let per: Vec<Result<(f64, bool), ModelError>> = (0..data.len())
        .into_par_iter()
        .map(|i| {
            let (logits, _) = model_forward(&data.inputs(i), cfg, params, None)?;
            let y = data.labels[i] as usize;
            let (loss, _) = cross_entropy(&logits, y);
            let pred = argmax(logits.as_slice().expect("contiguous"));
            Ok((loss as f64, pred == y))
        })
        .collect();
    let mut loss = 0.0;
    let mut hits = 0usize;
    for r in per {
        let (l, hit) = r?;
        loss += l;
        hits += hit as usize;
    }
    let n = data.len() as f64;
    Ok((loss / n, hits as f64 / n))
}

/// Index of the largest entry; the first one on ties.
pub(crate) fn argmax(z: &[f32]) -> usize {
    let mut best = 0;
    for (i, &v) in z.iter().enumerate() {
        if v > z[best] {
            best = i;
        }
    }
    best
}

/// Accuracy on the nodes of `split`.
pub fn evaluate(
    g: &GraphBundle,
    cfg: &ModelConfig,
    params: &ParamSet<f32>,
    extract: &ExtractConfig,
    split: SplitTag,
) -> Result<f64, ModelError> {
    let data = prepare_split(g, split, cfg, extract)?;
    Ok(evaluate_prepared(&data, cfg, params)?.1)
}

fn epoch_rng(seed: u64, epoch: usize, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (epoch as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    rng.set_stream(stream);
    rng
}

/// Minibatch training with Adam and validation-based early stopping.
///
/// Subgraphs are extracted once up front. Per-target dropout streams depend
/// only on `(seed, epoch, target)`, and batch gradients are summed in target
/// order, so the run is reproducible regardless of thread count.
pub fn train(
    g: &GraphBundle,
    cfg: &ModelConfig,
    extract: &ExtractConfig,
    hyper: &TrainConfig,
) -> Result<TrainReport, ModelError> {
    cfg.validate()?;
    extract.validate()?;
    if hyper.batch_size == 0 {
        return Err(ModelError::Config("batch_size must be at least 1".into()));
    }
    if cfg.arch == super::Arch::Gat {
        return Err(ModelError::Unsupported("GAT is forward-only and cannot be trained".into()));
    }
    let mut params = ParamSet::<f32>::init(cfg, hyper.seed);
    if hyper.epochs == 0 {
        return Ok(TrainReport {
            params,
            history: Vec::new(),
            best_epoch: 0,
        });
    }
    let splits: Vec<PreparedSplit> = [SplitTag::Train, SplitTag::Val, SplitTag::Test]
        .into_iter()
        .map(|t| prepare_split(g, t, cfg, extract))
        .collect::<Result<_, _>>()?;
    let train = &splits[0];
    if train.is_empty() {
        return Err(ModelError::EmptySplit(SplitTag::Train));
    }

    let adam = AdamConfig::new(hyper.lr);
    let mut state = AdamState::new(&params);
    let mut history = Vec::new();
    let mut best = (f64::NEG_INFINITY, 0usize, params.clone());
    let mut order: Vec<usize> = (0..train.len()).collect();
    for epoch in 1..=hyper.epochs {
        order.shuffle(&mut epoch_rng(hyper.seed, epoch, u64::MAX));
        let mut train_loss = 0.0;
        for batch in order.chunks(hyper.batch_size) {
            let per: Vec<Result<(f64, ParamSet<f32>), ModelError>> = batch
                .par_iter()
                .map(|&i| {
                    let mut rng = epoch_rng(hyper.seed, epoch, train.targets[i] as u64);
                    let (_, tape) = model_forward(&train.inputs(i), cfg, &params, Some(&mut rng))?;
                    let (loss, d) = cross_entropy(&tape.logits, train.labels[i] as usize);
                    let mut grads = params.zeros_like();
                    backward(&tape, cfg, &params, &d, &mut grads)?;
                    Ok((loss as f64, grads))
                })
                .collect();
            let mut sum = params.zeros_like();
            let scale = 1.0 / batch.len() as f32;
            for r in per {
                let (l, gr) = r?;
                train_loss += l;
                sum.add_scaled(scale, &gr);
            }
            adam_step(&mut params, &sum, &mut state, &adam);
        }
        if !params.is_finite() {
            return Err(ModelError::NonFinite);
        }
        let (_, train_acc) = evaluate_prepared(train, cfg, &params)?;
        history.push(EpochMetrics {
            epoch,
            split: "train".into(),
            loss: train_loss / train.len() as f64,
            accuracy: train_acc,
        });
        let mut val_acc = None;
        for data in &splits[1..] {
            if data.is_empty() {
                continue;
            }
            let (loss, acc) = evaluate_prepared(data, cfg, &params)?;
            if data.tag == SplitTag::Val {
                val_acc = Some(acc);
            }
            history.push(EpochMetrics {
                epoch,
                split: split_name(data.tag).into(),
                loss,
                accuracy: acc,
            });
        }
        // Without a validation split, the latest epoch counts as best.
        let score = val_acc.unwrap_or(f64::INFINITY);
        if score > best.0 || val_acc.is_none() {
            best = (score, epoch, params.clone());
        } else if hyper.patience.is_some_and(|p| epoch - best.1 >= p) {
            log::info!("early stop at epoch {epoch}; best validation epoch {}", best.1);
            break;
        }
    }
    Ok(TrainReport {
        params: best.2,
        history,
        best_epoch: best.1,
    })
}

/// Writes `epoch,split,loss,accuracy` rows.
pub fn write_metrics_csv<W: Write>(out: W, history: &[EpochMetrics]) -> Result<(), ModelError> {
    let mut w = csv::Writer::from_writer(out);
    for m in history {
        w.serialize(m)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extract::ExtractMethod;
    use crate::fixtures::{sbm, SbmParams};
    use crate::model::Arch;

    #[test]
    fn zero_epochs_return_initial_params() {
        let g = sbm(&SbmParams::small_test(), 0);
        let cfg = ModelConfig::new(Arch::Gcn, 4, 2, 2, 8);
        let r = train(&g, &cfg, &ExtractConfig::new(ExtractMethod::ppr(8), 0), &TrainConfig::new(0, 3)).unwrap();
        assert_eq!(r.params, ParamSet::init(&cfg, 3));
        assert!(r.history.is_empty());
    }

    #[test]
    fn metrics_csv_has_header() {
        let mut buf = Vec::new();
        write_metrics_csv(
            &mut buf,
            &[EpochMetrics {
                epoch: 1,
                split: "val".into(),
                loss: 0.5,
                accuracy: 0.75,
            }],
        )
        .unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "epoch,split,loss,accuracy\n1,val,0.5,0.75\n");
    }
}
