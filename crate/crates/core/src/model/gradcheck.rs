//! Central finite-difference check of the analytic gradients.

use super::forward::{cross_entropy, loss_and_grad, model_forward, BranchInput};
use super::{ModelConfig, ModelError, ParamSet};

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub checked: usize,
    pub max_rel_error: f64,
    /// `(tensor index, flat entry)` of the worst entry.
    pub worst: (usize, usize),
}

/// Relative error `|a - n| / max(|a|, |n|, floor)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    const FLOOR: f64 = 1e-7;
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(FLOOR)
}

fn batch_loss(batch: &[Vec<BranchInput<'_, f64>>], labels: &[u32], cfg: &ModelConfig, p: &ParamSet<f64>) -> Result<f64, ModelError> {
    let mut total = 0.0;
    for (inputs, &y) in batch.iter().zip(labels) {
        let (logits, _) = model_forward(inputs, cfg, p, None)?;
        total += cross_entropy(&logits, y as usize).0;
    }
    Ok(total / batch.len() as f64)
}

/// Compares every parameter's analytic gradient of the mean batch loss with
/// `(L(p + h) - L(p - h)) / 2h`.
pub fn check_gradients(
    batch: &[Vec<BranchInput<'_, f64>>],
    labels: &[u32],
    cfg: &ModelConfig,
    params: &ParamSet<f64>,
    h: f64,
) -> Result<GradCheckReport, ModelError> {
    let mut tapes = Vec::with_capacity(batch.len());
    for inputs in batch {
        tapes.push(model_forward(inputs, cfg, params, None)?.1);
    }
    let (_, grads) = loss_and_grad(&tapes, labels, cfg, params)?;
    let analytic: Vec<Vec<f64>> = grads.tensors().iter().map(|t| t.iter().copied().collect()).collect();
    let mut probe = params.clone();
    let mut report = GradCheckReport {
        checked: 0,
        max_rel_error: 0.0,
        worst: (0, 0),
    };
    for (ti, a) in analytic.iter().enumerate() {
        for (k, &ga) in a.iter().enumerate() {
            let orig = params.tensors()[ti].as_slice().expect("contiguous")[k];
            let set = |v: f64, probe: &mut ParamSet<f64>| {
                probe.tensors_mut()[ti].as_slice_mut().expect("contiguous")[k] = v;
            };
            set(orig + h, &mut probe);
            let up = batch_loss(batch, labels, cfg, &probe)?;
            set(orig - h, &mut probe);
            let down = batch_loss(batch, labels, cfg, &probe)?;
            set(orig, &mut probe);
            let err = relative_error(ga, (up - down) / (2.0 * h));
            report.checked += 1;
            if err > report.max_rel_error {
                report.max_rel_error = err;
                report.worst = (ti, k);
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::graph::{induced_subgraph, Subgraph};
    use crate::model::{Activation, Arch, Pooling};
    use ndarray::Array2;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn feats(s: &Subgraph, d: usize, seed: u64) -> Array2<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Array2::from_shape_simple_fn((s.num_nodes(), d), || StandardNormal.sample(&mut rng))
    }

    #[test]
    fn every_option_combination() {
        let g = fixtures::karate();
        let a = induced_subgraph(&g, &[0, 1, 2, 3, 13], 0).unwrap();
        let b = induced_subgraph(&g, &[0, 4, 5, 6, 10, 16], 0).unwrap();
        let (xa, xb) = (feats(&a, 3, 1), feats(&b, 3, 2));
        let poolings = [Pooling::Center, Pooling::Sum, Pooling::Mean, Pooling::Max, Pooling::Sort { s: 3 }];
        for arch in [Arch::Gcn, Arch::Sage, Arch::Gin, Arch::Sgc] {
            for (pi, &pooling) in poolings.iter().enumerate() {
                let mut cfg = ModelConfig::new(arch, 3, 3, 2, 4);
                cfg.pooling = pooling;
                // GIN's inner ReLU (under PReLU) has kinks at exactly zero
                // pre-activations, where central differences are meaningless.
                cfg.activation = match (arch, pi % 3) {
                    (_, 0) | (Arch::Gin, 1) => Activation::Elu,
                    (_, 1) => Activation::Prelu,
                    _ => Activation::Identity,
                };
                cfg.jk_concat = pi % 2 == 1;
                cfg.ensemble_branches = 2;
                let p = ParamSet::init(&cfg, 7 + pi as u64);
                let batch = vec![
                    vec![BranchInput::new(&a, &xa), BranchInput::new(&b, &xb)],
                    vec![BranchInput::new(&b, &xb), BranchInput::new(&a, &xa)],
                ];
                let r = check_gradients(&batch, &[1, 2], &cfg, &p, 1e-5).unwrap();
                assert!(r.max_rel_error < 1e-4, "{arch:?} {pooling:?}: {r:?}");
            }
        }
    }
}
