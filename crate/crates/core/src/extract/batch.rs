use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{extract_khop, extract_ppr, ExtractConfig, ExtractError, ExtractMethod};
use crate::graph::{GraphBundle, Subgraph};

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Random stream owned by one `(seed, branch, target)` triple.
///
/// Streams never depend on scheduling, so parallel and serial extraction
/// agree exactly.
pub fn target_rng(seed: u64, branch: usize, target: u32) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(seed ^ splitmix64(branch as u64)));
    rng.set_stream(target as u64);
    rng
}

/// Runs one non-ensemble method for target `v`.
pub fn extract_one(
    g: &GraphBundle,
    v: u32,
    method: &ExtractMethod,
    rng: &mut ChaCha8Rng,
) -> Result<Subgraph, ExtractError> {
    match method {
        ExtractMethod::KHop { depth, budget } => extract_khop(g, v, *depth, *budget, rng),
        ExtractMethod::Ppr { .. } => extract_ppr(g, v, method),
        ExtractMethod::Ensemble { .. } => Err(ExtractError::InvalidConfig(
            "extract_one takes a single method, not an ensemble".into(),
        )),
    }
}

fn extract_branches(g: &GraphBundle, v: u32, cfg: &ExtractConfig) -> Result<Vec<Subgraph>, ExtractError> {
    cfg.method
        .branches()
        .iter()
        .enumerate()
        .map(|(b, m)| extract_one(g, v, m, &mut target_rng(cfg.seed, b, v)))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| ExtractError::Target {
            target: v,
            source: Box::new(e),
        })
}

/// Every branch subgraph for every target: `out[i][b]` is target `i`, branch `b`.
pub fn extract_ensemble_batch(
    g: &GraphBundle,
    targets: &[u32],
    cfg: &ExtractConfig,
) -> Result<Vec<Vec<Subgraph>>, ExtractError> {
    cfg.validate()?;
    let results: Vec<Result<Vec<Subgraph>, ExtractError>> =
        targets.par_iter().map(|&v| extract_branches(g, v, cfg)).collect();
    // First failure in target order, independent of which worker hit it first.
    results.into_iter().collect()
}

/// One subgraph per target for a single-method configuration.
pub fn extract_batch(g: &GraphBundle, targets: &[u32], cfg: &ExtractConfig) -> Result<Vec<Subgraph>, ExtractError> {
    if cfg.num_branches() != 1 {
        return Err(ExtractError::InvalidConfig(
            "ensemble configurations yield several subgraphs per target; use extract_ensemble_batch".into(),
        ));
    }
    Ok(extract_ensemble_batch(g, targets, cfg)?
        .into_iter()
        .map(|mut b| b.pop().expect("one branch"))
        .collect())
}
