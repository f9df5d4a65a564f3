//! Per-command run configurations. Each can come from a TOML file; command
//! line flags override individual fields, and the merged result is written
//! next to the command's outputs.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use scopegnn_core::extract::ExtractMethod;
use scopegnn_core::model::{Activation, Arch, Pooling};
use scopegnn_core::SplitTag;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

pub fn load<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
            toml::from_str(&text).with_context(|| format!("invalid config {}", p.display()))
        }
    }
}

/// Writes `cfg` as `<dir>/<command>_config.toml`.
pub fn persist<T: Serialize>(cfg: &T, dir: &Path, command: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(format!("{command}_config.toml"));
    fs::write(&path, toml::to_string_pretty(cfg)?).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

pub fn require<'a, T>(value: &'a Option<T>, name: &str) -> Result<&'a T> {
    match value {
        Some(v) => Ok(v),
        None => bail!("missing required setting `{name}` (pass --{} or set it in the config file)", name.replace('_', "-")),
    }
}

pub fn parse_split(name: &str) -> Result<SplitTag> {
    Ok(match name {
        "train" => SplitTag::Train,
        "val" => SplitTag::Val,
        "test" => SplitTag::Test,
        other => bail!("unknown split {other:?}; expected train, val or test"),
    })
}

fn default_extract() -> ExtractMethod {
    ExtractMethod::ppr(32)
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConvertConfig {
    /// Existing bundle or TSV directory.
    pub input: Option<PathBuf>,
    pub edges: Option<PathBuf>,
    pub feats: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub split: Option<PathBuf>,
    pub num_nodes: Option<usize>,
    pub out_dir: Option<PathBuf>,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExtractRun {
    pub graph: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub seed: u64,
    pub extract: ExtractMethod,
    /// Restrict to one split; every node otherwise.
    pub split: Option<String>,
}

impl Default for ExtractRun {
    fn default() -> Self {
        Self {
            graph: None,
            out_dir: None,
            seed: 0,
            extract: default_extract(),
            split: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSpec {
    pub arch: Arch,
    pub layers: usize,
    pub hidden: usize,
    pub heads: usize,
    pub pooling: Pooling,
    pub jk_concat: bool,
    pub dropout: f64,
    pub dropedge: f64,
    pub activation: Activation,
}

impl Default for ModelSpec {
    fn default() -> Self {
        Self {
            arch: Arch::Gcn,
            layers: 3,
            hidden: 64,
            heads: 1,
            pooling: Pooling::Center,
            jk_concat: false,
            dropout: 0.1,
            dropedge: 0.0,
            activation: Activation::Relu,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainSpec {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub patience: Option<usize>,
}

impl Default for TrainSpec {
    fn default() -> Self {
        Self {
            epochs: 100,
            batch_size: 64,
            lr: 0.005,
            patience: Some(20),
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainRun {
    pub graph: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub seed: u64,
    pub extract: Option<ExtractMethod>,
    pub model: ModelSpec,
    pub train: TrainSpec,
}

impl TrainRun {
    pub fn extract_method(&self) -> ExtractMethod {
        self.extract.clone().unwrap_or_else(default_extract)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalRun {
    pub graph: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub seed: u64,
    /// Defaults to the extractor recorded next to the checkpoint.
    pub extract: Option<ExtractMethod>,
    pub split: String,
}

impl Default for EvalRun {
    fn default() -> Self {
        Self {
            graph: None,
            checkpoint: None,
            out_dir: None,
            seed: 0,
            extract: None,
            split: "test".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum RegimeArg {
    Normal,
    Shadow,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CostRun {
    pub graph: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub seed: u64,
    pub arch: Arch,
    pub layers: usize,
    pub dim: u64,
    /// Head width; the graph's class count when it has labels, else 2.
    pub classes: Option<u64>,
    pub regime: RegimeArg,
    /// `hop:<L>` for breadth-first scopes, or a subgraph cache path.
    pub scope_from: Option<String>,
    /// Per-node neighbour budget for `hop` scopes.
    pub budget: Option<usize>,
    /// Subgraph size when shadow scopes are extracted on the fly.
    pub top_k: usize,
    /// Targets sampled from the graph.
    pub max_targets: usize,
}

impl Default for CostRun {
    fn default() -> Self {
        Self {
            graph: None,
            out_dir: None,
            seed: 0,
            arch: Arch::Gcn,
            layers: 3,
            dim: 256,
            classes: None,
            regime: RegimeArg::Shadow,
            scope_from: None,
            budget: None,
            top_k: 200,
            max_targets: 1000,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyRun {
    pub full: bool,
    pub out_dir: Option<PathBuf>,
    pub seed: u64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<TrainRun>("epochs = 3").is_err());
        assert!(toml::from_str::<TrainRun>("[train]\nepoch = 3").is_err());
        let ok: TrainRun = toml::from_str("seed = 4\n[train]\nepochs = 3").unwrap();
        assert_eq!((ok.seed, ok.train.epochs), (4, 3));
    }

    #[test]
    fn extract_method_round_trips() {
        let run = TrainRun {
            extract: Some(ExtractMethod::Ensemble {
                members: vec![ExtractMethod::ppr(8), ExtractMethod::khop(2, Some(5))],
            }),
            ..TrainRun::default()
        };
        let text = toml::to_string_pretty(&run).unwrap();
        let back: TrainRun = toml::from_str(&text).unwrap();
        assert_eq!(back.extract, run.extract);
    }
}
