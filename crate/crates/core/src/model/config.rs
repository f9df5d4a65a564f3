use serde::{Deserialize, Serialize};

use super::ModelError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Arch {
    Gcn,
    Sage,
    /// Forward pass only.
    Gat,
    Gin,
    /// Parameter-free propagation (`num_layers` rounds of the symmetric
    /// operator) followed by the trainable head.
    Sgc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Pooling {
    Center,
    Sum,
    Mean,
    Max,
    /// Rows sorted by their last channel, top `s` kept and flattened through a
    /// linear layer. Subgraphs smaller than `s` are padded.
    Sort {
        #[serde(default = "default_sort_k")]
        s: usize,
    },
}

fn default_sort_k() -> usize {
    10
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Identity,
    Relu,
    Elu,
    /// Leaky ReLU with a learnable negative slope per layer.
    Prelu,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub arch: Arch,
    pub in_dim: usize,
    pub num_classes: usize,
    pub num_layers: usize,
    pub hidden_dim: usize,
    #[serde(default = "one")]
    pub num_heads: usize,
    #[serde(default = "default_pooling")]
    pub pooling: Pooling,
    #[serde(default)]
    pub jk_concat: bool,
    #[serde(default = "one")]
    pub ensemble_branches: usize,
    #[serde(default)]
    pub dropout: f64,
    #[serde(default)]
    pub dropedge: f64,
    #[serde(default = "default_activation")]
    pub activation: Activation,
}

fn one() -> usize {
    1
}
fn default_pooling() -> Pooling {
    Pooling::Center
}
fn default_activation() -> Activation {
    Activation::Relu
}

impl ModelConfig {
    pub fn new(arch: Arch, in_dim: usize, num_classes: usize, num_layers: usize, hidden_dim: usize) -> Self {
        Self {
            arch,
            in_dim,
            num_classes,
            num_layers,
            hidden_dim,
            num_heads: 1,
            pooling: Pooling::Center,
            jk_concat: false,
            ensemble_branches: 1,
            dropout: 0.0,
            dropedge: 0.0,
            activation: Activation::Relu,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |m: &str| Err(ModelError::Config(m.to_string()));
        if self.num_layers < 1 && self.arch != Arch::Sgc {
            return bad("num_layers must be at least 1");
        }
        if self.hidden_dim < 1 || self.in_dim < 1 {
            return bad("in_dim and hidden_dim must be at least 1");
        }
        if self.num_classes < 1 {
            return bad("num_classes must be at least 1");
        }
        if self.num_heads < 1 || !self.hidden_dim.is_multiple_of(self.num_heads) {
            return bad("num_heads must divide hidden_dim");
        }
        if self.ensemble_branches < 1 {
            return bad("ensemble_branches must be at least 1");
        }
        if !(0.0..=1.0).contains(&self.dropout) || !(0.0..=1.0).contains(&self.dropedge) {
            return bad("dropout and dropedge must lie in [0, 1]");
        }
        if let Pooling::Sort { s: 0 } = self.pooling {
            return bad("sort pooling needs s >= 1");
        }
        Ok(())
    }

    /// Input width of layer `l` (0-based).
    pub fn layer_in_dim(&self, l: usize) -> usize {
        if l == 0 {
            self.in_dim
        } else {
            self.hidden_dim
        }
    }

    /// Width of the per-node embedding handed to the readout.
    pub fn embedding_dim(&self) -> usize {
        match self.arch {
            Arch::Sgc => self.in_dim,
            _ if self.jk_concat => self.num_layers * self.hidden_dim,
            _ => self.hidden_dim,
        }
    }
}
