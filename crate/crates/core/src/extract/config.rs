use serde::{Deserialize, Serialize};

use super::ExtractError;

pub const DEFAULT_ALPHA: f64 = 0.15;
pub const DEFAULT_EPSILON: f64 = 1e-4;

/// One extraction strategy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "lowercase", deny_unknown_fields)]
pub enum ExtractMethod {
    /// Level-by-level expansion up to `depth` hops; nodes with more than
    /// `budget` neighbours contribute a uniform sample of `budget` of them.
    KHop {
        depth: usize,
        #[serde(default)]
        budget: Option<usize>,
    },
    /// Approximate personalised PageRank, then top-`top_k` (or every node above
    /// `threshold`, at most `cap`).
    Ppr {
        top_k: usize,
        #[serde(default)]
        threshold: Option<f64>,
        #[serde(default = "default_cap")]
        cap: usize,
        #[serde(default = "default_alpha")]
        alpha: f64,
        #[serde(default = "default_epsilon")]
        epsilon: f64,
    },
    /// Several extractors whose subgraphs feed separate model branches.
    Ensemble { members: Vec<ExtractMethod> },
}

fn default_cap() -> usize {
    200
}
fn default_alpha() -> f64 {
    DEFAULT_ALPHA
}
fn default_epsilon() -> f64 {
    DEFAULT_EPSILON
}

impl ExtractMethod {
    pub fn ppr(top_k: usize) -> Self {
        ExtractMethod::Ppr {
            top_k,
            threshold: None,
            cap: top_k,
            alpha: DEFAULT_ALPHA,
            epsilon: DEFAULT_EPSILON,
        }
    }

    pub fn khop(depth: usize, budget: Option<usize>) -> Self {
        ExtractMethod::KHop { depth, budget }
    }

    pub fn validate(&self) -> Result<(), ExtractError> {
        let bad = |m: String| Err(ExtractError::InvalidConfig(m));
        match self {
            ExtractMethod::KHop { depth, budget } => {
                if *depth < 1 {
                    return bad("k-hop depth must be at least 1".into());
                }
                if *budget == Some(0) {
                    return bad("k-hop budget must be at least 1".into());
                }
            }
            ExtractMethod::Ppr {
                top_k,
                threshold,
                cap,
                alpha,
                epsilon,
            } => {
                if !(*alpha > 0.0 && *alpha < 1.0) {
                    return bad(format!("alpha must lie in (0, 1), got {alpha}"));
                }
                if epsilon.is_nan() || *epsilon <= 0.0 {
                    return bad(format!("epsilon must be positive, got {epsilon}"));
                }
                if *top_k < 1 {
                    return bad("top_k must be at least 1".into());
                }
                if *cap < 1 {
                    return bad("cap must be at least 1".into());
                }
                if let Some(t) = threshold {
                    if !t.is_finite() {
                        return bad("threshold must be finite".into());
                    }
                }
            }
            ExtractMethod::Ensemble { members } => {
                if members.is_empty() {
                    return bad("ensemble needs at least one member".into());
                }
                for m in members {
                    if matches!(m, ExtractMethod::Ensemble { .. }) {
                        return bad("ensembles cannot be nested".into());
                    }
                    m.validate()?;
                }
            }
        }
        Ok(())
    }

    /// The single-method branches: the members of an ensemble, or `self`.
    pub fn branches(&self) -> &[ExtractMethod] {
        match self {
            ExtractMethod::Ensemble { members } => members,
            other => std::slice::from_ref(other),
        }
    }

    /// Upper bound on the node count of any subgraph this method returns.
    pub fn size_bound(&self) -> Option<usize> {
        match self {
            ExtractMethod::Ppr { top_k, threshold, cap, .. } => Some(match threshold {
                Some(_) => *cap,
                None => *top_k,
            }),
            ExtractMethod::KHop { .. } => None,
            ExtractMethod::Ensemble { members } => {
                members.iter().map(|m| m.size_bound()).try_fold(0, |acc, b| b.map(|b| acc.max(b)))
            }
        }
    }
}

/// Extraction method plus the seed that drives its randomness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtractConfig {
    pub method: ExtractMethod,
    #[serde(default)]
    pub seed: u64,
}

impl ExtractConfig {
    pub fn new(method: ExtractMethod, seed: u64) -> Self {
        Self { method, seed }
    }

    pub fn validate(&self) -> Result<(), ExtractError> {
        self.method.validate()
    }

    pub fn num_branches(&self) -> usize {
        self.method.branches().len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn invalid_configs() {
        assert!(ExtractMethod::khop(0, None).validate().is_err());
        assert!(ExtractMethod::khop(1, Some(0)).validate().is_err());
        let mut p = ExtractMethod::ppr(4);
        if let ExtractMethod::Ppr { alpha, .. } = &mut p {
            *alpha = 1.0;
        }
        assert!(p.validate().is_err());
        assert!(ExtractMethod::Ensemble { members: vec![] }.validate().is_err());
        assert!(ExtractMethod::ppr(4).validate().is_ok());
    }

    #[test]
    fn ppr_defaults_fill_in() {
        let m: ExtractMethod = serde_json::from_str(r#"{"method":"ppr","top_k":8}"#).unwrap();
        assert_eq!(
            m,
            ExtractMethod::Ppr {
                top_k: 8,
                threshold: None,
                cap: 200,
                alpha: 0.15,
                epsilon: 1e-4
            }
        );
    }
}
