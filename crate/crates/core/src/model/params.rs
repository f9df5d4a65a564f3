use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Arch, ModelConfig, Pooling};
use crate::real::Real;

/// `x · w + b`, with `b` stored as a `1 × out` row.
#[derive(Debug, Clone, PartialEq)]
pub struct Linear<F> {
    pub w: Array2<F>,
    pub b: Array2<F>,
}

/// Two linear maps with the activation in between.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp2<F> {
    pub l1: Linear<F>,
    pub l2: Linear<F>,
}

#[derive(Debug, Clone, PartialEq)]
#[allow(clippy::large_enum_variant)]
pub enum LayerParams<F> {
    Gcn(Linear<F>),
    Sage {
        w1: Array2<F>,
        w2: Array2<F>,
        b: Array2<F>,
    },
    /// `f1` updates from `[h_v ∥ Σ_u f2([h_v ∥ h_u])]`.
    Gin { f1: Mlp2<F>, f2: Mlp2<F> },
    Gat {
        w: Array2<F>,
        /// One row per head.
        a_src: Array2<F>,
        a_dst: Array2<F>,
        b: Array2<F>,
    },
    Sgc,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer<F> {
    pub params: LayerParams<F>,
    /// `1 × 1` negative slope when the activation is PReLU.
    pub slope: Option<Array2<F>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BranchParams<F> {
    pub layers: Vec<Layer<F>>,
    pub sort: Option<Linear<F>>,
    /// Maps `[pooled ∥ target row]` to class logits.
    pub head: Linear<F>,
}

/// Branch weighting of the subgraph ensemble: `w_i = tanh(y_i A_i + c_i) · q`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleParams<F> {
    pub mlps: Vec<Linear<F>>,
    /// `1 × num_classes`
    pub q: Array2<F>,
}

/// Every trainable tensor of a model. Gradients use the same type.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSet<F> {
    pub branches: Vec<BranchParams<F>>,
    pub ensemble: Option<EnsembleParams<F>>,
}

#[derive(Clone, Copy)]
enum Init {
    Glorot,
    Zero,
    Slope,
}

const PRELU_INIT: f64 = 0.25;

fn build<F: Real>(cfg: &ModelConfig, make: &mut dyn FnMut(usize, usize, Init) -> Array2<F>) -> ParamSet<F> {
    let h = cfg.hidden_dim;
    let e = cfg.embedding_dim();
    let c = cfg.num_classes;
    let lin = |i: usize, o: usize, make: &mut dyn FnMut(usize, usize, Init) -> Array2<F>| Linear {
        w: make(i, o, Init::Glorot),
        b: make(1, o, Init::Zero),
    };
    let mut branches = Vec::with_capacity(cfg.ensemble_branches);
    for _ in 0..cfg.ensemble_branches {
        let mut layers = Vec::new();
        if cfg.arch != Arch::Sgc {
            for l in 0..cfg.num_layers {
                let d_in = cfg.layer_in_dim(l);
                let params = match cfg.arch {
                    Arch::Gcn => LayerParams::Gcn(lin(d_in, h, make)),
                    Arch::Sage => LayerParams::Sage {
                        w1: make(d_in, h, Init::Glorot),
                        w2: make(d_in, h, Init::Glorot),
                        b: make(1, h, Init::Zero),
                    },
                    Arch::Gin => LayerParams::Gin {
                        f2: Mlp2 {
                            l1: lin(2 * d_in, h, make),
                            l2: lin(h, h, make),
                        },
                        f1: Mlp2 {
                            l1: lin(d_in + h, h, make),
                            l2: lin(h, h, make),
                        },
                    },
                    Arch::Gat => LayerParams::Gat {
                        w: make(d_in, h, Init::Glorot),
                        a_src: make(cfg.num_heads, h / cfg.num_heads, Init::Glorot),
                        a_dst: make(cfg.num_heads, h / cfg.num_heads, Init::Glorot),
                        b: make(1, h, Init::Zero),
                    },
                    Arch::Sgc => unreachable!(),
                };
                let slope = (cfg.activation == super::Activation::Prelu).then(|| make(1, 1, Init::Slope));
                layers.push(Layer { params, slope });
            }
        }
        let sort = match cfg.pooling {
            Pooling::Sort { s } => Some(lin(s * e, e, make)),
            _ => None,
        };
        let head = lin(2 * e, c, make);
        branches.push(BranchParams { layers, sort, head });
    }
    let ensemble = (cfg.ensemble_branches > 1).then(|| EnsembleParams {
        mlps: (0..cfg.ensemble_branches).map(|_| lin(c, c, make)).collect(),
        q: make(1, c, Init::Glorot),
    });
    ParamSet { branches, ensemble }
}

impl<F: Real> ParamSet<F> {
    /// Glorot-uniform weights, zero biases, PReLU slopes at 0.25.
    pub fn init(cfg: &ModelConfig, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        build(cfg, &mut |r, c, init| match init {
            Init::Zero => Array2::zeros((r, c)),
            Init::Slope => Array2::from_elem((r, c), F::from_f64_lossy(PRELU_INIT)),
            Init::Glorot => {
                let bound = (6.0 / (r + c) as f64).sqrt();
                Array2::from_shape_simple_fn((r, c), || F::from_f64_lossy(rng.random_range(-bound..=bound)))
            }
        })
    }

    pub fn zeros(cfg: &ModelConfig) -> Self {
        build(cfg, &mut |r, c, _| Array2::zeros((r, c)))
    }

    pub fn zeros_like(&self) -> Self {
        let mut out = self.clone();
        for t in out.tensors_mut() {
            t.fill(F::zero());
        }
        out
    }

    /// Every tensor in a fixed order (branches, then layers, then pooling and
    /// head, then the ensemble).
    pub fn tensors(&self) -> Vec<&Array2<F>> {
        let mut out = Vec::new();
        for br in &self.branches {
            for layer in &br.layers {
                match &layer.params {
                    LayerParams::Gcn(l) => out.extend([&l.w, &l.b]),
                    LayerParams::Sage { w1, w2, b } => out.extend([w1, w2, b]),
                    LayerParams::Gin { f1, f2 } => {
                        out.extend([&f2.l1.w, &f2.l1.b, &f2.l2.w, &f2.l2.b]);
                        out.extend([&f1.l1.w, &f1.l1.b, &f1.l2.w, &f1.l2.b]);
                    }
                    LayerParams::Gat { w, a_src, a_dst, b } => out.extend([w, a_src, a_dst, b]),
                    LayerParams::Sgc => {}
                }
                out.extend(layer.slope.as_ref());
            }
            if let Some(s) = &br.sort {
                out.extend([&s.w, &s.b]);
            }
            out.extend([&br.head.w, &br.head.b]);
        }
        if let Some(e) = &self.ensemble {
            for m in &e.mlps {
                out.extend([&m.w, &m.b]);
            }
            out.push(&e.q);
        }
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Array2<F>> {
        let mut out = Vec::new();
        for br in &mut self.branches {
            for layer in &mut br.layers {
                match &mut layer.params {
                    LayerParams::Gcn(l) => out.extend([&mut l.w, &mut l.b]),
                    LayerParams::Sage { w1, w2, b } => out.extend([w1, w2, b]),
                    LayerParams::Gin { f1, f2 } => {
                        out.extend([&mut f2.l1.w, &mut f2.l1.b, &mut f2.l2.w, &mut f2.l2.b]);
                        out.extend([&mut f1.l1.w, &mut f1.l1.b, &mut f1.l2.w, &mut f1.l2.b]);
                    }
                    LayerParams::Gat { w, a_src, a_dst, b } => out.extend([w, a_src, a_dst, b]),
                    LayerParams::Sgc => {}
                }
                out.extend(layer.slope.as_mut());
            }
            if let Some(s) = &mut br.sort {
                out.extend([&mut s.w, &mut s.b]);
            }
            out.extend([&mut br.head.w, &mut br.head.b]);
        }
        if let Some(e) = &mut self.ensemble {
            for m in &mut e.mlps {
                out.extend([&mut m.w, &mut m.b]);
            }
            out.push(&mut e.q);
        }
        out
    }

    pub fn num_scalars(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|x| x.is_finite()))
    }

    /// Elementwise `self += k · other`.
    pub fn add_scaled(&mut self, k: F, other: &Self) {
        for (a, b) in self.tensors_mut().into_iter().zip(other.tensors()) {
            a.scaled_add(k, b);
        }
    }

    pub fn cast<G: Real>(&self) -> ParamSet<G> {
        let mut out: ParamSet<G> = self.map_structure();
        for (dst, src) in out.tensors_mut().into_iter().zip(self.tensors()) {
            *dst = src.mapv(|x| G::from_f64_lossy(x.to_f64_lossy()));
        }
        out
    }

    fn map_structure<G: Real>(&self) -> ParamSet<G> {
        let z = |a: &Array2<F>| Array2::<G>::zeros(a.dim());
        let zl = |l: &Linear<F>| Linear { w: z(&l.w), b: z(&l.b) };
        ParamSet {
            branches: self
                .branches
                .iter()
                .map(|br| BranchParams {
                    layers: br
                        .layers
                        .iter()
                        .map(|layer| Layer {
                            params: match &layer.params {
                                LayerParams::Gcn(l) => LayerParams::Gcn(zl(l)),
                                LayerParams::Sage { w1, w2, b } => LayerParams::Sage {
                                    w1: z(w1),
                                    w2: z(w2),
                                    b: z(b),
                                },
                                LayerParams::Gin { f1, f2 } => LayerParams::Gin {
                                    f1: Mlp2 { l1: zl(&f1.l1), l2: zl(&f1.l2) },
                                    f2: Mlp2 { l1: zl(&f2.l1), l2: zl(&f2.l2) },
                                },
                                LayerParams::Gat { w, a_src, a_dst, b } => LayerParams::Gat {
                                    w: z(w),
                                    a_src: z(a_src),
                                    a_dst: z(a_dst),
                                    b: z(b),
                                },
                                LayerParams::Sgc => LayerParams::Sgc,
                            },
                            slope: layer.slope.as_ref().map(z),
                        })
                        .collect(),
                    sort: br.sort.as_ref().map(zl),
                    head: zl(&br.head),
                })
                .collect(),
            ensemble: self.ensemble.as_ref().map(|e| EnsembleParams {
                mlps: e.mlps.iter().map(zl).collect(),
                q: z(&e.q),
            }),
        }
    }
}
