use ndarray::{concatenate, s, Array1, Array2, Axis};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::layers::{inner_act, layer_backward, layer_forward, propagate, softmax, Act, LayerCache};
use super::params::{BranchParams, ParamSet};
use super::readout::{ensemble_backward, ensemble_forward, readout_backward, readout_forward, EnsembleCache, ReadoutCache};
use super::{Arch, ModelConfig, ModelError};
use crate::extract::dropedge;
use crate::graph::{normalize, NormAdj, NormKind, Subgraph};
use crate::real::Real;

/// One branch's subgraph with its feature rows in local order.
#[derive(Debug, Clone, Copy)]
pub struct BranchInput<'a, F> {
    pub sub: &'a Subgraph,
    pub x: &'a Array2<F>,
}

impl<'a, F> BranchInput<'a, F> {
    pub fn new(sub: &'a Subgraph, x: &'a Array2<F>) -> Self {
        Self { sub, x }
    }
}

/// Forward intermediates of one branch.
#[derive(Debug, Clone)]
pub struct BranchTape<F> {
    /// The subgraph actually propagated over (after DropEdge in training).
    pub sub: Subgraph,
    /// Feature rows of `sub`.
    pub h0: Array2<F>,
    /// Layer inputs after dropout.
    pub inputs: Vec<Array2<F>>,
    /// Layer outputs `H^(l)`, `l = 1..=L'`.
    pub outputs: Vec<Array2<F>>,
    pub logits: Array1<F>,
    sym: Option<NormAdj>,
    rw: Option<NormAdj>,
    masks: Vec<Option<Array2<F>>>,
    pres: Vec<Array2<F>>,
    caches: Vec<LayerCache<F>>,
    emb: Array2<F>,
    readout: ReadoutCache<F>,
    head_in: Array1<F>,
}

#[derive(Debug, Clone)]
pub struct ActivationTape<F> {
    pub branches: Vec<BranchTape<F>>,
    /// Final (ensembled) logits.
    pub logits: Array1<F>,
    ensemble: Option<EnsembleCache<F>>,
}

fn dropout_mask<F: Real>(shape: (usize, usize), p: f64, rng: &mut ChaCha8Rng) -> Array2<F> {
    let keep = if p >= 1.0 { F::zero() } else { F::from_f64_lossy(1.0 / (1.0 - p)) };
    Array2::from_shape_simple_fn(shape, || if rng.random::<f64>() < p { F::zero() } else { keep })
}

fn gather_subset<F: Real>(from: &Subgraph, x: &Array2<F>, to: &Subgraph) -> Array2<F> {
    let mut out = Array2::zeros((to.num_nodes(), x.ncols()));
    for (i, &g) in to.globals().iter().enumerate() {
        let j = from.local_of(g).expect("subset of the original subgraph");
        out.row_mut(i).assign(&x.row(j));
    }
    out
}

fn branch_forward<F: Real>(
    input: BranchInput<'_, F>,
    cfg: &ModelConfig,
    p: &BranchParams<F>,
    mut rng: Option<&mut ChaCha8Rng>,
) -> Result<BranchTape<F>, ModelError> {
    if input.x.nrows() != input.sub.num_nodes() || input.x.ncols() != cfg.in_dim {
        return Err(ModelError::Shape(format!(
            "features are {:?}, expected ({}, {})",
            input.x.dim(),
            input.sub.num_nodes(),
            cfg.in_dim
        )));
    }
    let (sub, h0) = match rng.as_deref_mut() {
        Some(r) if cfg.dropedge > 0.0 => {
            let dropped = dropedge(input.sub, cfg.dropedge, r);
            let x = gather_subset(input.sub, input.x, &dropped);
            (dropped, x)
        }
        _ => (input.sub.clone(), input.x.clone()),
    };
    let needs_sym = matches!(cfg.arch, Arch::Gcn | Arch::Sgc);
    let sym = needs_sym.then(|| normalize(&sub, NormKind::Sym));
    let rw = (cfg.arch == Arch::Sage).then(|| normalize(&sub, NormKind::Rw));
    let inner = inner_act(cfg.activation);

    let mut inputs = Vec::new();
    let mut masks = Vec::new();
    let mut pres = Vec::new();
    let mut caches = Vec::new();
    let mut outputs = Vec::new();

    let mut h = h0.clone();
    let mut apply_dropout = |h: Array2<F>, masks: &mut Vec<Option<Array2<F>>>| match rng.as_deref_mut() {
        Some(r) if cfg.dropout > 0.0 => {
            let m = dropout_mask(h.dim(), cfg.dropout, r);
            let out = &h * &m;
            masks.push(Some(m));
            out
        }
        _ => {
            masks.push(None);
            h
        }
    };

    let emb = if cfg.arch == Arch::Sgc {
        let a = sym.as_ref().expect("symmetric operator");
        let mut cur = apply_dropout(h, &mut masks);
        inputs.push(cur.clone());
        for _ in 0..cfg.num_layers {
            cur = propagate(a, &cur, 1);
            outputs.push(cur.clone());
        }
        cur
    } else {
        for layer in &p.layers {
            let x_in = apply_dropout(h, &mut masks);
            let (pre, cache) = layer_forward(layer, &x_in, &sub, sym.as_ref(), rw.as_ref(), cfg.num_heads, inner)?;
            let act = Act::of(cfg.activation, layer.slope.as_ref());
            h = act.apply(&pre);
            inputs.push(x_in);
            pres.push(pre);
            caches.push(cache);
            outputs.push(h.clone());
        }
        if cfg.jk_concat {
            let views: Vec<_> = outputs.iter().map(|o| o.view()).collect();
            concatenate(Axis(1), &views).expect("equal row counts")
        } else {
            h
        }
    };

    let t = sub.target_local();
    let (pooled, readout) = readout_forward(&emb, t, cfg.pooling, p.sort.as_ref())?;
    let head_in = concatenate![Axis(0), pooled.row(0), emb.row(t)];
    if head_in.len() != p.head.w.nrows() {
        return Err(ModelError::Shape("head input width mismatch".into()));
    }
    let logits = head_in.dot(&p.head.w) + p.head.b.row(0);
    Ok(BranchTape {
        sub,
        h0,
        inputs,
        outputs,
        logits,
        sym,
        rw,
        masks,
        pres,
        caches,
        emb,
        readout,
        head_in,
    })
}

/// Runs every branch on its subgraph and combines the branch logits.
///
/// `rng` switches on training mode: DropEdge and dropout draw from it. With
/// `None` the pass is deterministic.
pub fn model_forward<F: Real>(
    inputs: &[BranchInput<'_, F>],
    cfg: &ModelConfig,
    params: &ParamSet<F>,
    mut rng: Option<&mut ChaCha8Rng>,
) -> Result<(Array1<F>, ActivationTape<F>), ModelError> {
    if inputs.len() != params.branches.len() {
        return Err(ModelError::Shape(format!(
            "{} branch inputs for {} model branches",
            inputs.len(),
            params.branches.len()
        )));
    }
    let mut branches = Vec::with_capacity(inputs.len());
    for (input, p) in inputs.iter().zip(&params.branches) {
        branches.push(branch_forward(*input, cfg, p, rng.as_deref_mut())?);
    }
    let ys: Vec<Array1<F>> = branches.iter().map(|b| b.logits.clone()).collect();
    let (logits, ensemble) = ensemble_forward(&ys, params.ensemble.as_ref())?;
    Ok((
        logits.clone(),
        ActivationTape {
            branches,
            logits,
            ensemble,
        },
    ))
}

fn branch_backward<F: Real>(
    tape: &BranchTape<F>,
    cfg: &ModelConfig,
    p: &BranchParams<F>,
    dlogits: &Array1<F>,
    g: &mut BranchParams<F>,
) -> Result<(), ModelError> {
    g.head.w += &tape.head_in.view().insert_axis(Axis(1)).dot(&dlogits.view().insert_axis(Axis(0)));
    g.head.b.row_mut(0).scaled_add(F::one(), dlogits);
    let dhin = p.head.w.dot(dlogits);
    let e = tape.emb.ncols();
    let t = tape.sub.target_local();
    let dpooled = dhin.slice(s![..e]).to_owned().insert_axis(Axis(0));
    let mut demb = readout_backward(&tape.emb, t, cfg.pooling, p.sort.as_ref(), &tape.readout, &dpooled, g.sort.as_mut());
    {
        let mut row = demb.row_mut(t);
        row += &dhin.slice(s![e..]);
    }
    if cfg.arch == Arch::Sgc {
        return Ok(());
    }

    let num = p.layers.len();
    let h = cfg.hidden_dim;
    let mut carry: Option<Array2<F>> = None;
    let inner = inner_act(cfg.activation);
    for l in (0..num).rev() {
        let mut dout = if cfg.jk_concat {
            demb.slice(s![.., l * h..(l + 1) * h]).to_owned()
        } else if l == num - 1 {
            demb.clone()
        } else {
            Array2::zeros(tape.outputs[l].dim())
        };
        if let Some(c) = carry.take() {
            dout += &c;
        }
        let layer = &p.layers[l];
        let act = Act::of(cfg.activation, layer.slope.as_ref());
        let (dpre, dslope) = act.backward(&tape.pres[l], &dout);
        let gl = &mut g.layers[l];
        if let Some(gs) = gl.slope.as_mut() {
            gs[[0, 0]] += dslope;
        }
        let mut dh = layer_backward(
            layer,
            &tape.caches[l],
            &tape.inputs[l],
            tape.sym.as_ref(),
            tape.rw.as_ref(),
            inner,
            &dpre,
            gl,
        )?;
        if let Some(m) = &tape.masks[l] {
            dh *= m;
        }
        carry = Some(dh);
    }
    Ok(())
}

/// Accumulates the gradient of `scale · loss(tape)` into `grads`, given
/// `dlogits` of the final output.
pub(crate) fn backward<F: Real>(
    tape: &ActivationTape<F>,
    cfg: &ModelConfig,
    params: &ParamSet<F>,
    dlogits: &Array1<F>,
    grads: &mut ParamSet<F>,
) -> Result<(), ModelError> {
    if cfg.arch == Arch::Gat {
        return Err(ModelError::Unsupported("GAT is forward-only".into()));
    }
    let per_branch: Vec<Array1<F>> = match (&tape.ensemble, &params.ensemble, &mut grads.ensemble) {
        (Some(cache), Some(p), Some(g)) => {
            let ys: Vec<Array1<F>> = tape.branches.iter().map(|b| b.logits.clone()).collect();
            ensemble_backward(&ys, p, cache, dlogits, g)
        }
        _ => vec![dlogits.clone()],
    };
    for ((bt, (bp, bg)), d) in tape
        .branches
        .iter()
        .zip(params.branches.iter().zip(grads.branches.iter_mut()))
        .zip(&per_branch)
    {
        branch_backward(bt, cfg, bp, d, bg)?;
    }
    Ok(())
}

/// Softmax cross-entropy of one logit vector and its gradient.
pub fn cross_entropy<F: Real>(logits: &Array1<F>, label: usize) -> (F, Array1<F>) {
    let p = softmax(logits.as_slice().expect("contiguous"));
    let top = logits.iter().copied().fold(F::neg_infinity(), F::max);
    let lse = top + logits.iter().map(|&z| (z - top).exp()).sum::<F>().ln();
    let loss = lse - logits[label];
    let mut d = Array1::from(p);
    d[label] -= F::one();
    (loss, d)
}

/// Mean cross-entropy over a batch and the gradient of every parameter.
pub fn loss_and_grad<F: Real>(
    tapes: &[ActivationTape<F>],
    labels: &[u32],
    cfg: &ModelConfig,
    params: &ParamSet<F>,
) -> Result<(F, ParamSet<F>), ModelError> {
    if tapes.len() != labels.len() || tapes.is_empty() {
        return Err(ModelError::Shape(format!("{} tapes for {} labels", tapes.len(), labels.len())));
    }
    let mut grads = params.zeros_like();
    let scale = F::one() / F::from_usize(tapes.len()).expect("count");
    let mut total = F::zero();
    for (tape, &y) in tapes.iter().zip(labels) {
        if y as usize >= cfg.num_classes {
            return Err(ModelError::Label {
                label: y,
                num_classes: cfg.num_classes,
            });
        }
        let (loss, d) = cross_entropy(&tape.logits, y as usize);
        total += loss;
        backward(tape, cfg, params, &(d * scale), &mut grads)?;
    }
    let loss = total * scale;
    if !loss.is_finite() {
        return Err(ModelError::NonFinite);
    }
    Ok((loss, grads))
}
