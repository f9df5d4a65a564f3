use ndarray::{s, Array1, Array2, Axis};

use super::params::{Layer, LayerParams, Linear, Mlp2};
use super::{Activation, ModelError};
use crate::graph::{Adjacency, NormAdj, Subgraph};
use crate::real::Real;

const GAT_LEAKY_SLOPE: f64 = 0.2;

/// Resolved elementwise nonlinearity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Act<F> {
    Identity,
    Relu,
    Elu,
    /// Negative-side slope.
    Leaky(F),
}

impl<F: Real> Act<F> {
    /// The activation of a layer; `slope` is its PReLU parameter if any.
    pub fn of(kind: Activation, slope: Option<&Array2<F>>) -> Self {
        match kind {
            Activation::Identity => Act::Identity,
            Activation::Relu => Act::Relu,
            Activation::Elu => Act::Elu,
            Activation::Prelu => Act::Leaky(slope.map_or(F::from_f64_lossy(0.25), |a| a[[0, 0]])),
        }
    }

    pub fn apply(&self, x: &Array2<F>) -> Array2<F> {
        match *self {
            Act::Identity => x.clone(),
            Act::Relu => x.mapv(|v| v.max(F::zero())),
            Act::Elu => x.mapv(|v| if v > F::zero() { v } else { v.exp_m1() }),
            Act::Leaky(a) => x.mapv(|v| if v > F::zero() { v } else { a * v }),
        }
    }

    /// Gradient w.r.t. the pre-activation, and w.r.t. the slope for `Leaky`.
    pub fn backward(&self, pre: &Array2<F>, dout: &Array2<F>) -> (Array2<F>, F) {
        let zero = F::zero();
        match *self {
            Act::Identity => (dout.clone(), zero),
            Act::Relu => {
                let mut d = dout.clone();
                d.zip_mut_with(pre, |g, &p| {
                    if p <= zero {
                        *g = zero
                    }
                });
                (d, zero)
            }
            Act::Elu => {
                let mut d = dout.clone();
                d.zip_mut_with(pre, |g, &p| {
                    if p <= zero {
                        *g *= p.exp()
                    }
                });
                (d, zero)
            }
            Act::Leaky(a) => {
                let mut d = dout.clone();
                let mut da = zero;
                d.zip_mut_with(pre, |g, &p| {
                    if p <= zero {
                        da += *g * p;
                        *g *= a;
                    }
                });
                (d, da)
            }
        }
    }
}

/// Activation used inside GIN perceptrons: the layer's own kind, with PReLU
/// replaced by ReLU since the slope belongs to the layer output.
pub(crate) fn inner_act<F: Real>(kind: Activation) -> Act<F> {
    match kind {
        Activation::Prelu => Act::Relu,
        other => Act::of(other, None),
    }
}

fn check(cond: bool, what: impl FnOnce() -> String) -> Result<(), ModelError> {
    if cond {
        Ok(())
    } else {
        Err(ModelError::Shape(what()))
    }
}

fn check_matmul<F>(h: &Array2<F>, w: &Array2<F>, b: &Array2<F>) -> Result<(), ModelError> {
    check(h.ncols() == w.nrows(), || {
        format!("input width {} but weight has {} rows", h.ncols(), w.nrows())
    })?;
    check(b.dim() == (1, w.ncols()), || {
        format!("bias shape {:?} does not match output width {}", b.dim(), w.ncols())
    })
}

fn check_adj<F>(h: &Array2<F>, n: usize) -> Result<(), ModelError> {
    check(h.nrows() == n, || format!("{} feature rows for {} nodes", h.nrows(), n))
}

pub(crate) fn row_sums<F: Real>(g: &Array2<F>) -> Array2<F> {
    g.sum_axis(Axis(0)).insert_axis(Axis(0))
}

/// `act(A · H · W + b)` with the symmetric operator.
pub fn gcn_layer<F: Real>(h: &Array2<F>, a: &NormAdj, w: &Array2<F>, b: &Array2<F>, act: Act<F>) -> Result<Array2<F>, ModelError> {
    check_adj(h, a.num_nodes())?;
    check_matmul(h, w, b)?;
    Ok(act.apply(&(a.matmul(h).dot(w) + b)))
}

/// `act(H · W1 + A · H · W2 + b)` with the random-walk operator.
pub fn sage_layer<F: Real>(
    h: &Array2<F>,
    a: &NormAdj,
    w1: &Array2<F>,
    w2: &Array2<F>,
    b: &Array2<F>,
    act: Act<F>,
) -> Result<Array2<F>, ModelError> {
    check_adj(h, a.num_nodes())?;
    check_matmul(h, w1, b)?;
    check_matmul(h, w2, b)?;
    Ok(act.apply(&(h.dot(w1) + a.matmul(h).dot(w2) + b)))
}

/// Intermediates of one GIN layer, one row per directed edge for the message
/// perceptron.
#[derive(Debug, Clone)]
pub(crate) struct GinCache<F> {
    edges: Vec<(usize, usize)>,
    pre2: Array2<F>,
    z2: Array2<F>,
    agg: Array2<F>,
    pre1: Array2<F>,
    z1: Array2<F>,
}

fn directed_edges(s: &Subgraph) -> Vec<(usize, usize)> {
    (0..s.num_nodes())
        .flat_map(|v| s.neighbors(v).iter().map(move |&u| (v, u as usize)))
        .collect()
}

fn split_rows<F: Real>(w: &Array2<F>, at: usize) -> (ndarray::ArrayView2<'_, F>, ndarray::ArrayView2<'_, F>) {
    (w.slice(s![..at, ..]), w.slice(s![at.., ..]))
}

fn gin_forward<F: Real>(
    h: &Array2<F>,
    s: &Subgraph,
    f1: &Mlp2<F>,
    f2: &Mlp2<F>,
    inner: Act<F>,
) -> Result<(Array2<F>, GinCache<F>), ModelError> {
    check_adj(h, s.num_nodes())?;
    let d = h.ncols();
    check(f2.l1.w.nrows() == 2 * d, || format!("message perceptron expects {} inputs, got 2 x {d}", f2.l1.w.nrows()))?;
    check(f1.l1.w.nrows() == d + f2.l2.w.ncols(), || "update perceptron input width mismatch".into())?;
    let edges = directed_edges(s);
    let (a_self, a_nbr) = split_rows(&f2.l1.w, d);
    let p = h.dot(&a_self);
    let q = h.dot(&a_nbr);
    let hid = f2.l1.w.ncols();
    let mut pre2 = Array2::zeros((edges.len(), hid));
    for (e, &(v, u)) in edges.iter().enumerate() {
        let mut row = pre2.row_mut(e);
        row.assign(&p.row(v));
        row += &q.row(u);
        row += &f2.l1.b.row(0);
    }
    let z2 = inner.apply(&pre2);
    let m = z2.dot(&f2.l2.w) + &f2.l2.b;
    let mut agg = Array2::zeros((h.nrows(), m.ncols()));
    for (e, &(v, _)) in edges.iter().enumerate() {
        let mut row = agg.row_mut(v);
        row += &m.row(e);
    }
    let (u_self, u_agg) = split_rows(&f1.l1.w, d);
    let pre1 = h.dot(&u_self) + agg.dot(&u_agg) + &f1.l1.b;
    let z1 = inner.apply(&pre1);
    let out = z1.dot(&f1.l2.w) + &f1.l2.b;
    Ok((
        out,
        GinCache {
            edges,
            pre2,
            z2,
            agg,
            pre1,
            z1,
        },
    ))
}

/// `act(f1([h_v ∥ Σ_{u ∈ N(v)} f2([h_v ∥ h_u])]))`; each perceptron is
/// linear, `inner`, linear.
pub fn gin_layer<F: Real>(
    h: &Array2<F>,
    s: &Subgraph,
    f1: &Mlp2<F>,
    f2: &Mlp2<F>,
    inner: Act<F>,
    act: Act<F>,
) -> Result<Array2<F>, ModelError> {
    Ok(act.apply(&gin_forward(h, s, f1, f2, inner)?.0))
}

/// Multi-head additive attention over each node's neighbours plus itself;
/// head outputs are concatenated.
#[allow(clippy::too_many_arguments)]
pub fn gat_layer<F: Real>(
    h: &Array2<F>,
    s: &Subgraph,
    heads: usize,
    w: &Array2<F>,
    a_src: &Array2<F>,
    a_dst: &Array2<F>,
    b: &Array2<F>,
    act: Act<F>,
) -> Result<Array2<F>, ModelError> {
    check_adj(h, s.num_nodes())?;
    check_matmul(h, w, b)?;
    let d_out = w.ncols();
    check(heads >= 1 && d_out.is_multiple_of(heads), || format!("{heads} heads do not divide width {d_out}"))?;
    let dh = d_out / heads;
    check(a_src.dim() == (heads, dh) && a_dst.dim() == (heads, dh), || "attention vector shape mismatch".into())?;
    let z = h.dot(w);
    let n = h.nrows();
    let leaky = F::from_f64_lossy(GAT_LEAKY_SLOPE);
    let mut out = Array2::zeros((n, d_out));
    for k in 0..heads {
        let zk = z.slice(s![.., k * dh..(k + 1) * dh]);
        let src: Array1<F> = zk.dot(&a_src.row(k));
        let dst: Array1<F> = zk.dot(&a_dst.row(k));
        for v in 0..n {
            let nbrs: Vec<usize> = std::iter::once(v).chain(s.neighbors(v).iter().map(|&u| u as usize)).collect();
            let logits: Vec<F> = nbrs
                .iter()
                .map(|&u| {
                    let e = dst[v] + src[u];
                    if e > F::zero() {
                        e
                    } else {
                        leaky * e
                    }
                })
                .collect();
            let top = logits.iter().copied().fold(F::neg_infinity(), F::max);
            let weights: Vec<F> = logits.iter().map(|&e| (e - top).exp()).collect();
            let total: F = weights.iter().copied().sum();
            let mut dst_row = out.slice_mut(s![v, k * dh..(k + 1) * dh]);
            for (&u, &wt) in nbrs.iter().zip(&weights) {
                dst_row.scaled_add(wt / total, &zk.row(u));
            }
        }
    }
    Ok(act.apply(&(out + b)))
}

/// `K` rounds of `A · X`.
pub fn propagate<F: Real>(a: &NormAdj, x: &Array2<F>, k: usize) -> Array2<F> {
    let mut h = x.clone();
    for _ in 0..k {
        h = a.matmul(&h);
    }
    h
}

pub fn softmax<F: Real>(z: &[F]) -> Vec<F> {
    let top = z.iter().copied().fold(F::neg_infinity(), F::max);
    let e: Vec<F> = z.iter().map(|&v| (v - top).exp()).collect();
    let total: F = e.iter().copied().sum();
    e.into_iter().map(|v| v / total).collect()
}

/// Class distribution of the target after `k` symmetric propagations of `x`
/// inside `s` and one linear map `w`.
pub fn sgc_forward<F: Real>(s: &Subgraph, x: &Array2<F>, w: &Array2<F>, k: usize) -> Result<Array1<F>, ModelError> {
    check_adj(x, s.num_nodes())?;
    check(x.ncols() == w.nrows(), || "feature width does not match weight rows".into())?;
    let a = crate::graph::normalize(s, crate::graph::NormKind::Sym);
    let h = propagate(&a, x, k);
    let z = h.row(s.target_local()).dot(w);
    Ok(Array1::from(softmax(z.as_slice().expect("contiguous"))))
}

/// What a layer's backward pass needs from its forward pass.
#[derive(Debug, Clone)]
pub(crate) enum LayerCache<F> {
    /// `A · H`
    Propagated(Array2<F>),
    Gin(Box<GinCache<F>>),
    None,
}

/// One layer forward with cache. Returns the pre-activation.
pub(crate) fn layer_forward<F: Real>(
    layer: &Layer<F>,
    h: &Array2<F>,
    s: &Subgraph,
    sym: Option<&NormAdj>,
    rw: Option<&NormAdj>,
    heads: usize,
    inner: Act<F>,
) -> Result<(Array2<F>, LayerCache<F>), ModelError> {
    match &layer.params {
        LayerParams::Gcn(Linear { w, b }) => {
            let a = sym.expect("gcn needs the symmetric operator");
            check_adj(h, a.num_nodes())?;
            check_matmul(h, w, b)?;
            let ah = a.matmul(h);
            Ok((ah.dot(w) + b, LayerCache::Propagated(ah)))
        }
        LayerParams::Sage { w1, w2, b } => {
            let a = rw.expect("sage needs the random-walk operator");
            check_adj(h, a.num_nodes())?;
            check_matmul(h, w1, b)?;
            check_matmul(h, w2, b)?;
            let ah = a.matmul(h);
            Ok((h.dot(w1) + ah.dot(w2) + b, LayerCache::Propagated(ah)))
        }
        LayerParams::Gin { f1, f2 } => {
            let (pre, cache) = gin_forward(h, s, f1, f2, inner)?;
            Ok((pre, LayerCache::Gin(Box::new(cache))))
        }
        LayerParams::Gat { w, a_src, a_dst, b } => Ok((
            gat_layer(h, s, heads, w, a_src, a_dst, b, Act::Identity)?,
            LayerCache::None,
        )),
        LayerParams::Sgc => Ok((h.clone(), LayerCache::None)),
    }
}

/// Backward through one layer given the gradient w.r.t. its pre-activation.
/// Accumulates parameter gradients into `grad` and returns `dL/dH`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn layer_backward<F: Real>(
    layer: &Layer<F>,
    cache: &LayerCache<F>,
    h: &Array2<F>,
    sym: Option<&NormAdj>,
    rw: Option<&NormAdj>,
    inner: Act<F>,
    dpre: &Array2<F>,
    grad: &mut Layer<F>,
) -> Result<Array2<F>, ModelError> {
    match (&layer.params, &mut grad.params, cache) {
        (LayerParams::Gcn(p), LayerParams::Gcn(g), LayerCache::Propagated(ah)) => {
            g.w += &ah.t().dot(dpre);
            g.b += &row_sums(dpre);
            Ok(sym.expect("operator").transpose_matmul(&dpre.dot(&p.w.t())))
        }
        (LayerParams::Sage { w1, w2, .. }, LayerParams::Sage { w1: g1, w2: g2, b: gb }, LayerCache::Propagated(ah)) => {
            *g1 += &h.t().dot(dpre);
            *g2 += &ah.t().dot(dpre);
            *gb += &row_sums(dpre);
            Ok(dpre.dot(&w1.t()) + rw.expect("operator").transpose_matmul(&dpre.dot(&w2.t())))
        }
        (LayerParams::Gin { f1, f2 }, LayerParams::Gin { f1: g1, f2: g2 }, LayerCache::Gin(c)) => {
            Ok(gin_backward(h, f1, f2, c, inner, dpre, g1, g2))
        }
        (LayerParams::Sgc, _, _) => Ok(dpre.clone()),
        (LayerParams::Gat { .. }, _, _) => Err(ModelError::Unsupported("GAT has no backward pass".into())),
        _ => Err(ModelError::Shape("parameter and cache kinds disagree".into())),
    }
}

#[allow(clippy::too_many_arguments)]
fn gin_backward<F: Real>(
    h: &Array2<F>,
    f1: &Mlp2<F>,
    f2: &Mlp2<F>,
    c: &GinCache<F>,
    inner: Act<F>,
    dpre: &Array2<F>,
    g1: &mut Mlp2<F>,
    g2: &mut Mlp2<F>,
) -> Array2<F> {
    let d = h.ncols();
    // Update perceptron.
    g1.l2.w += &c.z1.t().dot(dpre);
    g1.l2.b += &row_sums(dpre);
    let (dpre1, _) = inner.backward(&c.pre1, &dpre.dot(&f1.l2.w.t()));
    let (u_self, u_agg) = split_rows(&f1.l1.w, d);
    g1.l1.w.slice_mut(s![..d, ..]).scaled_add(F::one(), &h.t().dot(&dpre1));
    g1.l1.w.slice_mut(s![d.., ..]).scaled_add(F::one(), &c.agg.t().dot(&dpre1));
    g1.l1.b += &row_sums(&dpre1);
    let mut dh = dpre1.dot(&u_self.t());
    let dagg = dpre1.dot(&u_agg.t());

    // Message perceptron, one row per directed edge.
    let mut dm = Array2::zeros((c.edges.len(), dagg.ncols()));
    for (e, &(v, _)) in c.edges.iter().enumerate() {
        dm.row_mut(e).assign(&dagg.row(v));
    }
    g2.l2.w += &c.z2.t().dot(&dm);
    g2.l2.b += &row_sums(&dm);
    let (dpre2, _) = inner.backward(&c.pre2, &dm.dot(&f2.l2.w.t()));
    g2.l1.b += &row_sums(&dpre2);
    let n = h.nrows();
    let hid = dpre2.ncols();
    let mut dp = Array2::zeros((n, hid));
    let mut dq = Array2::zeros((n, hid));
    for (e, &(v, u)) in c.edges.iter().enumerate() {
        let row = dpre2.row(e);
        let mut a = dp.row_mut(v);
        a += &row;
        let mut b = dq.row_mut(u);
        b += &row;
    }
    let (a_self, a_nbr) = split_rows(&f2.l1.w, d);
    g2.l1.w.slice_mut(s![..d, ..]).scaled_add(F::one(), &h.t().dot(&dp));
    g2.l1.w.slice_mut(s![d.., ..]).scaled_add(F::one(), &h.t().dot(&dq));
    dh += &dp.dot(&a_self.t());
    dh += &dq.dot(&a_nbr.t());
    dh
}
