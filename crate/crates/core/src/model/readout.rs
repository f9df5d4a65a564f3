use ndarray::{concatenate, s, Array1, Array2, Axis};

use super::layers::{row_sums, softmax};
use super::params::{EnsembleParams, Linear};
use super::{ModelError, Pooling};
use crate::real::Real;

#[derive(Debug, Clone, Default)]
pub(crate) struct ReadoutCache<F> {
    argmax: Vec<usize>,
    order: Vec<usize>,
    flat: Option<Array2<F>>,
}

/// Rows ordered by last channel, descending; ties keep the lower row first.
fn sort_order<F: Real>(h: &Array2<F>) -> Vec<usize> {
    let last = h.ncols() - 1;
    let mut order: Vec<usize> = (0..h.nrows()).collect();
    order.sort_by(|&a, &b| h[[b, last]].partial_cmp(&h[[a, last]]).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b)));
    order
}

pub(crate) fn readout_forward<F: Real>(
    h: &Array2<F>,
    target: usize,
    pooling: Pooling,
    sort: Option<&Linear<F>>,
) -> Result<(Array2<F>, ReadoutCache<F>), ModelError> {
    let n = h.nrows();
    let d = h.ncols();
    let mut cache = ReadoutCache::default();
    let pooled = match pooling {
        Pooling::Center => h.slice(s![target..target + 1, ..]).to_owned(),
        Pooling::Sum => row_sums(h),
        Pooling::Mean => row_sums(h) / F::from_usize(n).expect("count"),
        Pooling::Max => {
            let mut out = Array2::zeros((1, d));
            cache.argmax = vec![0; d];
            for j in 0..d {
                let mut best = 0;
                for i in 1..n {
                    if h[[i, j]] > h[[best, j]] {
                        best = i;
                    }
                }
                cache.argmax[j] = best;
                out[[0, j]] = h[[best, j]];
            }
            out
        }
        Pooling::Sort { s: k } => {
            let lin = sort.ok_or_else(|| ModelError::Shape("sort pooling needs its linear map".into()))?;
            if lin.w.nrows() != k * d {
                return Err(ModelError::Shape(format!(
                    "sort map expects {} inputs, pooling provides {}",
                    lin.w.nrows(),
                    k * d
                )));
            }
            let mut order = sort_order(h);
            order.truncate(k);
            // Rows past the subgraph size are padding: they sort last and
            // contribute zeros.
            let mut flat = Array2::zeros((1, k * d));
            for (slot, &i) in order.iter().enumerate() {
                flat.slice_mut(s![0, slot * d..(slot + 1) * d]).assign(&h.row(i));
            }
            let out = flat.dot(&lin.w) + &lin.b;
            cache.order = order;
            cache.flat = Some(flat);
            out
        }
    };
    Ok((pooled, cache))
}

pub(crate) fn readout_backward<F: Real>(
    h: &Array2<F>,
    target: usize,
    pooling: Pooling,
    sort: Option<&Linear<F>>,
    cache: &ReadoutCache<F>,
    dpooled: &Array2<F>,
    grad_sort: Option<&mut Linear<F>>,
) -> Array2<F> {
    let (n, d) = h.dim();
    let mut dh = Array2::zeros((n, d));
    match pooling {
        Pooling::Center => dh.row_mut(target).assign(&dpooled.row(0)),
        Pooling::Sum => dh.rows_mut().into_iter().for_each(|mut r| r.assign(&dpooled.row(0))),
        Pooling::Mean => {
            let scale = F::one() / F::from_usize(n).expect("count");
            dh.rows_mut().into_iter().for_each(|mut r| r.assign(&(&dpooled.row(0) * scale)));
        }
        Pooling::Max => {
            for (j, &i) in cache.argmax.iter().enumerate() {
                dh[[i, j]] += dpooled[[0, j]];
            }
        }
        Pooling::Sort { .. } => {
            let lin = sort.expect("sort map");
            let g = grad_sort.expect("sort gradient");
            let flat = cache.flat.as_ref().expect("sort cache");
            g.w += &flat.t().dot(dpooled);
            g.b += dpooled;
            let dflat = dpooled.dot(&lin.w.t());
            for (slot, &i) in cache.order.iter().enumerate() {
                let mut r = dh.row_mut(i);
                r += &dflat.slice(s![0, slot * d..(slot + 1) * d]);
            }
        }
    }
    dh
}

/// Permutation-invariant reduction of the node embeddings.
pub fn readout<F: Real>(h: &Array2<F>, target: usize, pooling: Pooling, sort: Option<&Linear<F>>) -> Result<Array1<F>, ModelError> {
    if h.nrows() == 0 || target >= h.nrows() {
        return Err(ModelError::Shape("readout needs a non-empty matrix containing the target".into()));
    }
    Ok(readout_forward(h, target, pooling, sort)?.0.remove_axis(Axis(0)))
}

/// Class logits from `[pooled ∥ target_row]`.
pub fn head<F: Real>(pooled: &Array1<F>, target_row: &Array1<F>, lin: &Linear<F>) -> Result<Array1<F>, ModelError> {
    if pooled.len() + target_row.len() != lin.w.nrows() {
        return Err(ModelError::Shape(format!(
            "head expects {} inputs, got {} + {}",
            lin.w.nrows(),
            pooled.len(),
            target_row.len()
        )));
    }
    let x = concatenate![Axis(0), pooled.view(), target_row.view()];
    Ok(x.dot(&lin.w) + lin.b.row(0))
}

#[derive(Debug, Clone)]
pub(crate) struct EnsembleCache<F> {
    z: Vec<Array1<F>>,
    weights: Vec<F>,
}

pub(crate) fn ensemble_forward<F: Real>(
    ys: &[Array1<F>],
    params: Option<&EnsembleParams<F>>,
) -> Result<(Array1<F>, Option<EnsembleCache<F>>), ModelError> {
    match (ys.len(), params) {
        (0, _) => Err(ModelError::Shape("ensemble needs at least one branch".into())),
        (1, _) => Ok((ys[0].clone(), None)),
        (r, Some(p)) if p.mlps.len() == r => {
            let z: Vec<Array1<F>> = ys
                .iter()
                .zip(&p.mlps)
                .map(|(y, m)| (y.dot(&m.w) + m.b.row(0)).mapv(F::tanh))
                .collect();
            let logits: Vec<F> = z.iter().map(|zi| zi.dot(&p.q.row(0))).collect();
            let weights = softmax(&logits);
            let mut out = Array1::zeros(ys[0].len());
            for (y, &a) in ys.iter().zip(&weights) {
                out.scaled_add(a, y);
            }
            Ok((out, Some(EnsembleCache { z, weights })))
        }
        (r, _) => Err(ModelError::Shape(format!("ensemble parameters do not cover {r} branches"))),
    }
}

/// Gradients of the combined output w.r.t. each branch output.
pub(crate) fn ensemble_backward<F: Real>(
    ys: &[Array1<F>],
    params: &EnsembleParams<F>,
    cache: &EnsembleCache<F>,
    dout: &Array1<F>,
    grad: &mut EnsembleParams<F>,
) -> Vec<Array1<F>> {
    let a = &cache.weights;
    let da: Vec<F> = ys.iter().map(|y| y.dot(dout)).collect();
    let mean: F = a.iter().zip(&da).map(|(&ai, &d)| ai * d).sum();
    let q = params.q.row(0);
    ys.iter()
        .enumerate()
        .map(|(i, y)| {
            let dw = a[i] * (da[i] - mean);
            let zi = &cache.z[i];
            grad.q.row_mut(0).scaled_add(dw, zi);
            let dpre = zi.mapv(|v| F::one() - v * v) * q * dw;
            let g = &mut grad.mlps[i];
            g.w += &y.view().insert_axis(Axis(1)).dot(&dpre.view().insert_axis(Axis(0)));
            g.b.row_mut(0).scaled_add(F::one(), &dpre);
            dout * a[i] + params.mlps[i].w.dot(&dpre)
        })
        .collect()
}

/// Attention-weighted combination of branch outputs; a single branch passes
/// through unchanged.
pub fn ensemble_combine<F: Real>(ys: &[Array1<F>], params: Option<&EnsembleParams<F>>) -> Result<Array1<F>, ModelError> {
    Ok(ensemble_forward(ys, params)?.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{arr1, arr2};

    #[test]
    fn hand_pooling() {
        let h = arr2(&[[1.0, 2.0], [3.0, 0.0]]);
        assert_eq!(readout(&h, 0, Pooling::Max, None).unwrap(), arr1(&[3.0, 2.0]));
        assert_eq!(readout(&h, 0, Pooling::Sum, None).unwrap(), arr1(&[4.0, 2.0]));
        assert_eq!(readout(&h, 0, Pooling::Mean, None).unwrap(), arr1(&[2.0, 1.0]));
        assert_eq!(readout(&h, 1, Pooling::Center, None).unwrap(), arr1(&[3.0, 0.0]));
    }

    #[test]
    fn sort_pads_small_subgraphs() {
        let h = arr2(&[[1.0, 2.0], [3.0, 5.0]]);
        let mut w = Array2::zeros((6, 2));
        w[[0, 0]] = 1.0;
        w[[1, 1]] = 1.0;
        let lin = Linear {
            w,
            b: Array2::zeros((1, 2)),
        };
        // Identity on the first slot: the row with the largest last channel.
        assert_eq!(readout(&h, 0, Pooling::Sort { s: 3 }, Some(&lin)).unwrap(), arr1(&[3.0, 5.0]));
    }

    #[test]
    fn head_sums_in_one_dim() {
        let lin = Linear {
            w: arr2(&[[1.0], [1.0]]),
            b: arr2(&[[0.0]]),
        };
        assert_eq!(head(&arr1(&[2.0]), &arr1(&[5.0]), &lin).unwrap(), arr1(&[7.0]));
        let zero = Linear {
            w: Array2::zeros((2, 3)),
            b: arr2(&[[1.0, -1.0, 0.5]]),
        };
        assert_eq!(head(&arr1(&[2.0]), &arr1(&[5.0]), &zero).unwrap(), arr1(&[1.0, -1.0, 0.5]));
    }

    #[test]
    fn ensemble_cases() {
        let y1: Array1<f64> = arr1(&[1.0, -2.0]);
        assert_eq!(ensemble_combine(std::slice::from_ref(&y1), None).unwrap(), y1);
        assert!(ensemble_combine::<f64>(&[], None).is_err());
        let zero = EnsembleParams {
            mlps: vec![
                Linear {
                    w: Array2::zeros((2, 2)),
                    b: Array2::zeros((1, 2))
                };
                2
            ],
            q: Array2::zeros((1, 2)),
        };
        let y2 = arr1(&[3.0, 0.0]);
        assert_eq!(ensemble_combine(&[y1.clone(), y2], Some(&zero)).unwrap(), arr1(&[2.0, -1.0]));
        let p = EnsembleParams {
            q: arr2(&[[0.4, -1.3]]),
            mlps: vec![
                Linear {
                    w: arr2(&[[0.5, 1.0], [-0.2, 0.3]]),
                    b: arr2(&[[0.1, 0.0]])
                };
                2
            ],
        };
        let same = ensemble_combine(&[y1.clone(), y1.clone()], Some(&p)).unwrap();
        assert!((&same - &y1).iter().all(|d: &f64| d.abs() < 1e-15));
    }
}
