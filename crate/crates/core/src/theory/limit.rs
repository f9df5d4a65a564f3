use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::{Array1, Array2};

use crate::graph::{normalize, NormKind, Subgraph};

/// Closed-form stationary objects of one subgraph.
#[derive(Debug, Clone, PartialEq)]
pub struct StationaryProfile {
    /// `e_u = sqrt(δ(u) / Σ δ)`: unit top eigenvector of the symmetric operator.
    pub e_vec: Array1<f64>,
    /// `δ(u) / Σ δ`: stationary distribution of the random-walk operator.
    pub delta_hat: Array1<f64>,
    /// `e_v · (eᵀ X)`: the target row of the infinite-depth propagation.
    pub limit_m: Array1<f64>,
    /// Largest eigenvalue magnitude after the top one.
    pub lambda2_abs: f64,
}

fn degrees_plus_one(s: &Subgraph) -> Array1<f64> {
    (0..s.num_nodes()).map(|u| s.degree_plus_one(u) as f64).collect()
}

fn delta_hat(s: &Subgraph) -> Array1<f64> {
    let d = degrees_plus_one(s);
    let total = d.sum();
    d / total
}

/// Second eigenvalue magnitude of the symmetric self-loop-augmented operator.
pub fn lambda2_abs(s: &Subgraph) -> f64 {
    let n = s.num_nodes();
    if n == 1 {
        return 0.0;
    }
    let a = normalize(s, NormKind::Sym).to_dense();
    let m = DMatrix::from_fn(n, n, |i, j| a[[i, j]]);
    let mut ev: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    ev[1..].iter().map(|v| v.abs()).fold(0.0, f64::max)
}

pub fn limit_aggregation(s: &Subgraph, x: &Array2<f64>) -> StationaryProfile {
    assert_eq!(x.nrows(), s.num_nodes(), "one feature row per subgraph node");
    let delta_hat = delta_hat(s);
    let e_vec = delta_hat.mapv(f64::sqrt);
    let limit_m = x.t().dot(&e_vec) * e_vec[s.target_local()];
    StationaryProfile {
        e_vec,
        delta_hat,
        limit_m,
        lambda2_abs: lambda2_abs(s),
    }
}

/// Target row of `A_sym^L X`, by repeated multiplication.
pub fn power_limit(s: &Subgraph, x: &Array2<f64>, l: usize) -> Array1<f64> {
    let a = normalize(s, NormKind::Sym);
    let mut r = vec![0.0; s.num_nodes()];
    r[s.target_local()] = 1.0;
    for _ in 0..l {
        r = a.left_mul_row(&r);
    }
    x.t().dot(&Array1::from(r))
}

/// Degree-weighted feature average `δ̂ᵀ X`.
pub fn target_function(s: &Subgraph, x: &Array2<f64>) -> Array1<f64> {
    x.t().dot(&delta_hat(s))
}

/// `‖row_v(A_rw^L) − δ̂‖₁`.
pub fn markov_error(s: &Subgraph, l: usize) -> f64 {
    markov_curve(s, l).pop().expect("non-empty curve")
}

/// Markov errors for every depth `0..=l_max`.
pub fn markov_curve(s: &Subgraph, l_max: usize) -> Vec<f64> {
    let a = normalize(s, NormKind::Rw);
    let target = delta_hat(s);
    let mut r = vec![0.0; s.num_nodes()];
    r[s.target_local()] = 1.0;
    let err = |r: &[f64]| r.iter().zip(target.iter()).map(|(a, b)| (a - b).abs()).sum::<f64>();
    let mut out = vec![err(&r)];
    for _ in 0..l_max {
        r = a.left_mul_row(&r);
        out.push(err(&r));
    }
    out
}

/// Least-squares line through `(x, ln y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn fit_log_linear(xs: &[f64], ys: &[f64]) -> LineFit {
    assert_eq!(xs.len(), ys.len());
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ly.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    LineFit {
        slope,
        intercept: my - slope * mx,
        r_squared,
    }
}
