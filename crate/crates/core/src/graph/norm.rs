use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::Adjacency;
use crate::real::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormKind {
    /// `D*^{-1/2} A* D*^{-1/2}`
    Sym,
    /// `D*^{-1} A*`
    Rw,
}

/// Self-loop-augmented normalised adjacency in CSR form.
///
/// Every row contains its diagonal entry; column ids within a row are sorted.
#[derive(Debug, Clone, PartialEq)]
pub struct NormAdj {
    kind: NormKind,
    indptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
}

/// Adds self-loops to `a` and normalises with `kind`.
pub fn normalize<A: Adjacency + ?Sized>(a: &A, kind: NormKind) -> NormAdj {
    let n = a.node_count();
    let deg: Vec<f64> = (0..n).map(|u| (a.degree(u) + 1) as f64).collect();
    let inv_sqrt: Vec<f64> = deg.iter().map(|d| d.sqrt().recip()).collect();
    let mut indptr = Vec::with_capacity(n + 1);
    let nnz: usize = (0..n).map(|u| a.degree(u) + 1).sum();
    let mut cols = Vec::with_capacity(nnz);
    let mut vals = Vec::with_capacity(nnz);
    indptr.push(0);
    for u in 0..n {
        let mut self_done = false;
        let push = |w: usize, cols: &mut Vec<u32>, vals: &mut Vec<f64>| {
            cols.push(w as u32);
            vals.push(match kind {
                NormKind::Sym => inv_sqrt[u] * inv_sqrt[w],
                NormKind::Rw => deg[u].recip(),
            });
        };
        for &w in a.neighbors(u) {
            let w = w as usize;
            if !self_done && w > u {
                push(u, &mut cols, &mut vals);
                self_done = true;
            }
            push(w, &mut cols, &mut vals);
        }
        if !self_done {
            push(u, &mut cols, &mut vals);
        }
        indptr.push(cols.len());
    }
    NormAdj {
        kind,
        indptr,
        cols,
        vals,
    }
}

impl NormAdj {
    pub fn kind(&self) -> NormKind {
        self.kind
    }

    pub fn num_nodes(&self) -> usize {
        self.indptr.len() - 1
    }

    /// Stored entries including the diagonal.
    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    pub fn row(&self, u: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.indptr[u]..self.indptr[u + 1];
        self.cols[r.clone()]
            .iter()
            .zip(&self.vals[r])
            .map(|(&c, &v)| (c as usize, v))
    }

    pub fn entry(&self, u: usize, w: usize) -> f64 {
        let r = self.indptr[u]..self.indptr[u + 1];
        match self.cols[r.clone()].binary_search(&(w as u32)) {
            Ok(i) => self.vals[r.start + i],
            Err(_) => 0.0,
        }
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let n = self.num_nodes();
        let mut m = Array2::zeros((n, n));
        for u in 0..n {
            for (w, v) in self.row(u) {
                m[[u, w]] = v;
            }
        }
        m
    }

    /// `self · h`
    pub fn matmul<F: Real>(&self, h: &Array2<F>) -> Array2<F> {
        let n = self.num_nodes();
        assert_eq!(h.nrows(), n, "row count mismatch");
        let mut out = Array2::zeros((n, h.ncols()));
        for u in 0..n {
            let mut dst = out.row_mut(u);
            for (w, v) in self.row(u) {
                dst.scaled_add(F::from_f64_lossy(v), &h.row(w));
            }
        }
        out
    }

    /// `selfᵀ · h`. Equal to [`matmul`](Self::matmul) for the symmetric kind.
    pub fn transpose_matmul<F: Real>(&self, h: &Array2<F>) -> Array2<F> {
        if self.kind == NormKind::Sym {
            return self.matmul(h);
        }
        let n = self.num_nodes();
        assert_eq!(h.nrows(), n, "row count mismatch");
        let mut out = Array2::zeros((n, h.ncols()));
        for u in 0..n {
            let src = h.row(u);
            for (w, v) in self.row(u) {
                out.row_mut(w).scaled_add(F::from_f64_lossy(v), &src);
            }
        }
        out
    }

    /// Row vector times matrix: `r · self`, for a dense row over local ids.
    pub fn left_mul_row(&self, r: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.num_nodes()];
        for (u, &ru) in r.iter().enumerate() {
            if ru == 0.0 {
                continue;
            }
            for (w, v) in self.row(u) {
                out[w] += ru * v;
            }
        }
        out
    }
}
