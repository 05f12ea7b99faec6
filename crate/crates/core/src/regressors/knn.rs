//! Distance-weighted k-nearest-neighbour regression.
//!
//! Distance is the coefficient-weighted sum of per-coordinate absolute
//! differences (all coefficients 1). The `k` nearest training rows vote
//! with weights proportional to `(1 / (1 + d))^p`, normalized to sum to
//! one. Ties in distance go to the lower training index.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::preprocess::make_folds;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KnnParams {
    /// Fixed neighbour count; `None` selects it per output by inner CV.
    pub k: Option<usize>,
    /// Distance weighting exponent.
    pub p: f64,
    /// Upper end of the odd-k search grid.
    pub k_max: usize,
    pub inner_folds: usize,
}

impl Default for KnnParams {
    fn default() -> Self {
        KnnParams {
            k: None,
            p: 2.0,
            k_max: 99,
            inner_folds: 5,
        }
    }
}

impl KnnParams {
    pub fn validate(&self) -> Result<()> {
        if self.k == Some(0) {
            return Err(Error::InvalidHyperparameter("KNN k must be at least 1".into()));
        }
        if !(self.p.is_finite() && self.p >= 0.0) {
            return Err(Error::InvalidHyperparameter(format!("KNN p must be non-negative, got {}", self.p)));
        }
        if self.k_max == 0 || self.inner_folds < 2 {
            return Err(Error::InvalidHyperparameter(
                "KNN k_max must be >= 1 and inner_folds >= 2".into(),
            ));
        }
        Ok(())
    }
}

#[inline]
pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// Normalized neighbour weights for the given distances.
pub fn neighbor_weights(distances: &[f64], p: f64) -> Vec<f64> {
    let raw: Vec<f64> = distances.iter().map(|d| (1.0 / (1.0 + d)).powf(p)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / total).collect()
}

/// The `k` nearest rows of `train` to `query` as `(index, distance)`,
/// nearest first.
pub fn nearest(train: &Matrix, query: &[f64], k: usize) -> Vec<(usize, f64)> {
    let mut all: Vec<(usize, f64)> = train
        .row_iter()
        .enumerate()
        .map(|(i, row)| (i, distance(row, query)))
        .collect();
    let cmp = |a: &(usize, f64), b: &(usize, f64)| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0));
    let k = k.min(all.len());
    if k < all.len() {
        all.select_nth_unstable_by(k, cmp);
        all.truncate(k);
    }
    all.sort_by(cmp);
    all
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub inputs: Matrix,
    pub targets: Matrix,
    /// Neighbour count per output.
    pub ks: Vec<usize>,
    pub p: f64,
}

/// Odd candidates `1, 3, 5, ...` up to `min(k_max, n / 2)`.
pub fn k_grid(n: usize, k_max: usize) -> Vec<usize> {
    let upper = k_max.min(n / 2).max(1);
    (1..=upper).step_by(2).collect()
}

fn select_k(inputs: &Matrix, targets: &Matrix, params: &KnnParams, seed: u64) -> Result<Vec<usize>> {
    let n = inputs.rows();
    let grid = k_grid(n, params.k_max);
    let outs = targets.cols();
    if n < params.inner_folds * 2 {
        return Ok(vec![1; outs]);
    }
    let plan = make_folds(n, params.inner_folds, seed)?;
    let kmax = *grid.last().unwrap_or(&1);
    // sse[output][grid index]
    let mut sse = vec![vec![0.0; grid.len()]; outs];
    for fold in 0..plan.fold_count {
        let train_idx = plan.train_rows(fold);
        let train = inputs.select_rows(&train_idx);
        for q in plan.test_rows(fold) {
            let nb = nearest(&train, inputs.row(q), kmax.min(train_idx.len()));
            for (gi, &k) in grid.iter().enumerate() {
                let take = k.min(nb.len());
                let dists: Vec<f64> = nb[..take].iter().map(|&(_, d)| d).collect();
                let w = neighbor_weights(&dists, params.p);
                for (o, acc) in sse.iter_mut().enumerate() {
                    let pred: f64 = nb[..take]
                        .iter()
                        .zip(&w)
                        .map(|(&(i, _), wi)| wi * targets.get(train_idx[i], o))
                        .sum();
                    let err = pred - targets.get(q, o);
                    acc[gi] += err * err;
                }
            }
        }
    }
    Ok(sse
        .iter()
        .map(|errs| {
            let mut best = 0;
            for (gi, &e) in errs.iter().enumerate() {
                if e < errs[best] {
                    best = gi;
                }
            }
            grid[best]
        })
        .collect())
}

pub fn fit(inputs: &Matrix, targets: &Matrix, params: &KnnParams, seed: u64) -> Result<KnnModel> {
    params.validate()?;
    let n = inputs.rows();
    let ks = match params.k {
        Some(k) if k > n => return Err(Error::KTooLarge { k, rows: n }),
        Some(k) => vec![k; targets.cols()],
        None => select_k(inputs, targets, params, seed)?,
    };
    Ok(KnnModel {
        inputs: inputs.clone(),
        targets: targets.clone(),
        ks,
        p: params.p,
    })
}

impl KnnModel {
    pub fn predict_all(&self, x: &[f64]) -> Vec<f64> {
        let kmax = self.ks.iter().copied().max().unwrap_or(1);
        let nb = nearest(&self.inputs, x, kmax);
        self.ks
            .iter()
            .enumerate()
            .map(|(o, &k)| {
                let dists: Vec<f64> = nb[..k].iter().map(|&(_, d)| d).collect();
                let w = neighbor_weights(&dists, self.p);
                nb[..k]
                    .iter()
                    .zip(&w)
                    .map(|(&(i, _), wi)| wi * self.targets.get(i, o))
                    .sum()
            })
            .collect()
    }
}
