//! Gradient-boosted regression trees with second-order regularized
//! splits, exact greedy search.
//!
//! Loss per sample is `½ (ŷ - y)²`, so `g = ŷ - y` and `h = 1`. A leaf's
//! weight is `-G / (H + λ)` and a split is kept only when its loss
//! reduction exceeds `γ`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Hessian of `½ (ŷ - y)²` with respect to `ŷ`.
pub const SQUARED_LOSS_HESSIAN: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct XgbParams {
    pub rounds: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub lambda: f64,
    pub gamma: f64,
    pub min_child_weight: f64,
    pub base_score: f64,
}

impl Default for XgbParams {
    fn default() -> Self {
        XgbParams {
            rounds: 100,
            learning_rate: 0.3,
            max_depth: 3,
            lambda: 1.0,
            gamma: 0.0,
            min_child_weight: 1.0,
            base_score: 0.0,
        }
    }
}

impl XgbParams {
    pub fn validate(&self) -> Result<()> {
        if self.rounds == 0 || self.max_depth == 0 {
            return Err(Error::InvalidHyperparameter(
                "XGBoost rounds and max_depth must be at least 1".into(),
            ));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidHyperparameter("XGBoost learning rate must be positive".into()));
        }
        if !(self.lambda >= 0.0 && self.gamma >= 0.0 && self.min_child_weight >= 0.0) {
            return Err(Error::InvalidHyperparameter(
                "XGBoost lambda, gamma and min_child_weight must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Leaf {
        value: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// Nodes in creation order; index 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    /// Leaf weight reached by `x`, before shrinkage.
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { value } => return *value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if x[*feature] < *threshold { *left } else { *right },
            }
        }
    }

    pub fn leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, Node::Leaf { .. }))
            .count()
    }
}

/// `-G / (H + λ)`.
#[inline]
pub fn leaf_weight(g: f64, h: f64, lambda: f64) -> f64 {
    if h + lambda == 0.0 {
        0.0
    } else {
        -g / (h + lambda)
    }
}

#[inline]
fn score(g: f64, h: f64, lambda: f64) -> f64 {
    if h + lambda == 0.0 {
        0.0
    } else {
        g * g / (h + lambda)
    }
}

/// Loss reduction of splitting `(G, H)` into left/right halves, net of γ.
#[inline]
pub fn split_gain(gl: f64, hl: f64, gr: f64, hr: f64, lambda: f64, gamma: f64) -> f64 {
    0.5 * (score(gl, hl, lambda) + score(gr, hr, lambda) - score(gl + gr, hl + hr, lambda)) - gamma
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitCandidate {
    pub feature: usize,
    pub threshold: f64,
    pub gain: f64,
}

// Splits whose net gain is within rounding of zero are rejected.
const GAIN_EPS: f64 = 1e-12;

/// Best split of `rows` over every feature and every boundary between
/// distinct sorted values; `None` if nothing beats γ. Ties go to the lower
/// feature, then the lower threshold.
pub fn find_best_split(
    x: &Matrix,
    rows: &[usize],
    grad: &[f64],
    hess: &[f64],
    params: &XgbParams,
) -> Option<SplitCandidate> {
    let g_total: f64 = rows.iter().map(|&r| grad[r]).sum();
    let h_total: f64 = rows.iter().map(|&r| hess[r]).sum();
    let floor = GAIN_EPS * (1.0 + score(g_total, h_total, params.lambda));
    let mut best: Option<SplitCandidate> = None;
    let mut order = rows.to_vec();
    for feature in 0..x.cols() {
        order.sort_by(|&a, &b| x.get(a, feature).total_cmp(&x.get(b, feature)).then(a.cmp(&b)));
        let mut gl = 0.0;
        let mut hl = 0.0;
        for w in 0..order.len().saturating_sub(1) {
            let r = order[w];
            gl += grad[r];
            hl += hess[r];
            let lo = x.get(r, feature);
            let hi = x.get(order[w + 1], feature);
            if lo == hi {
                continue;
            }
            let (gr, hr) = (g_total - gl, h_total - hl);
            if hl < params.min_child_weight || hr < params.min_child_weight {
                continue;
            }
            let gain = split_gain(gl, hl, gr, hr, params.lambda, params.gamma);
            if gain > floor && best.is_none_or(|b| gain > b.gain) {
                best = Some(SplitCandidate {
                    feature,
                    threshold: 0.5 * (lo + hi),
                    gain,
                });
            }
        }
    }
    best
}

fn grow(
    x: &Matrix,
    rows: Vec<usize>,
    grad: &[f64],
    hess: &[f64],
    depth: usize,
    params: &XgbParams,
    nodes: &mut Vec<Node>,
) -> usize {
    let id = nodes.len();
    let g: f64 = rows.iter().map(|&r| grad[r]).sum();
    let h: f64 = rows.iter().map(|&r| hess[r]).sum();
    nodes.push(Node::Leaf {
        value: leaf_weight(g, h, params.lambda),
    });
    if depth >= params.max_depth || rows.len() < 2 {
        return id;
    }
    let Some(split) = find_best_split(x, &rows, grad, hess, params) else {
        return id;
    };
    let (l, r): (Vec<usize>, Vec<usize>) = rows
        .into_iter()
        .partition(|&i| x.get(i, split.feature) < split.threshold);
    let left = grow(x, l, grad, hess, depth + 1, params, nodes);
    let right = grow(x, r, grad, hess, depth + 1, params, nodes);
    nodes[id] = Node::Split {
        feature: split.feature,
        threshold: split.threshold,
        left,
        right,
    };
    id
}

/// One tree fitted to the given gradients and Hessians.
pub fn build_tree(x: &Matrix, grad: &[f64], hess: &[f64], params: &XgbParams) -> Tree {
    let mut nodes = Vec::new();
    grow(x, (0..x.rows()).collect(), grad, hess, 0, params, &mut nodes);
    Tree { nodes }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XgbModel {
    pub base_score: f64,
    pub learning_rate: f64,
    pub trees: Vec<Tree>,
}

impl XgbModel {
    pub fn predict(&self, x: &[f64]) -> f64 {
        self.base_score
            + self
                .trees
                .iter()
                .map(|t| self.learning_rate * t.predict(x))
                .sum::<f64>()
    }
}

pub fn fit(x: &Matrix, y: &[f64], params: &XgbParams) -> Result<XgbModel> {
    params.validate()?;
    let n = x.rows();
    let mut pred = vec![params.base_score; n];
    let hess = vec![SQUARED_LOSS_HESSIAN; n];
    let mut trees = Vec::with_capacity(params.rounds);
    let mut grad = vec![0.0; n];
    for _ in 0..params.rounds {
        for i in 0..n {
            grad[i] = pred[i] - y[i];
        }
        let tree = build_tree(x, &grad, &hess, params);
        for (i, p) in pred.iter_mut().enumerate() {
            *p += params.learning_rate * tree.predict(x.row(i));
        }
        trees.push(tree);
    }
    Ok(XgbModel {
        base_score: params.base_score,
        learning_rate: params.learning_rate,
        trees,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_targets_give_single_mean_leaf() {
        let x = Matrix::column_vector(&[0.0, 1.0, 2.0, 3.0, 4.0]);
        let p = XgbParams {
            rounds: 1,
            lambda: 0.0,
            ..Default::default()
        };
        let m = fit(&x, &[2.5; 5], &p).unwrap();
        assert_eq!(m.trees[0].leaves(), 1);
        assert!((m.trees[0].predict(&[1.0]) - 2.5).abs() < 1e-15);
    }

    #[test]
    fn regularized_leaf_value() {
        let x = Matrix::column_vector(&[0.0, 0.0]);
        let p = XgbParams {
            rounds: 1,
            lambda: 2.0,
            ..Default::default()
        };
        let m = fit(&x, &[1.0, 1.0], &p).unwrap();
        assert_eq!(m.trees[0].leaves(), 1);
        assert!((m.trees[0].predict(&[0.0]) - 0.5).abs() < 1e-15);
        assert_eq!(leaf_weight(-2.0, 2.0, 2.0), 0.5);
    }

    #[test]
    fn step_split_between_one_and_two() {
        let x = Matrix::column_vector(&[0.0, 1.0, 2.0, 3.0]);
        let p = XgbParams {
            rounds: 1,
            max_depth: 1,
            lambda: 0.0,
            gamma: 0.0,
            ..Default::default()
        };
        let m = fit(&x, &[0.0, 0.0, 1.0, 1.0], &p).unwrap();
        let t = &m.trees[0];
        match t.nodes[0] {
            Node::Split { threshold, .. } => assert_eq!(threshold, 1.5),
            ref other => panic!("expected split, got {other:?}"),
        }
        assert_eq!(t.predict(&[0.0]), 0.0);
        assert_eq!(t.predict(&[3.0]), 1.0);
    }

    #[test]
    fn gamma_blocks_weak_splits() {
        let x = Matrix::column_vector(&[0.0, 1.0, 2.0, 3.0]);
        let p = XgbParams {
            rounds: 1,
            max_depth: 1,
            lambda: 0.0,
            gamma: 10.0,
            ..Default::default()
        };
        let m = fit(&x, &[0.0, 0.0, 1.0, 1.0], &p).unwrap();
        assert_eq!(m.trees[0].leaves(), 1);
    }

    #[test]
    fn boosting_fits_a_step() {
        let xs: Vec<f64> = (0..40).map(|i| i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| if x < 20.0 { -1.0 } else { 2.0 }).collect();
        let m = fit(&Matrix::column_vector(&xs), &ys, &XgbParams::default()).unwrap();
        for (x, y) in xs.iter().zip(&ys) {
            assert!((m.predict(&[*x]) - y).abs() < 1e-6);
        }
    }
}
