//! ε-insensitive support vector regression solved in the dual by
//! sequential minimal optimization.
//!
//! The dual is posed over `2n` variables `a = [α; α*]` with signs
//! `s = [+1; -1]`:
//!
//! ```text
//! min ½ aᵀQa + pᵀa   s.t.  sᵀa = 0,  0 ≤ a ≤ C
//! Q_tu = s_t s_u K(i_t, i_u),  p = [ε - y; ε + y]
//! ```
//!
//! Working pairs are chosen by maximal violation with second-order
//! gain, and the solver stops once the KKT gap `m(a) - M(a)` drops below
//! the tolerance.

use serde::{Deserialize, Serialize};

use super::kernel::{cross_kernel, CompositeKernelParams};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvrParams {
    pub c: f64,
    pub epsilon: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub kernel: CompositeKernelParams,
}

impl Default for SvrParams {
    fn default() -> Self {
        SvrParams {
            c: 10.0,
            epsilon: 0.01,
            tol: 1e-6,
            max_iter: 100_000,
            kernel: CompositeKernelParams::default(),
        }
    }
}

impl SvrParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.c.is_finite() && self.c > 0.0) {
            return Err(Error::InvalidHyperparameter(format!("SVR C must be positive, got {}", self.c)));
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(Error::InvalidHyperparameter(format!(
                "SVR epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if !(self.tol > 0.0) || self.max_iter == 0 {
            return Err(Error::InvalidHyperparameter("SVR tol and max_iter must be positive".into()));
        }
        self.kernel.validate()
    }
}

/// Result of one dual solve.
#[derive(Debug, Clone, PartialEq)]
pub struct DualSolution {
    /// `α - α*` per training row.
    pub coef: Vec<f64>,
    pub bias: f64,
    pub iterations: usize,
    /// Final KKT gap.
    pub residual: f64,
}

const TAU: f64 = 1e-12;

/// Solves the dual for one target column given the training Gram matrix
/// (white noise included on its diagonal).
pub fn solve_dual(gram: &Matrix, y: &[f64], params: &SvrParams) -> Result<DualSolution> {
    let n = y.len();
    let c = params.c;
    let l2 = 2 * n;
    let sign = |t: usize| if t < n { 1.0 } else { -1.0 };
    let point = |t: usize| if t < n { t } else { t - n };
    let mut a = vec![0.0; l2];
    let mut grad: Vec<f64> = (0..l2)
        .map(|t| {
            if t < n {
                params.epsilon - y[t]
            } else {
                params.epsilon + y[t - n]
            }
        })
        .collect();
    let q = |t: usize, u: usize| sign(t) * sign(u) * gram.get(point(t), point(u));
    let at_upper = |a: f64| a >= c;
    let at_lower = |a: f64| a <= 0.0;

    let mut iterations = 0;
    let residual = loop {
        // maximal violating index from I_up
        let mut gmax = f64::NEG_INFINITY;
        let mut i_sel = usize::MAX;
        for t in 0..l2 {
            let s = sign(t);
            let eligible = if s > 0.0 { !at_upper(a[t]) } else { !at_lower(a[t]) };
            if eligible && -s * grad[t] >= gmax {
                gmax = -s * grad[t];
                i_sel = t;
            }
        }
        let mut gmax2 = f64::NEG_INFINITY;
        let mut j_sel = usize::MAX;
        let mut obj_min = f64::INFINITY;
        if i_sel != usize::MAX {
            let si = sign(i_sel);
            let qii = gram.get(point(i_sel), point(i_sel));
            for t in 0..l2 {
                let s = sign(t);
                let eligible = if s > 0.0 { !at_lower(a[t]) } else { !at_upper(a[t]) };
                if !eligible {
                    continue;
                }
                let yg = s * grad[t];
                if yg >= gmax2 {
                    gmax2 = yg;
                }
                let grad_diff = gmax + yg;
                if grad_diff > 0.0 {
                    let qtt = gram.get(point(t), point(t));
                    let quad = qii + qtt - 2.0 * si * s * q(i_sel, t);
                    let quad = if quad > 0.0 { quad } else { TAU };
                    let obj = -(grad_diff * grad_diff) / quad;
                    if obj <= obj_min {
                        obj_min = obj;
                        j_sel = t;
                    }
                }
            }
        }
        let gap = gmax + gmax2;
        if i_sel == usize::MAX || j_sel == usize::MAX || gap < params.tol {
            break gap.max(0.0);
        }
        if iterations >= params.max_iter {
            return Err(Error::NonConvergence {
                iterations,
                residual: gap,
            });
        }
        iterations += 1;

        let (i, j) = (i_sel, j_sel);
        let (old_i, old_j) = (a[i], a[j]);
        let qij = q(i, j);
        let qii = q(i, i);
        let qjj = q(j, j);
        if sign(i) != sign(j) {
            let quad = {
                let v = qii + qjj + 2.0 * qij;
                if v > 0.0 {
                    v
                } else {
                    TAU
                }
            };
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = a[i] - a[j];
            a[i] += delta;
            a[j] += delta;
            if diff > 0.0 {
                if a[j] < 0.0 {
                    a[j] = 0.0;
                    a[i] = diff;
                }
            } else if a[i] < 0.0 {
                a[i] = 0.0;
                a[j] = -diff;
            }
            if diff > 0.0 {
                if a[i] > c {
                    a[i] = c;
                    a[j] = c - diff;
                }
            } else if a[j] > c {
                a[j] = c;
                a[i] = c + diff;
            }
        } else {
            let quad = {
                let v = qii + qjj - 2.0 * qij;
                if v > 0.0 {
                    v
                } else {
                    TAU
                }
            };
            let delta = (grad[i] - grad[j]) / quad;
            let sum = a[i] + a[j];
            a[i] -= delta;
            a[j] += delta;
            if sum > c {
                if a[i] > c {
                    a[i] = c;
                    a[j] = sum - c;
                }
            } else if a[j] < 0.0 {
                a[j] = 0.0;
                a[i] = sum;
            }
            if sum > c {
                if a[j] > c {
                    a[j] = c;
                    a[i] = sum - c;
                }
            } else if a[i] < 0.0 {
                a[i] = 0.0;
                a[j] = sum;
            }
        }
        let (di, dj) = (a[i] - old_i, a[j] - old_j);
        if di != 0.0 || dj != 0.0 {
            for (t, g) in grad.iter_mut().enumerate() {
                *g += q(t, i) * di + q(t, j) * dj;
            }
        }
    };

    // offset from free variables, or the midpoint of the feasible interval
    let mut ub = f64::INFINITY;
    let mut lb = f64::NEG_INFINITY;
    let mut sum_free = 0.0;
    let mut n_free = 0usize;
    for t in 0..l2 {
        let s = sign(t);
        let yg = s * grad[t];
        if at_upper(a[t]) {
            if s < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if at_lower(a[t]) {
            if s > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            n_free += 1;
            sum_free += yg;
        }
    }
    let rho = if n_free > 0 {
        sum_free / n_free as f64
    } else {
        (ub + lb) / 2.0
    };
    let coef = (0..n).map(|i| a[i] - a[i + n]).collect();
    Ok(DualSolution {
        coef,
        bias: -rho,
        iterations,
        residual,
    })
}

/// Support rows and their dual coefficients for one output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvrModel {
    pub support: Matrix,
    pub coef: Vec<f64>,
    pub bias: f64,
    pub kernel: CompositeKernelParams,
    pub iterations: usize,
    pub residual: f64,
}

impl SvrModel {
    pub fn from_solution(inputs: &Matrix, sol: DualSolution, kernel: CompositeKernelParams) -> Self {
        let idx: Vec<usize> = (0..sol.coef.len()).filter(|&i| sol.coef[i] != 0.0).collect();
        SvrModel {
            support: inputs.select_rows(&idx),
            coef: idx.iter().map(|&i| sol.coef[i]).collect(),
            bias: sol.bias,
            kernel,
            iterations: sol.iterations,
            residual: sol.residual,
        }
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        let k = cross_kernel(&self.support, x, &self.kernel);
        k.iter().zip(&self.coef).map(|(a, b)| a * b).sum::<f64>() + self.bias
    }
}
