//! Fully connected ReLU network with a linear scalar output, trained on
//! mean squared error with L-BFGS.
//!
//! For fixed targets, minimizing the squared error is the same as
//! maximizing R², so the objective is plain MSE.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::lbfgs::{minimize, LbfgsOptions};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MlpParams {
    pub hidden: Vec<usize>,
    pub max_iter: usize,
    pub gtol: f64,
    pub ftol: f64,
    pub history: usize,
    /// Weight decay on weights (not biases), scaled by `1/n` so the
    /// objective is `MSE + alpha·‖W‖² / n`.
    pub alpha: f64,
}

impl Default for MlpParams {
    fn default() -> Self {
        MlpParams {
            hidden: vec![64],
            max_iter: 500,
            gtol: 1e-10,
            ftol: 1e-12,
            history: 10,
            alpha: 1e-4,
        }
    }
}

impl MlpParams {
    pub fn validate(&self) -> Result<()> {
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            return Err(Error::InvalidHyperparameter(
                "MLP needs at least one hidden layer of width >= 1".into(),
            ));
        }
        if self.max_iter == 0 || self.history == 0 {
            return Err(Error::InvalidHyperparameter("MLP max_iter and history must be positive".into()));
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::InvalidHyperparameter("MLP alpha must be non-negative".into()));
        }
        Ok(())
    }
}

/// Layer widths from input to the single output.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Architecture {
    pub widths: Vec<usize>,
}

impl Architecture {
    pub fn new(input_dim: usize, hidden: &[usize]) -> Self {
        let mut widths = Vec::with_capacity(hidden.len() + 2);
        widths.push(input_dim);
        widths.extend_from_slice(hidden);
        widths.push(1);
        Architecture { widths }
    }

    /// Offsets of each layer's weight block (row-major, `out × in`),
    /// followed by its bias vector.
    fn layer_offsets(&self) -> Vec<(usize, usize, usize, usize)> {
        let mut off = 0;
        self.widths
            .windows(2)
            .map(|w| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let wo = off;
                let bo = wo + fan_in * fan_out;
                off = bo + fan_out;
                (fan_in, fan_out, wo, bo)
            })
            .collect()
    }

    pub fn param_count(&self) -> usize {
        self.widths.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }

    /// Glorot-uniform weights and biases.
    pub fn init(&self, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = vec![0.0; self.param_count()];
        for (fan_in, fan_out, wo, bo) in self.layer_offsets() {
            let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
            for v in &mut params[wo..bo + fan_out] {
                *v = rng.gen_range(-bound..bound);
            }
        }
        params
    }

    pub fn forward(&self, params: &[f64], x: &[f64]) -> f64 {
        let layers = self.layer_offsets();
        let last = layers.len() - 1;
        let mut act = x.to_vec();
        for (li, &(fan_in, fan_out, wo, bo)) in layers.iter().enumerate() {
            let mut next = vec![0.0; fan_out];
            for (o, n) in next.iter_mut().enumerate() {
                let w = &params[wo + o * fan_in..wo + (o + 1) * fan_in];
                let z = w.iter().zip(&act).map(|(a, b)| a * b).sum::<f64>() + params[bo + o];
                *n = if li == last { z } else { z.max(0.0) };
            }
            act = next;
        }
        act[0]
    }

    /// Mean squared error plus `l2·‖W‖²`, and its gradient by backprop.
    pub fn loss_and_grad(&self, params: &[f64], x: &Matrix, y: &[f64], l2: f64, grad: &mut [f64]) -> f64 {
        let layers = self.layer_offsets();
        let last = layers.len() - 1;
        let n = x.rows();
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut loss = 0.0;
        let mut acts: Vec<Vec<f64>> = Vec::with_capacity(layers.len() + 1);
        for r in 0..n {
            acts.clear();
            acts.push(x.row(r).to_vec());
            for (li, &(fan_in, fan_out, wo, bo)) in layers.iter().enumerate() {
                let prev = &acts[li];
                let mut next = vec![0.0; fan_out];
                for (o, nv) in next.iter_mut().enumerate() {
                    let w = &params[wo + o * fan_in..wo + (o + 1) * fan_in];
                    let z = w.iter().zip(prev).map(|(a, b)| a * b).sum::<f64>() + params[bo + o];
                    *nv = if li == last { z } else { z.max(0.0) };
                }
                acts.push(next);
            }
            let err = acts[layers.len()][0] - y[r];
            loss += err * err;
            // d(loss)/d(output) for the mean
            let mut delta = vec![2.0 * err / n as f64];
            for li in (0..layers.len()).rev() {
                let (fan_in, fan_out, wo, bo) = layers[li];
                let input = &acts[li];
                for o in 0..fan_out {
                    let d = delta[o];
                    if d == 0.0 {
                        continue;
                    }
                    grad[bo + o] += d;
                    let gw = &mut grad[wo + o * fan_in..wo + (o + 1) * fan_in];
                    for (g, a) in gw.iter_mut().zip(input) {
                        *g += d * a;
                    }
                }
                if li == 0 {
                    break;
                }
                let mut prev_delta = vec![0.0; fan_in];
                for (i, pd) in prev_delta.iter_mut().enumerate() {
                    if input[i] <= 0.0 {
                        continue;
                    }
                    let mut s = 0.0;
                    for (o, d) in delta.iter().enumerate() {
                        s += params[wo + o * fan_in + i] * d;
                    }
                    *pd = s;
                }
                debug_assert!(fan_out == delta.len());
                delta = prev_delta;
            }
        }
        loss /= n as f64;
        if l2 > 0.0 {
            for &(fan_in, fan_out, wo, _) in &layers {
                for k in wo..wo + fan_in * fan_out {
                    loss += l2 * params[k] * params[k];
                    grad[k] += 2.0 * l2 * params[k];
                }
            }
        }
        loss
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub architecture: Architecture,
    pub params: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub final_loss: f64,
    pub grad_norm: f64,
}

impl MlpModel {
    pub fn predict(&self, x: &[f64]) -> f64 {
        self.architecture.forward(&self.params, x)
    }
}

/// Trains one scalar-output network. Running out of iterations is not
/// an error; the model is returned with `converged = false`.
pub fn fit(x: &Matrix, y: &[f64], params: &MlpParams, seed: u64) -> Result<MlpModel> {
    params.validate()?;
    let arch = Architecture::new(x.cols(), &params.hidden);
    let init = arch.init(seed);
    let opts = LbfgsOptions {
        history: params.history,
        max_iter: params.max_iter,
        gtol: params.gtol,
        ftol: params.ftol,
    };
    let res = minimize(
        |p, g| arch.loss_and_grad(p, x, y, params.alpha / x.rows() as f64, g),
        init,
        &opts,
    );
    let converged = res.converged();
    if !converged {
        log::debug!(
            "MLP stopped after {} iterations ({:?}), loss {:e}, |g| {:e}",
            res.iterations,
            res.termination,
            res.value,
            res.grad_norm
        );
    }
    Ok(MlpModel {
        architecture: arch,
        params: res.x,
        iterations: res.iterations,
        converged,
        final_loss: res.value,
        grad_norm: res.grad_norm,
    })
}
