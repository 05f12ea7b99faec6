//! Locally weighted regression with Gaussian receptive fields.
//!
//! Receptive fields are allocated in a single pass over the training rows:
//! a row becomes a new center when no existing field activates above
//! `w_gen`. All fields share the fixed metric `D = r·I`. Each field then
//! gets a local linear model `θ` (slopes on `x - c`, then a bias) fitted
//! by weighted least squares, and predictions blend the local models by
//! their normalized activations.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Cholesky;
use crate::matrix::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LwprParams {
    /// Diagonal of the distance matrix `D = r·I`.
    pub r: f64,
    /// Activation below which a training row spawns a new field.
    pub w_gen: f64,
    /// Ridge on the local slopes.
    pub ridge: f64,
}

impl Default for LwprParams {
    fn default() -> Self {
        LwprParams {
            r: 0.5,
            w_gen: 0.1,
            ridge: 1e-6,
        }
    }
}

impl LwprParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.r.is_finite() && self.r > 0.0) {
            return Err(Error::InvalidHyperparameter(format!("LWPR r must be positive, got {}", self.r)));
        }
        if !(self.w_gen > 0.0 && self.w_gen < 1.0) {
            return Err(Error::InvalidHyperparameter(format!(
                "LWPR w_gen must lie in (0, 1), got {}",
                self.w_gen
            )));
        }
        if !(self.ridge >= 0.0 && self.ridge.is_finite()) {
            return Err(Error::InvalidHyperparameter("LWPR ridge must be non-negative".into()));
        }
        Ok(())
    }
}

/// A Gaussian receptive field with metric `D = metric·I`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReceptiveField {
    pub center: Vec<f64>,
    pub metric: f64,
}

impl ReceptiveField {
    /// `-(x - c)ᵀ D (x - c) / 2`.
    #[inline]
    pub fn log_activation(&self, x: &[f64]) -> f64 {
        let d2: f64 = x
            .iter()
            .zip(&self.center)
            .map(|(a, c)| {
                let d = a - c;
                d * d
            })
            .sum();
        -0.5 * self.metric * d2
    }

    #[inline]
    pub fn activation(&self, x: &[f64]) -> f64 {
        self.log_activation(x).exp()
    }

    /// The full distance matrix.
    pub fn distance_matrix(&self) -> Matrix {
        let n = self.center.len();
        let mut d = Matrix::zeros(n, n);
        for i in 0..n {
            d.set(i, i, self.metric);
        }
        d
    }

    /// Local linear prediction `[(x - c)ᵀ, 1] θ`.
    #[inline]
    pub fn local_prediction(&self, theta: &[f64], x: &[f64]) -> f64 {
        let dim = self.center.len();
        let slope: f64 = x
            .iter()
            .zip(&self.center)
            .zip(&theta[..dim])
            .map(|((a, c), t)| (a - c) * t)
            .sum();
        slope + theta[dim]
    }
}

/// Gaussian activation `exp(-½ (x - c)ᵀ D (x - c))` for a general
/// distance matrix `D`.
pub fn gaussian_activation(x: &[f64], center: &[f64], distance: &Matrix) -> f64 {
    let n = center.len();
    let diff: Vec<f64> = x.iter().zip(center).map(|(a, c)| a - c).collect();
    let mut q = 0.0;
    for i in 0..n {
        for j in 0..n {
            q += diff[i] * distance.get(i, j) * diff[j];
        }
    }
    (-0.5 * q).exp()
}

/// Receptive fields shared by every output, one `θ` set per output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LwprModel {
    pub fields: Vec<ReceptiveField>,
    /// `thetas[output][field]`, each of length `input_dim + 1`.
    pub thetas: Vec<Vec<Vec<f64>>>,
}

/// Single-pass receptive-field allocation over standardized inputs.
pub fn allocate_fields(inputs: &Matrix, params: &LwprParams) -> Vec<ReceptiveField> {
    let mut fields: Vec<ReceptiveField> = Vec::new();
    for row in inputs.row_iter() {
        let covered = fields.iter().any(|f| f.activation(row) >= params.w_gen);
        if !covered {
            fields.push(ReceptiveField {
                center: row.to_vec(),
                metric: params.r,
            });
        }
    }
    fields
}

// Weights below this are dropped from the local fits.
const MIN_FIT_WEIGHT: f64 = 1e-12;
const BIAS_RIDGE: f64 = 1e-12;

fn fit_local(
    field: &ReceptiveField,
    inputs: &Matrix,
    targets: &Matrix,
    ridge: f64,
) -> Vec<Vec<f64>> {
    let dim = inputs.cols();
    let p = dim + 1;
    let outs = targets.cols();
    let mut gram = Matrix::zeros(p, p);
    let mut rhs = vec![vec![0.0; p]; outs];
    let mut design = vec![0.0; p];
    for (r, row) in inputs.row_iter().enumerate() {
        let w = field.activation(row);
        if w < MIN_FIT_WEIGHT {
            continue;
        }
        for (d, (a, c)) in design.iter_mut().zip(row.iter().zip(&field.center)) {
            *d = a - c;
        }
        design[dim] = 1.0;
        for i in 0..p {
            let wi = w * design[i];
            for j in 0..=i {
                let v = gram.get(i, j) + wi * design[j];
                gram.set(i, j, v);
            }
            for (o, acc) in rhs.iter_mut().enumerate() {
                acc[i] += wi * targets.get(r, o);
            }
        }
    }
    for i in 0..p {
        let reg = if i < dim { ridge } else { BIAS_RIDGE };
        let v = gram.get(i, i) + reg;
        gram.set(i, i, v);
        for j in 0..i {
            let v = gram.get(i, j);
            gram.set(j, i, v);
        }
    }
    let mut jitter = 0.0;
    let chol = loop {
        if let Some(c) = Cholesky::factor(&gram, jitter) {
            break c;
        }
        jitter = if jitter == 0.0 { 1e-10 } else { jitter * 10.0 };
    };
    rhs.iter().map(|b| chol.solve(b)).collect()
}

/// Fits receptive fields and local models on standardized inputs, one
/// column of `targets` per output.
pub fn fit(inputs: &Matrix, targets: &Matrix, params: &LwprParams) -> Result<LwprModel> {
    params.validate()?;
    let first = inputs.row(0);
    if inputs.row_iter().all(|r| r == first) {
        return Err(Error::DegenerateData("all LWPR inputs are identical".into()));
    }
    let fields = allocate_fields(inputs, params);
    let per_field: Vec<Vec<Vec<f64>>> = fields
        .iter()
        .map(|f| fit_local(f, inputs, targets, params.ridge))
        .collect();
    let thetas = (0..targets.cols())
        .map(|o| per_field.iter().map(|pf| pf[o].clone()).collect())
        .collect();
    Ok(LwprModel { fields, thetas })
}

impl LwprModel {
    /// Activations normalized to sum to one, computed in log space so that
    /// far-away queries fall back to the closest field instead of 0/0.
    pub fn normalized_weights(&self, x: &[f64]) -> Vec<f64> {
        let logs: Vec<f64> = self.fields.iter().map(|f| f.log_activation(x)).collect();
        let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut w: Vec<f64> = logs.iter().map(|l| (l - max).exp()).collect();
        let total: f64 = w.iter().sum();
        for v in &mut w {
            *v /= total;
        }
        w
    }

    pub fn predict(&self, output: usize, x: &[f64]) -> f64 {
        let weights = self.normalized_weights(x);
        self.fields
            .iter()
            .zip(&self.thetas[output])
            .zip(weights)
            .map(|((f, theta), w)| w * f.local_prediction(theta, x))
            .sum()
    }

    pub fn outputs(&self) -> usize {
        self.thetas.len()
    }
}
