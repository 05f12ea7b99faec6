//! Gaussian process regression with the composite kernel.
//!
//! All outputs share one kernel and one Cholesky factor of `K + jitter·I`;
//! each output gets its own weight vector `K⁻¹y`. The posterior variance
//! uses `k(x*, x*)` without the white-noise term, since a query never
//! coincides by index with a training row.

use serde::{Deserialize, Serialize};

use super::kernel::{composite_kernel, cross_kernel, gram_matrix, CompositeKernelParams};
use crate::error::{Error, Result};
use crate::linalg::Cholesky;
use crate::matrix::Matrix;

pub const INITIAL_JITTER: f64 = 1e-10;
pub const MAX_JITTER: f64 = 1e-4;
pub const DEFAULT_ROW_CAP: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GprParams {
    pub kernel: CompositeKernelParams,
    pub max_rows: usize,
}

impl Default for GprParams {
    fn default() -> Self {
        GprParams {
            kernel: CompositeKernelParams::default(),
            max_rows: DEFAULT_ROW_CAP,
        }
    }
}

impl GprParams {
    pub fn validate(&self) -> Result<()> {
        if self.max_rows == 0 {
            return Err(Error::InvalidHyperparameter("GPR max_rows must be positive".into()));
        }
        self.kernel.validate()
    }
}

/// Factors `K + jitter·I`, escalating the jitter by ×10 from
/// `INITIAL_JITTER` to `MAX_JITTER`.
pub fn factor_with_jitter(gram: &Matrix) -> Result<(Cholesky, f64)> {
    let mut jitter = INITIAL_JITTER;
    loop {
        if let Some(c) = Cholesky::factor(gram, jitter) {
            return Ok((c, jitter));
        }
        if jitter >= MAX_JITTER {
            return Err(Error::NotPositiveDefinite { jitter });
        }
        jitter = (jitter * 10.0).min(MAX_JITTER);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GprModel {
    pub inputs: Matrix,
    pub kernel: CompositeKernelParams,
    pub factor: Cholesky,
    pub jitter: f64,
    /// `K⁻¹y` per output.
    pub weights: Vec<Vec<f64>>,
}

/// Fits all target columns against the shared factor.
pub fn fit(inputs: &Matrix, targets: &Matrix, params: &GprParams) -> Result<GprModel> {
    params.validate()?;
    let n = inputs.rows();
    if n > params.max_rows {
        return Err(Error::TooManyRows {
            rows: n,
            cap: params.max_rows,
        });
    }
    let gram = gram_matrix(inputs, &params.kernel);
    let (factor, jitter) = factor_with_jitter(&gram)?;
    let weights = (0..targets.cols())
        .map(|o| factor.solve(&targets.column(o)))
        .collect();
    Ok(GprModel {
        inputs: inputs.clone(),
        kernel: params.kernel,
        factor,
        jitter,
        weights,
    })
}

impl GprModel {
    pub fn predict(&self, output: usize, x: &[f64]) -> f64 {
        let k = cross_kernel(&self.inputs, x, &self.kernel);
        k.iter().zip(&self.weights[output]).map(|(a, b)| a * b).sum()
    }

    pub fn predict_all(&self, x: &[f64]) -> Vec<f64> {
        let k = cross_kernel(&self.inputs, x, &self.kernel);
        self.weights
            .iter()
            .map(|w| k.iter().zip(w).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `k(x*, x*) - k*ᵀ K⁻¹ k*`, identical for every output.
    pub fn predict_variance(&self, x: &[f64]) -> f64 {
        let k = cross_kernel(&self.inputs, x, &self.kernel);
        let v = self.factor.solve_lower(&k);
        composite_kernel(x, x, &self.kernel, false) - v.iter().map(|a| a * a).sum::<f64>()
    }
}
