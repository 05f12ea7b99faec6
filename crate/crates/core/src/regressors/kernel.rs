//! Constant + Matérn(ν = 3/2) + white-noise kernel shared by SVR and GPR.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

const SQRT_3: f64 = 1.732_050_807_568_877_2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CompositeKernelParams {
    /// The constant term contributes `constant_value²`.
    pub constant_value: f64,
    pub length_scale: f64,
    /// Only 1.5 is supported.
    pub nu: f64,
    /// Noise level Λ; the white term contributes `Λ²` on like-index entries.
    pub white_noise: f64,
}

impl Default for CompositeKernelParams {
    fn default() -> Self {
        CompositeKernelParams {
            constant_value: 1.0,
            length_scale: 1.0,
            nu: 1.5,
            white_noise: 1.0,
        }
    }
}

impl CompositeKernelParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.length_scale.is_finite() && self.length_scale > 0.0) {
            return Err(Error::InvalidHyperparameter(format!(
                "Matérn length scale must be positive, got {}",
                self.length_scale
            )));
        }
        if !(self.white_noise.is_finite() && self.white_noise >= 0.0) {
            return Err(Error::InvalidHyperparameter(format!(
                "white noise level must be non-negative, got {}",
                self.white_noise
            )));
        }
        if !self.constant_value.is_finite() {
            return Err(Error::InvalidHyperparameter("constant value must be finite".into()));
        }
        if self.nu != 1.5 {
            return Err(Error::InvalidHyperparameter(format!(
                "only nu = 1.5 is supported, got {}",
                self.nu
            )));
        }
        Ok(())
    }
}

#[inline]
fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = x - y;
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

/// `(1 + √3 r/ℓ) exp(-√3 r/ℓ)` with `r` the Euclidean distance.
#[inline]
pub fn matern15(a: &[f64], b: &[f64], length_scale: f64) -> f64 {
    let s = SQRT_3 * euclidean(a, b) / length_scale;
    (1.0 + s) * (-s).exp()
}

/// Kernel value between two points. `on_diagonal` marks a like-index
/// training pair, the only case that carries the white-noise term.
#[inline]
pub fn composite_kernel(a: &[f64], b: &[f64], p: &CompositeKernelParams, on_diagonal: bool) -> f64 {
    let white = if on_diagonal {
        p.white_noise * p.white_noise
    } else {
        0.0
    };
    p.constant_value * p.constant_value + matern15(a, b, p.length_scale) + white
}

/// Training Gram matrix, white noise on the diagonal.
pub fn gram_matrix(x: &Matrix, p: &CompositeKernelParams) -> Matrix {
    let n = x.rows();
    let mut k = Matrix::zeros(n, n);
    for i in 0..n {
        k.set(i, i, composite_kernel(x.row(i), x.row(i), p, true));
        for j in 0..i {
            let v = composite_kernel(x.row(i), x.row(j), p, false);
            k.set(i, j, v);
            k.set(j, i, v);
        }
    }
    k
}

/// Cross-covariances between the training rows and a query point.
pub fn cross_kernel(x: &Matrix, query: &[f64], p: &CompositeKernelParams) -> Vec<f64> {
    x.row_iter()
        .map(|row| composite_kernel(row, query, p, false))
        .collect()
}
