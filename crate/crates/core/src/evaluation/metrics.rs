//! Regression scores. R² is reported in percent.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

fn check_lengths(y: &[f64], y_hat: &[f64]) -> Result<()> {
    if y.len() != y_hat.len() {
        return Err(Error::DimensionMismatch {
            what: "prediction length",
            expected: y.len(),
            found: y_hat.len(),
        });
    }
    Ok(())
}

/// `100 · (1 - SS_res / SS_tot)`. Negative values are kept.
pub fn r_squared(y: &[f64], y_hat: &[f64]) -> Result<f64> {
    check_lengths(y, y_hat)?;
    if y.len() < 2 {
        return Err(Error::TooFewSamples {
            required: 2,
            found: y.len(),
        });
    }
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let ss_tot: f64 = y.iter().map(|v| (v - mean) * (v - mean)).sum();
    if ss_tot == 0.0 {
        return Err(Error::DegenerateTarget);
    }
    let ss_res: f64 = y.iter().zip(y_hat).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(100.0 * (1.0 - ss_res / ss_tot))
}

/// `(rmse, mae)`.
pub fn error_metrics(y: &[f64], y_hat: &[f64]) -> Result<(f64, f64)> {
    check_lengths(y, y_hat)?;
    if y.is_empty() {
        return Err(Error::EmptyInput("error metrics"));
    }
    let n = y.len() as f64;
    let (mut se, mut ae) = (0.0, 0.0);
    for (a, b) in y.iter().zip(y_hat) {
        let e = a - b;
        se += e * e;
        ae += e.abs();
    }
    Ok(((se / n).sqrt(), ae / n))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelMetrics {
    pub r_squared: f64,
    pub rmse: f64,
    pub mae: f64,
}

/// Scores for a multi-output prediction. The overall values are the
/// unweighted means of the per-channel values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSet {
    pub r_squared: f64,
    pub rmse: f64,
    pub mae: f64,
    pub channels: Vec<ChannelMetrics>,
}

impl MetricSet {
    pub fn from_channels(channels: Vec<ChannelMetrics>) -> Result<Self> {
        if channels.is_empty() {
            return Err(Error::EmptyInput("metric channels"));
        }
        let n = channels.len() as f64;
        Ok(MetricSet {
            r_squared: channels.iter().map(|c| c.r_squared).sum::<f64>() / n,
            rmse: channels.iter().map(|c| c.rmse).sum::<f64>() / n,
            mae: channels.iter().map(|c| c.mae).sum::<f64>() / n,
            channels,
        })
    }

    /// Field-wise mean, used to average folds.
    pub fn mean(sets: &[MetricSet]) -> Result<Self> {
        let first = sets.first().ok_or(Error::EmptyInput("metric sets"))?;
        let k = first.channels.len();
        if let Some(bad) = sets.iter().find(|s| s.channels.len() != k) {
            return Err(Error::DimensionMismatch {
                what: "metric channels",
                expected: k,
                found: bad.channels.len(),
            });
        }
        let n = sets.len() as f64;
        let channels = (0..k)
            .map(|c| ChannelMetrics {
                r_squared: sets.iter().map(|s| s.channels[c].r_squared).sum::<f64>() / n,
                rmse: sets.iter().map(|s| s.channels[c].rmse).sum::<f64>() / n,
                mae: sets.iter().map(|s| s.channels[c].mae).sum::<f64>() / n,
            })
            .collect();
        MetricSet::from_channels(channels)
    }
}

/// Scores each target column of `y_hat` against `y`.
pub fn evaluate(y: &Matrix, y_hat: &Matrix) -> Result<MetricSet> {
    if y.rows() != y_hat.rows() || y.cols() != y_hat.cols() {
        return Err(Error::DimensionMismatch {
            what: "prediction matrix",
            expected: y.rows() * y.cols(),
            found: y_hat.rows() * y_hat.cols(),
        });
    }
    let channels = (0..y.cols())
        .map(|c| {
            let (a, b) = (y.column(c), y_hat.column(c));
            let (rmse, mae) = error_metrics(&a, &b)?;
            Ok(ChannelMetrics {
                r_squared: r_squared(&a, &b).map_err(|e| e.context(format!("channel {c}")))?,
                rmse,
                mae,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    MetricSet::from_channels(channels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn hand_examples() {
        let y = [1.0, 2.0, 3.0];
        assert_eq!(r_squared(&y, &y).unwrap(), 100.0);
        assert_eq!(r_squared(&y, &[2.0; 3]).unwrap(), 0.0);
        assert!((r_squared(&y, &[1.0, 2.0, 2.0]).unwrap() - 50.0).abs() < 1e-12);
        assert_eq!(error_metrics(&y, &y).unwrap(), (0.0, 0.0));
        assert_eq!(error_metrics(&[0.0, 0.0], &[1.0, -1.0]).unwrap(), (1.0, 1.0));
        let (rmse, mae) = error_metrics(&y, &[1.0, 2.0, 2.0]).unwrap();
        assert!((rmse - 0.577_350_3).abs() < 1e-7 && (mae - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn degenerate_and_empty() {
        assert!(matches!(r_squared(&[2.0, 2.0], &[1.0, 2.0]), Err(Error::DegenerateTarget)));
        assert!(matches!(error_metrics(&[], &[]), Err(Error::EmptyInput(_))));
    }

    #[test]
    fn negative_r2_is_not_clamped() {
        assert!((r_squared(&[0.0, 1.0], &[1.0, 0.0]).unwrap() + 300.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn affine_invariance(
            pairs in prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 3..40),
            a in 0.1f64..5.0,
            b in -5.0f64..5.0,
        ) {
            let y: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let yh: Vec<f64> = pairs.iter().map(|p| p.1).collect();
            prop_assume!(y.iter().any(|v| (v - y[0]).abs() > 1e-3));
            let r1 = r_squared(&y, &yh).unwrap();
            let ya: Vec<f64> = y.iter().map(|v| a * v + b).collect();
            let yha: Vec<f64> = yh.iter().map(|v| a * v + b).collect();
            let r2 = r_squared(&ya, &yha).unwrap();
            prop_assert!((r1 - r2).abs() <= 1e-9 * r1.abs().max(1.0));
        }

        #[test]
        fn rmse_dominates_mae(pairs in prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 1..40)) {
            let y: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let yh: Vec<f64> = pairs.iter().map(|p| p.1).collect();
            let (rmse, mae) = error_metrics(&y, &yh).unwrap();
            prop_assert!(rmse + 1e-12 >= mae && mae >= 0.0);
        }
    }
}
