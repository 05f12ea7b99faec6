//! Trial averaging, resampling, supervised pair construction, input
//! standardization and fold partitioning.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::types::{TaskDataset, Trial, MIN_DATASET_ROWS};

/// Length every averaged trial is resampled to before differencing.
pub const DEFAULT_COMMON_LEN: usize = 400;
pub const DEFAULT_FOLDS: usize = 5;
/// Lower bound on a scaler's per-column scale.
pub const SCALE_FLOOR: f64 = 1e-12;

/// Piecewise-linear resampling onto `target_len` points spread uniformly
/// over the same parameter interval. Endpoints are preserved exactly.
pub fn resample_linear(series: &[f64], target_len: usize) -> Result<Vec<f64>> {
    let n = series.len();
    if n < 2 {
        return Err(Error::TooShort(n));
    }
    if target_len < 2 {
        return Err(Error::TooShort(target_len));
    }
    if n == target_len {
        return Ok(series.to_vec());
    }
    let span = (n - 1) as f64;
    let steps = (target_len - 1) as f64;
    let mut out = Vec::with_capacity(target_len);
    for i in 0..target_len {
        let pos = i as f64 * span / steps;
        let idx = pos.floor() as usize;
        if idx >= n - 1 {
            out.push(series[n - 1]);
            continue;
        }
        let frac = pos - idx as f64;
        out.push(series[idx] + frac * (series[idx + 1] - series[idx]));
    }
    Ok(out)
}

/// Resamples every channel of `m` to `target_len` rows.
pub fn resample_matrix(m: &Matrix, target_len: usize) -> Result<Matrix> {
    let mut out = Matrix::zeros(target_len, m.cols());
    for c in 0..m.cols() {
        let col = resample_linear(&m.column(c), target_len)?;
        for (r, v) in col.into_iter().enumerate() {
            out.set(r, c, v);
        }
    }
    Ok(out)
}

/// Resamples each trial to `common_len` and averages them pointwise.
///
/// The result carries `trial_index = 0`. Its sample rate keeps the mean
/// trial duration.
pub fn average_trials(trials: &[Trial], common_len: usize) -> Result<Trial> {
    let first = trials.first().ok_or(Error::EmptyInput("no trials to average"))?;
    for t in &trials[1..] {
        if t.task != first.task || t.subject != first.subject {
            return Err(Error::MixedTasks(format!(
                "{}/{} vs {}/{}",
                first.subject, first.task, t.subject, t.task
            )));
        }
        if t.profile != first.profile {
            return Err(Error::DimensionMismatch {
                what: "trial profile",
                expected: first.profile.input_dim(),
                found: t.profile.input_dim(),
            });
        }
    }
    let cols = first.features.cols();
    let mut sum = Matrix::zeros(common_len, cols);
    let mut duration = 0.0;
    for t in trials {
        let r = resample_matrix(&t.features, common_len)?;
        for i in 0..common_len {
            let dst = sum.row_mut(i);
            for (d, s) in dst.iter_mut().zip(r.row(i)) {
                *d += s;
            }
        }
        duration += (t.len() - 1) as f64 / t.sample_rate;
    }
    let count = trials.len() as f64;
    for i in 0..common_len {
        for v in sum.row_mut(i) {
            *v /= count;
        }
    }
    duration /= count;
    let rate = (common_len - 1) as f64 / duration;
    Trial::new(
        sum,
        rate,
        first.task,
        first.subject.clone(),
        0,
        first.profile,
    )
}

/// Turns a trajectory of `T` samples into `T - 1` supervised rows: input
/// `[x, u, v]` at `t`, target `x[t+1] - x[t]`.
pub fn build_pairs(trial: &Trial) -> Result<TaskDataset> {
    let t = trial.len();
    if t < MIN_DATASET_ROWS + 1 {
        return Err(Error::TooFewSamples {
            required: MIN_DATASET_ROWS + 1,
            found: t,
        });
    }
    let l = trial.profile.state_dim;
    let inputs = trial.features.select_rows(&(0..t - 1).collect::<Vec<_>>());
    let mut targets = Matrix::zeros(t - 1, l);
    for i in 0..t - 1 {
        let now = trial.state(i);
        let next = trial.state(i + 1);
        for c in 0..l {
            targets.set(i, c, next[c] - now[c]);
        }
    }
    Ok(TaskDataset {
        inputs,
        targets,
        task: trial.task,
        subject: trial.subject.clone(),
    })
}

/// Per-column affine standardization fitted on a training matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Scaler {
    pub fn identity(dim: usize) -> Self {
        Scaler {
            mean: vec![0.0; dim],
            scale: vec![1.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn transform_row(&self, row: &[f64]) -> Result<Vec<f64>> {
        if row.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                what: "scaler input",
                expected: self.dim(),
                found: row.len(),
            });
        }
        Ok(row
            .iter()
            .zip(self.mean.iter().zip(&self.scale))
            .map(|(x, (m, s))| (x - m) / s)
            .collect())
    }
}

/// Column means and population standard deviations, the latter floored
/// at [`SCALE_FLOOR`].
pub fn fit_scaler(train_inputs: &Matrix) -> Result<Scaler> {
    let n = train_inputs.rows();
    if n < 2 {
        return Err(Error::TooFewSamples {
            required: 2,
            found: n,
        });
    }
    let cols = train_inputs.cols();
    let mut mean = vec![0.0; cols];
    for row in train_inputs.row_iter() {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }
    let mut var = vec![0.0; cols];
    for row in train_inputs.row_iter() {
        for ((acc, v), m) in var.iter_mut().zip(row).zip(&mean) {
            let d = v - m;
            *acc += d * d;
        }
    }
    let scale = var
        .into_iter()
        .map(|s| (s / n as f64).sqrt().max(SCALE_FLOOR))
        .collect();
    Ok(Scaler { mean, scale })
}

pub fn apply_scaler(scaler: &Scaler, inputs: &Matrix) -> Result<Matrix> {
    if inputs.cols() != scaler.dim() {
        return Err(Error::DimensionMismatch {
            what: "scaler input",
            expected: scaler.dim(),
            found: inputs.cols(),
        });
    }
    let mut out = inputs.clone();
    for r in 0..out.rows() {
        for (c, v) in out.row_mut(r).iter_mut().enumerate() {
            *v = (*v - scaler.mean[c]) / scaler.scale[c];
        }
    }
    Ok(out)
}

/// Assignment of every row to one of `fold_count` folds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub fold_count: usize,
    pub assignments: Vec<usize>,
    pub seed: u64,
}

impl FoldPlan {
    pub fn row_count(&self) -> usize {
        self.assignments.len()
    }

    /// Rows held out in `fold`, ascending.
    pub fn test_rows(&self, fold: usize) -> Vec<usize> {
        self.assignments
            .iter()
            .enumerate()
            .filter(|(_, &f)| f == fold)
            .map(|(i, _)| i)
            .collect()
    }

    /// Rows used for training when `fold` is held out, ascending.
    pub fn train_rows(&self, fold: usize) -> Vec<usize> {
        self.assignments
            .iter()
            .enumerate()
            .filter(|(_, &f)| f != fold)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.fold_count];
        for &f in &self.assignments {
            sizes[f] += 1;
        }
        sizes
    }
}

/// Seeded shuffle of `0..row_count`, dealt round-robin into `k` folds.
pub fn make_folds(row_count: usize, k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 || row_count < k {
        return Err(Error::TooFewRows {
            rows: row_count,
            folds: k,
        });
    }
    let mut order: Vec<usize> = (0..row_count).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let mut assignments = vec![0; row_count];
    for (pos, &row) in order.iter().enumerate() {
        assignments[row] = pos % k;
    }
    Ok(FoldPlan {
        fold_count: k,
        assignments,
        seed,
    })
}
