//! Shared domain types.
//!
//! The regressor input is the concatenation `[x, u, v]` of the exoskeleton
//! state `x` (joint angles and velocities), the robot action `u` (sEMG
//! assistance thresholds) and the user action `v` (sEMG activations). The
//! regression target is the one-step state change `x[t+1] - x[t]`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Minimum number of supervised rows a dataset must hold.
pub const MIN_DATASET_ROWS: usize = 10;

/// Sizes of the state, robot-action and user-action blocks of the input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DimensionProfile {
    pub state_dim: usize,
    pub robot_action_dim: usize,
    pub user_action_dim: usize,
}

impl Default for DimensionProfile {
    /// Elbow/wrist angle and velocity; elbow/hand thresholds; biceps,
    /// triceps, hand-open and hand-close activations.
    fn default() -> Self {
        DimensionProfile {
            state_dim: 4,
            robot_action_dim: 2,
            user_action_dim: 4,
        }
    }
}

impl DimensionProfile {
    pub fn new(state_dim: usize, robot_action_dim: usize, user_action_dim: usize) -> Result<Self> {
        if state_dim == 0 {
            return Err(Error::InvalidHyperparameter(
                "state dimension must be at least 1".into(),
            ));
        }
        Ok(DimensionProfile {
            state_dim,
            robot_action_dim,
            user_action_dim,
        })
    }

    #[inline]
    pub fn input_dim(&self) -> usize {
        self.state_dim + self.robot_action_dim + self.user_action_dim
    }
}

/// One of the six recorded movement tasks. The derived ordering is the
/// fixed matrix index order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TaskLabel {
    H,
    V,
    LR,
    RL,
    E,
    P,
}

impl TaskLabel {
    pub const ALL: [TaskLabel; 6] = [
        TaskLabel::H,
        TaskLabel::V,
        TaskLabel::LR,
        TaskLabel::RL,
        TaskLabel::E,
        TaskLabel::P,
    ];

    #[inline]
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<TaskLabel> {
        Self::ALL.get(i).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TaskLabel::H => "H",
            TaskLabel::V => "V",
            TaskLabel::LR => "LR",
            TaskLabel::RL => "RL",
            TaskLabel::E => "E",
            TaskLabel::P => "P",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            TaskLabel::H => "horizontal",
            TaskLabel::V => "vertical",
            TaskLabel::LR => "diagonal, left leg to right eye",
            TaskLabel::RL => "diagonal, right leg to left eye",
            TaskLabel::E => "eating",
            TaskLabel::P => "pushing",
        }
    }
}

impl fmt::Display for TaskLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TaskLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "H" => Ok(TaskLabel::H),
            "V" => Ok(TaskLabel::V),
            "LR" => Ok(TaskLabel::LR),
            "RL" => Ok(TaskLabel::RL),
            "E" => Ok(TaskLabel::E),
            "P" => Ok(TaskLabel::P),
            other => Err(Error::Schema(format!("unknown task label {other:?}"))),
        }
    }
}

fn check_finite(what: &'static str, values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(col) => Err(Error::NonFiniteValue { what, row: 0, col }),
        None => Ok(()),
    }
}

/// Regressor input `[x, u, v]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector(Vec<f64>);

impl FeatureVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        check_finite("feature vector", &values)?;
        Ok(FeatureVector(values))
    }

    /// Builds `[x, u, v]` from its three blocks.
    pub fn from_parts(state: &[f64], robot_action: &[f64], user_action: &[f64]) -> Result<Self> {
        let mut v = Vec::with_capacity(state.len() + robot_action.len() + user_action.len());
        v.extend_from_slice(state);
        v.extend_from_slice(robot_action);
        v.extend_from_slice(user_action);
        Self::new(v)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// One-step state change `x[t+1] - x[t]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateDelta(Vec<f64>);

impl StateDelta {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        check_finite("state delta", &values)?;
        Ok(StateDelta(values))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

/// A single recorded repetition of a task. Each row of `features` is one
/// sample `[x, u, v]`; the raw state is its first `state_dim` columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub features: Matrix,
    pub sample_rate: f64,
    pub task: TaskLabel,
    pub subject: String,
    pub trial_index: u32,
    pub profile: DimensionProfile,
}

impl Trial {
    pub fn new(
        features: Matrix,
        sample_rate: f64,
        task: TaskLabel,
        subject: impl Into<String>,
        trial_index: u32,
        profile: DimensionProfile,
    ) -> Result<Self> {
        if features.cols() != profile.input_dim() {
            return Err(Error::DimensionMismatch {
                what: "trial columns",
                expected: profile.input_dim(),
                found: features.cols(),
            });
        }
        if features.rows() < 2 {
            return Err(Error::TooFewSamples {
                required: 2,
                found: features.rows(),
            });
        }
        if let Some((row, col)) = features.first_non_finite() {
            return Err(Error::NonFiniteValue {
                what: "trial",
                row,
                col,
            });
        }
        if !(sample_rate.is_finite() && sample_rate > 0.0) {
            return Err(Error::InvalidHyperparameter(format!(
                "sample rate must be positive, got {sample_rate}"
            )));
        }
        Ok(Trial {
            features,
            sample_rate,
            task,
            subject: subject.into(),
            trial_index,
            profile,
        })
    }

    pub fn len(&self) -> usize {
        self.features.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.features.rows() == 0
    }

    pub fn state(&self, t: usize) -> &[f64] {
        &self.features.row(t)[..self.profile.state_dim]
    }
}

/// Supervised pairs for one task: row `t` of `inputs` is `[x, u, v]` at
/// time `t`, row `t` of `targets` is the following state change.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskDataset {
    pub inputs: Matrix,
    pub targets: Matrix,
    pub task: TaskLabel,
    pub subject: String,
}

impl TaskDataset {
    pub fn len(&self) -> usize {
        self.inputs.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.rows() == 0
    }

    pub fn subset(&self, rows: &[usize]) -> TaskDataset {
        TaskDataset {
            inputs: self.inputs.select_rows(rows),
            targets: self.targets.select_rows(rows),
            task: self.task,
            subject: self.subject.clone(),
        }
    }
}

/// Checks a dataset against the profile and returns it unchanged.
pub fn validate_dataset(ds: TaskDataset, profile: &DimensionProfile) -> Result<TaskDataset> {
    if ds.inputs.cols() != profile.input_dim() {
        return Err(Error::DimensionMismatch {
            what: "input columns",
            expected: profile.input_dim(),
            found: ds.inputs.cols(),
        });
    }
    if ds.targets.cols() != profile.state_dim {
        return Err(Error::DimensionMismatch {
            what: "target columns",
            expected: profile.state_dim,
            found: ds.targets.cols(),
        });
    }
    if ds.inputs.rows() != ds.targets.rows() {
        return Err(Error::DimensionMismatch {
            what: "target rows",
            expected: ds.inputs.rows(),
            found: ds.targets.rows(),
        });
    }
    if let Some((row, col)) = ds.inputs.first_non_finite() {
        return Err(Error::NonFiniteValue {
            what: "inputs",
            row,
            col,
        });
    }
    if let Some((row, col)) = ds.targets.first_non_finite() {
        return Err(Error::NonFiniteValue {
            what: "targets",
            row,
            col,
        });
    }
    if ds.inputs.rows() < MIN_DATASET_ROWS {
        return Err(Error::TooFewSamples {
            required: MIN_DATASET_ROWS,
            found: ds.inputs.rows(),
        });
    }
    Ok(ds)
}

/// Covariance of the additive process noise on the state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    covariance: Matrix,
}

const PSD_TOLERANCE: f64 = -1e-10;

impl NoiseSpec {
    pub fn new(covariance: Matrix) -> Result<Self> {
        let n = covariance.rows();
        if covariance.cols() != n {
            return Err(Error::InvalidNoise(format!(
                "covariance must be square, got {}x{}",
                n,
                covariance.cols()
            )));
        }
        if covariance.first_non_finite().is_some() {
            return Err(Error::InvalidNoise("non-finite covariance entry".into()));
        }
        for i in 0..n {
            for j in 0..i {
                if covariance.get(i, j) != covariance.get(j, i) {
                    return Err(Error::InvalidNoise(format!(
                        "covariance not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        let m = nalgebra::DMatrix::from_row_slice(n, n, covariance.as_slice());
        let eig = m.symmetric_eigen();
        if let Some(&min) = eig.eigenvalues.iter().min_by(|a, b| a.total_cmp(b)) {
            if min < PSD_TOLERANCE {
                return Err(Error::InvalidNoise(format!(
                    "covariance not positive semi-definite (min eigenvalue {min:e})"
                )));
            }
        }
        Ok(NoiseSpec { covariance })
    }

    pub fn zero(state_dim: usize) -> Self {
        NoiseSpec {
            covariance: Matrix::zeros(state_dim, state_dim),
        }
    }

    pub fn diagonal(variances: &[f64]) -> Result<Self> {
        let n = variances.len();
        let mut m = Matrix::zeros(n, n);
        for (i, &v) in variances.iter().enumerate() {
            m.set(i, i, v);
        }
        Self::new(m)
    }

    pub fn covariance(&self) -> &Matrix {
        &self.covariance
    }

    pub fn dim(&self) -> usize {
        self.covariance.rows()
    }

    pub fn is_zero(&self) -> bool {
        self.covariance.as_slice().iter().all(|&v| v == 0.0)
    }

    /// Factor `A` with `A Aᵀ = Σ`, from the eigendecomposition so that
    /// singular covariances are handled.
    pub fn factor(&self) -> Matrix {
        let n = self.dim();
        let m = nalgebra::DMatrix::from_row_slice(n, n, self.covariance.as_slice());
        let eig = m.symmetric_eigen();
        let mut out = Matrix::zeros(n, n);
        for i in 0..n {
            for k in 0..n {
                out.set(i, k, eig.eigenvectors[(i, k)] * eig.eigenvalues[k].max(0.0).sqrt());
            }
        }
        out
    }
}
