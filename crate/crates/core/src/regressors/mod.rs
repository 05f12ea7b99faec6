//! The six regressor families behind one train/predict contract.
//!
//! Inputs are standardized with a scaler fitted on the training rows;
//! targets are used as-is. Every output dimension has its own scalar
//! model, although families whose fit shares work across outputs (one
//! Gram matrix, one set of receptive fields) compute that work once.

pub mod gpr;
pub mod kernel;
pub mod knn;
pub mod lbfgs;
pub mod lwpr;
pub mod mlp;
pub mod svr;
pub mod xgboost;

use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::preprocess::{apply_scaler, fit_scaler, Scaler};
use crate::seed::derive_seed;
use crate::types::{FeatureVector, StateDelta, TaskDataset};

pub use gpr::GprParams;
pub use kernel::CompositeKernelParams;
pub use knn::KnnParams;
pub use lwpr::LwprParams;
pub use mlp::MlpParams;
pub use svr::SvrParams;
pub use xgboost::XgbParams;

/// Version written into serialized models.
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Family {
    #[serde(rename = "LWPR")]
    Lwpr,
    #[serde(rename = "KNN")]
    Knn,
    #[serde(rename = "SVR")]
    Svr,
    #[serde(rename = "XGBoost")]
    Xgboost,
    #[serde(rename = "MLP")]
    Mlp,
    #[serde(rename = "GPR")]
    Gpr,
}

impl Family {
    pub const ALL: [Family; 6] = [
        Family::Lwpr,
        Family::Knn,
        Family::Svr,
        Family::Xgboost,
        Family::Mlp,
        Family::Gpr,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Family::Lwpr => "LWPR",
            Family::Knn => "KNN",
            Family::Svr => "SVR",
            Family::Xgboost => "XGBoost",
            Family::Mlp => "MLP",
            Family::Gpr => "GPR",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let up = s.trim().to_ascii_uppercase();
        Family::ALL
            .into_iter()
            .find(|f| f.as_str().to_ascii_uppercase() == up)
            .ok_or_else(|| Error::Schema(format!("unknown model family {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "params")]
pub enum Hyperparameters {
    #[serde(rename = "LWPR")]
    Lwpr(LwprParams),
    #[serde(rename = "KNN")]
    Knn(KnnParams),
    #[serde(rename = "SVR")]
    Svr(SvrParams),
    #[serde(rename = "XGBoost")]
    Xgboost(XgbParams),
    #[serde(rename = "MLP")]
    Mlp(MlpParams),
    #[serde(rename = "GPR")]
    Gpr(GprParams),
}

impl Hyperparameters {
    pub fn default_for(family: Family) -> Self {
        match family {
            Family::Lwpr => Hyperparameters::Lwpr(LwprParams::default()),
            Family::Knn => Hyperparameters::Knn(KnnParams::default()),
            Family::Svr => Hyperparameters::Svr(SvrParams::default()),
            Family::Xgboost => Hyperparameters::Xgboost(XgbParams::default()),
            Family::Mlp => Hyperparameters::Mlp(MlpParams::default()),
            Family::Gpr => Hyperparameters::Gpr(GprParams::default()),
        }
    }

    pub fn family(&self) -> Family {
        match self {
            Hyperparameters::Lwpr(_) => Family::Lwpr,
            Hyperparameters::Knn(_) => Family::Knn,
            Hyperparameters::Svr(_) => Family::Svr,
            Hyperparameters::Xgboost(_) => Family::Xgboost,
            Hyperparameters::Mlp(_) => Family::Mlp,
            Hyperparameters::Gpr(_) => Family::Gpr,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Hyperparameters::Lwpr(p) => p.validate(),
            Hyperparameters::Knn(p) => p.validate(),
            Hyperparameters::Svr(p) => p.validate(),
            Hyperparameters::Xgboost(p) => p.validate(),
            Hyperparameters::Mlp(p) => p.validate(),
            Hyperparameters::Gpr(p) => p.validate(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub hyperparameters: Hyperparameters,
    pub seed: u64,
}

impl ModelSpec {
    pub fn new(hyperparameters: Hyperparameters, seed: u64) -> Result<Self> {
        hyperparameters.validate()?;
        Ok(ModelSpec {
            hyperparameters,
            seed,
        })
    }

    pub fn default_for(family: Family, seed: u64) -> Self {
        ModelSpec {
            hyperparameters: Hyperparameters::default_for(family),
            seed,
        }
    }

    pub fn family(&self) -> Family {
        self.hyperparameters.family()
    }

    /// Same hyperparameters under another seed.
    pub fn with_seed(&self, seed: u64) -> Self {
        ModelSpec {
            hyperparameters: self.hyperparameters.clone(),
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FamilyModel {
    Lwpr(lwpr::LwprModel),
    Knn(knn::KnnModel),
    Svr(Vec<svr::SvrModel>),
    Xgboost(Vec<xgboost::XgbModel>),
    Mlp(Vec<mlp::MlpModel>),
    Gpr(gpr::GprModel),
}

/// Optimizer bookkeeping, one entry per output where it applies.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FitDiagnostics {
    pub iterations: Vec<usize>,
    pub converged: bool,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub format_version: u32,
    pub spec: ModelSpec,
    pub scaler: Scaler,
    pub output_dim: usize,
    pub model: FamilyModel,
    /// Wall-clock seconds spent in the family fit, excluding scaling.
    pub fit_time: f64,
    pub diagnostics: FitDiagnostics,
}

/// Fits `spec` on a dataset.
pub fn train(spec: &ModelSpec, ds: &TaskDataset) -> Result<TrainedModel> {
    train_matrices(spec, &ds.inputs, &ds.targets)
}

pub fn train_matrices(spec: &ModelSpec, inputs: &Matrix, targets: &Matrix) -> Result<TrainedModel> {
    spec.hyperparameters.validate()?;
    if inputs.rows() != targets.rows() {
        return Err(Error::DimensionMismatch {
            what: "target rows",
            expected: inputs.rows(),
            found: targets.rows(),
        });
    }
    if inputs.rows() == 0 || targets.cols() == 0 {
        return Err(Error::EmptyInput("training set"));
    }
    let scaler = fit_scaler(inputs)?;
    let x = apply_scaler(&scaler, inputs)?;
    let outs = targets.cols();
    let columns: Vec<Vec<f64>> = (0..outs).map(|o| targets.column(o)).collect();
    let mut diagnostics = FitDiagnostics {
        converged: true,
        ..Default::default()
    };

    let start = Instant::now();
    let model = match &spec.hyperparameters {
        Hyperparameters::Lwpr(p) => {
            let m = lwpr::fit(&x, targets, p)?;
            diagnostics.notes.push(format!("{} receptive fields", m.fields.len()));
            FamilyModel::Lwpr(m)
        }
        Hyperparameters::Knn(p) => {
            let m = knn::fit(&x, targets, p, spec.seed)?;
            diagnostics.notes.push(format!("k per output {:?}", m.ks));
            FamilyModel::Knn(m)
        }
        Hyperparameters::Svr(p) => {
            let gram = kernel::gram_matrix(&x, &p.kernel);
            let mut models = Vec::with_capacity(outs);
            for (o, y) in columns.iter().enumerate() {
                let sol = svr::solve_dual(&gram, y, p).map_err(|e| e.context(format!("SVR output {o}")))?;
                diagnostics.iterations.push(sol.iterations);
                models.push(svr::SvrModel::from_solution(&x, sol, p.kernel));
            }
            FamilyModel::Svr(models)
        }
        Hyperparameters::Xgboost(p) => {
            let models = columns
                .iter()
                .map(|y| xgboost::fit(&x, y, p))
                .collect::<Result<Vec<_>>>()?;
            FamilyModel::Xgboost(models)
        }
        Hyperparameters::Mlp(p) => {
            let mut models = Vec::with_capacity(outs);
            for (o, y) in columns.iter().enumerate() {
                let m = mlp::fit(&x, y, p, derive_seed(spec.seed, &[o as u64]))?;
                diagnostics.iterations.push(m.iterations);
                diagnostics.converged &= m.converged;
                models.push(m);
            }
            if !diagnostics.converged {
                diagnostics.notes.push("MLP hit the iteration cap on some outputs".into());
            }
            FamilyModel::Mlp(models)
        }
        Hyperparameters::Gpr(p) => {
            let m = gpr::fit(&x, targets, p)?;
            diagnostics.notes.push(format!("jitter {:e}", m.jitter));
            FamilyModel::Gpr(m)
        }
    };
    let fit_time = start.elapsed().as_secs_f64();

    Ok(TrainedModel {
        format_version: FORMAT_VERSION,
        spec: spec.clone(),
        scaler,
        output_dim: outs,
        model,
        fit_time,
        diagnostics,
    })
}

impl TrainedModel {
    pub fn family(&self) -> Family {
        self.spec.family()
    }

    pub fn input_dim(&self) -> usize {
        self.scaler.dim()
    }

    /// Prediction for one raw (unscaled) input row.
    pub fn predict_row(&self, raw: &[f64]) -> Result<Vec<f64>> {
        let x = self.scaler.transform_row(raw)?;
        Ok(match &self.model {
            FamilyModel::Lwpr(m) => (0..self.output_dim).map(|o| m.predict(o, &x)).collect(),
            FamilyModel::Knn(m) => m.predict_all(&x),
            FamilyModel::Svr(ms) => ms.iter().map(|m| m.predict(&x)).collect(),
            FamilyModel::Xgboost(ms) => ms.iter().map(|m| m.predict(&x)).collect(),
            FamilyModel::Mlp(ms) => ms.iter().map(|m| m.predict(&x)).collect(),
            FamilyModel::Gpr(m) => m.predict_all(&x),
        })
    }

    pub fn predict(&self, query: &FeatureVector) -> Result<StateDelta> {
        if query.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                what: "query",
                expected: self.input_dim(),
                found: query.len(),
            });
        }
        StateDelta::new(self.predict_row(query.as_slice())?)
    }

    pub fn predict_matrix(&self, inputs: &Matrix) -> Result<Matrix> {
        let mut out = Matrix::zeros(inputs.rows(), self.output_dim);
        for (r, row) in inputs.row_iter().enumerate() {
            out.row_mut(r).copy_from_slice(&self.predict_row(row)?);
        }
        Ok(out)
    }

    /// Posterior variance at a raw query; `None` for non-GPR models.
    pub fn predict_variance(&self, raw: &[f64]) -> Result<Option<f64>> {
        match &self.model {
            FamilyModel::Gpr(m) => Ok(Some(m.predict_variance(&self.scaler.transform_row(raw)?))),
            _ => Ok(None),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Header {
            format_version: u32,
        }
        let header: Header = serde_json::from_str(s)?;
        if header.format_version != FORMAT_VERSION {
            return Err(Error::UnsupportedVersion(header.format_version));
        }
        Ok(serde_json::from_str(s)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> (Matrix, Matrix) {
        let rows: Vec<[f64; 2]> = (0..30)
            .map(|i| {
                let t = i as f64 / 29.0;
                [t, (3.0 * t).sin()]
            })
            .collect();
        let x = Matrix::from_rows(&rows).unwrap();
        let y_rows: Vec<[f64; 2]> = rows.iter().map(|r| [r[0] + r[1], r[0] * r[1]]).collect();
        (x, Matrix::from_rows(&y_rows).unwrap())
    }

    #[test]
    fn family_names_round_trip() {
        for f in Family::ALL {
            assert_eq!(f.as_str().parse::<Family>().unwrap(), f);
            assert_eq!(f.as_str().to_lowercase().parse::<Family>().unwrap(), f);
        }
        assert!("RF".parse::<Family>().is_err());
    }

    #[test]
    fn every_family_trains_and_round_trips() {
        let (x, y) = toy();
        for f in Family::ALL {
            let mut spec = ModelSpec::default_for(f, 11);
            if let Hyperparameters::Mlp(p) = &mut spec.hyperparameters {
                p.hidden = vec![8];
                p.max_iter = 50;
            }
            let m = train_matrices(&spec, &x, &y).unwrap();
            assert_eq!(m.output_dim, 2);
            let back = TrainedModel::from_json(&m.to_json().unwrap()).unwrap();
            for row in x.row_iter() {
                let a = m.predict_row(row).unwrap();
                let b = back.predict_row(row).unwrap();
                assert_eq!(
                    a.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
                    b.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
                    "{f}"
                );
            }
        }
    }

    #[test]
    fn query_dimension_is_checked() {
        let (x, y) = toy();
        let m = train_matrices(&ModelSpec::default_for(Family::Knn, 0), &x, &y).unwrap();
        let q = FeatureVector::new(vec![0.0; 3]).unwrap();
        assert!(matches!(m.predict(&q), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn wrong_version_is_rejected() {
        let (x, y) = toy();
        let m = train_matrices(&ModelSpec::default_for(Family::Xgboost, 0), &x, &y).unwrap();
        let mut v: serde_json::Value = serde_json::from_str(&m.to_json().unwrap()).unwrap();
        v["format_version"] = serde_json::json!(99);
        assert!(matches!(
            TrainedModel::from_json(&v.to_string()),
            Err(Error::UnsupportedVersion(99))
        ));
    }
}
