//! K-fold cross-validation and the train-on-row / test-on-column task
//! matrix.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{evaluate, MetricSet};
use crate::error::{Error, Result};
use crate::preprocess::FoldPlan;
use crate::regressors::{train, Family, ModelSpec, TrainedModel};
use crate::seed::derive_seed;
use crate::types::{TaskDataset, TaskLabel};

/// Family and fit time of one trained model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitRecord {
    pub family: Family,
    pub fit_time: f64,
}

impl TrainedModel {
    pub fn fit_record(&self) -> FitRecord {
        FitRecord {
            family: self.family(),
            fit_time: self.fit_time,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    /// Fold-averaged scores.
    pub metrics: MetricSet,
    pub folds: Vec<MetricSet>,
    pub fit_records: Vec<FitRecord>,
}

impl CvResult {
    pub fn mean_fit_time(&self) -> f64 {
        self.fit_records.iter().map(|r| r.fit_time).sum::<f64>() / self.fit_records.len() as f64
    }
}

/// Seed used for the model trained on fold `fold`.
pub fn fold_seed(seed: u64, fold: usize) -> u64 {
    derive_seed(seed, &[fold as u64])
}

pub fn cross_validate(spec: &ModelSpec, ds: &TaskDataset, folds: &FoldPlan) -> Result<CvResult> {
    if folds.row_count() != ds.len() {
        return Err(Error::DimensionMismatch {
            what: "fold plan rows",
            expected: ds.len(),
            found: folds.row_count(),
        });
    }
    let mut per_fold = Vec::with_capacity(folds.fold_count);
    let mut fit_records = Vec::with_capacity(folds.fold_count);
    for fold in 0..folds.fold_count {
        let run = || -> Result<(MetricSet, FitRecord)> {
            let train_set = ds.subset(&folds.train_rows(fold));
            let test_set = ds.subset(&folds.test_rows(fold));
            let model = train(&spec.with_seed(fold_seed(spec.seed, fold)), &train_set)?;
            let pred = model.predict_matrix(&test_set.inputs)?;
            Ok((evaluate(&test_set.targets, &pred)?, model.fit_record()))
        };
        let (m, rec) = run().map_err(|e| Error::Fold {
            fold,
            source: Box::new(e),
        })?;
        per_fold.push(m);
        fit_records.push(rec);
    }
    Ok(CvResult {
        metrics: MetricSet::mean(&per_fold)?,
        folds: per_fold,
        fit_records,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossTaskMatrix {
    pub family: Family,
    pub subject: String,
    /// Row and column labels, in fixed task order.
    pub tasks: Vec<TaskLabel>,
    /// `cells[train][test]`.
    pub cells: Vec<Vec<MetricSet>>,
    pub fit_records: Vec<FitRecord>,
}

impl CrossTaskMatrix {
    pub fn cell(&self, train: TaskLabel, test: TaskLabel) -> Option<&MetricSet> {
        let i = self.tasks.iter().position(|&t| t == train)?;
        let j = self.tasks.iter().position(|&t| t == test)?;
        Some(&self.cells[i][j])
    }

    /// Total R² grid.
    pub fn r2_grid(&self) -> Vec<Vec<f64>> {
        self.cells
            .iter()
            .map(|row| row.iter().map(|m| m.r_squared).collect())
            .collect()
    }
}

/// Seed for the diagonal (cross-validated) cell of `task`.
pub fn diagonal_seed(base: u64, family: Family, task: TaskLabel) -> u64 {
    derive_seed(base, &[family.index() as u64, task.index() as u64, task.index() as u64])
}

// Tag distinguishing the full-data model of a row from its diagonal cell.
const FULL_TRAIN_TAG: u64 = 0xF011;

/// Seed for the model trained on all of `task`, shared by every
/// off-diagonal cell of that row.
pub fn full_train_seed(base: u64, family: Family, task: TaskLabel) -> u64 {
    derive_seed(base, &[family.index() as u64, task.index() as u64, FULL_TRAIN_TAG])
}

/// Matrix over all six tasks.
pub fn cross_task_matrix(
    spec: &ModelSpec,
    datasets: &[TaskDataset],
    folds: &BTreeMap<TaskLabel, FoldPlan>,
) -> Result<CrossTaskMatrix> {
    cross_task_matrix_for(spec, datasets, folds, &TaskLabel::ALL)
}

/// Matrix over a subset of tasks, kept in fixed task order. The diagonal
/// is cross-validated; cell `(i, j ≠ i)` trains on all of task `i` and
/// tests on all of task `j`.
pub fn cross_task_matrix_for(
    spec: &ModelSpec,
    datasets: &[TaskDataset],
    folds: &BTreeMap<TaskLabel, FoldPlan>,
    tasks: &[TaskLabel],
) -> Result<CrossTaskMatrix> {
    let mut tasks = tasks.to_vec();
    tasks.sort();
    tasks.dedup();
    if tasks.is_empty() {
        return Err(Error::EmptyInput("task list"));
    }
    let mut by_task: Vec<&TaskDataset> = Vec::with_capacity(tasks.len());
    for &t in &tasks {
        let ds = datasets.iter().find(|d| d.task == t).ok_or(Error::MissingTask(t))?;
        if !folds.contains_key(&t) {
            return Err(Error::MissingTask(t));
        }
        by_task.push(ds);
    }
    let subject = by_task[0].subject.clone();
    let family = spec.family();

    let diagonal: Vec<CvResult> = tasks
        .par_iter()
        .zip(by_task.par_iter())
        .map(|(&t, ds)| {
            cross_validate(&spec.with_seed(diagonal_seed(spec.seed, family, t)), ds, &folds[&t])
                .map_err(|e| e.context(format!("{family} subject {subject} cell {t}->{t}")))
        })
        .collect::<Result<_>>()?;

    let full: Vec<TrainedModel> = if tasks.len() > 1 {
        tasks
            .par_iter()
            .zip(by_task.par_iter())
            .map(|(&t, ds)| {
                train(&spec.with_seed(full_train_seed(spec.seed, family, t)), ds)
                    .map_err(|e| e.context(format!("{family} subject {subject} full fit on {t}")))
            })
            .collect::<Result<_>>()?
    } else {
        Vec::new()
    };

    let n = tasks.len();
    let off: Vec<Result<MetricSet>> = (0..n * n)
        .into_par_iter()
        .map(|k| {
            let (i, j) = (k / n, k % n);
            if i == j {
                return Ok(diagonal[i].metrics.clone());
            }
            let test = by_task[j];
            let pred = full[i].predict_matrix(&test.inputs)?;
            evaluate(&test.targets, &pred)
                .map_err(|e| e.context(format!("{family} subject {subject} cell {}->{}", tasks[i], tasks[j])))
        })
        .collect();
    let mut flat = off.into_iter();
    let mut cells = Vec::with_capacity(n);
    for _ in 0..n {
        cells.push((0..n).map(|_| flat.next().unwrap()).collect::<Result<Vec<_>>>()?);
    }

    let mut fit_records: Vec<FitRecord> = diagonal.iter().flat_map(|d| d.fit_records.iter().copied()).collect();
    fit_records.extend(full.iter().map(|m| m.fit_record()));
    Ok(CrossTaskMatrix {
        family,
        subject,
        tasks,
        cells,
        fit_records,
    })
}

/// Mean fit seconds per family over the given models.
pub fn timing_report(models: &[TrainedModel]) -> BTreeMap<Family, f64> {
    let records: Vec<FitRecord> = models.iter().map(|m| m.fit_record()).collect();
    mean_fit_times(&records)
}

pub fn mean_fit_times(records: &[FitRecord]) -> BTreeMap<Family, f64> {
    let mut acc: BTreeMap<Family, (f64, usize)> = BTreeMap::new();
    for r in records {
        let e = acc.entry(r.family).or_insert((0.0, 0));
        e.0 += r.fit_time;
        e.1 += 1;
    }
    acc.into_iter().map(|(f, (s, n))| (f, s / n as f64)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn timing_means() {
        let recs = [
            FitRecord {
                family: Family::Knn,
                fit_time: 0.1,
            },
            FitRecord {
                family: Family::Knn,
                fit_time: 0.3,
            },
            FitRecord {
                family: Family::Gpr,
                fit_time: 0.5,
            },
        ];
        let t = mean_fit_times(&recs);
        assert!((t[&Family::Knn] - 0.2).abs() < 1e-15);
        assert_eq!(t[&Family::Gpr], 0.5);
    }
}
