//! Generalizability graphs: tasks as nodes, subject-averaged test R² as
//! directed edge weights, plus the scores derived from them.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::crossval::CrossTaskMatrix;
use crate::error::{Error, Result};
use crate::regressors::Family;
use crate::types::TaskLabel;

pub const DEFAULT_THRESHOLD: f64 = 80.0;

/// Which edges enter a family score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeSelection {
    /// Every directed edge, self-loops included.
    #[default]
    All,
    /// Edges between distinct tasks only.
    OffDiagonal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneralizabilityGraph {
    pub family: Family,
    pub tasks: Vec<TaskLabel>,
    /// `weights[from][to]`, averaged over `subjects`.
    pub weights: Vec<Vec<f64>>,
    pub subjects: usize,
}

impl GeneralizabilityGraph {
    /// Averages per-subject R² grids that share one task order.
    pub fn from_grids(family: Family, tasks: Vec<TaskLabel>, grids: &[Vec<Vec<f64>>]) -> Result<Self> {
        if grids.is_empty() {
            return Err(Error::EmptyInput("subject matrices"));
        }
        let n = tasks.len();
        if n == 0 {
            return Err(Error::EmptyInput("task list"));
        }
        for g in grids {
            if g.len() != n || g.iter().any(|r| r.len() != n) {
                return Err(Error::DimensionMismatch {
                    what: "task grid",
                    expected: n,
                    found: g.len(),
                });
            }
        }
        let s = grids.len() as f64;
        let weights = (0..n)
            .map(|i| (0..n).map(|j| grids.iter().map(|g| g[i][j]).sum::<f64>() / s).collect())
            .collect();
        Ok(GeneralizabilityGraph {
            family,
            tasks,
            weights,
            subjects: grids.len(),
        })
    }

    pub fn from_matrices(matrices: &[CrossTaskMatrix]) -> Result<Self> {
        let first = matrices.first().ok_or(Error::EmptyInput("subject matrices"))?;
        for m in matrices {
            if m.family != first.family {
                return Err(Error::Schema(format!(
                    "cannot combine {} and {} matrices in one graph",
                    first.family, m.family
                )));
            }
            if m.tasks != first.tasks {
                return Err(Error::Schema("subject matrices cover different tasks".into()));
            }
        }
        let grids: Vec<Vec<Vec<f64>>> = matrices.iter().map(|m| m.r2_grid()).collect();
        Self::from_grids(first.family, first.tasks.clone(), &grids)
    }

    pub fn edge_count(&self) -> usize {
        self.tasks.len() * self.tasks.len()
    }

    pub fn weight(&self, from: TaskLabel, to: TaskLabel) -> Option<f64> {
        let i = self.tasks.iter().position(|&t| t == from)?;
        let j = self.tasks.iter().position(|&t| t == to)?;
        Some(self.weights[i][j])
    }

    /// Arithmetic mean of the selected edge weights.
    pub fn score(&self, selection: EdgeSelection) -> f64 {
        let n = self.tasks.len();
        let mut sum = 0.0;
        let mut count = 0usize;
        for i in 0..n {
            for j in 0..n {
                if selection == EdgeSelection::OffDiagonal && i == j {
                    continue;
                }
                sum += self.weights[i][j];
                count += 1;
            }
        }
        if count == 0 {
            // a single-task graph has no off-diagonal edges
            f64::NAN
        } else {
            sum / count as f64
        }
    }

    /// Mean of the outgoing edges `j ≠ i` of each task.
    pub fn out_edge_means(&self) -> BTreeMap<TaskLabel, f64> {
        let n = self.tasks.len();
        self.tasks
            .iter()
            .enumerate()
            .map(|(i, &t)| {
                let vals: Vec<f64> = (0..n).filter(|&j| j != i).map(|j| self.weights[i][j]).collect();
                let mean = if vals.is_empty() {
                    f64::NAN
                } else {
                    vals.iter().sum::<f64>() / vals.len() as f64
                };
                (t, mean)
            })
            .collect()
    }
}

/// Family score over all edges from per-subject matrices.
pub fn graph_score(matrices: &[CrossTaskMatrix]) -> Result<f64> {
    Ok(GeneralizabilityGraph::from_matrices(matrices)?.score(EdgeSelection::All))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskThresholdStats {
    pub task: TaskLabel,
    /// Outgoing edges `j ≠ i` with weight ≥ threshold.
    pub count: usize,
    /// Mean weight of those edges; `None` when `count` is 0.
    pub mean: Option<f64>,
}

pub fn task_generalizability(graph: &GeneralizabilityGraph, threshold: f64) -> Vec<TaskThresholdStats> {
    let n = graph.tasks.len();
    graph
        .tasks
        .iter()
        .enumerate()
        .map(|(i, &task)| {
            let passing: Vec<f64> = (0..n)
                .filter(|&j| j != i)
                .map(|j| graph.weights[i][j])
                .filter(|&w| w >= threshold)
                .collect();
            TaskThresholdStats {
                task,
                count: passing.len(),
                mean: (!passing.is_empty()).then(|| passing.iter().sum::<f64>() / passing.len() as f64),
            }
        })
        .collect()
}

/// Per-task scores of each family, e.g. from [`GeneralizabilityGraph::out_edge_means`].
pub type TaskScores = BTreeMap<Family, BTreeMap<TaskLabel, f64>>;

/// Tasks sorted by their mean score over families, best first; ties keep
/// the fixed task order.
pub fn task_ranking(scores: &TaskScores, tasks: &[TaskLabel]) -> Result<Vec<(TaskLabel, f64)>> {
    if scores.is_empty() {
        return Err(Error::MissingEntries("no family scores".into()));
    }
    let mut tasks = tasks.to_vec();
    tasks.sort();
    tasks.dedup();
    let mut ranked = Vec::with_capacity(tasks.len());
    for &t in &tasks {
        let mut sum = 0.0;
        for (family, per_task) in scores {
            let v = per_task
                .get(&t)
                .ok_or_else(|| Error::MissingEntries(format!("{family} has no score for task {t}")))?;
            sum += v;
        }
        ranked.push((t, sum / scores.len() as f64));
    }
    // stable sort keeps task order among equal means
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1));
    Ok(ranked)
}
