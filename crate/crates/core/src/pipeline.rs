//! Generate → preprocess → train → evaluate, shared by the CLI and the
//! tests.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::{
    cross_task_matrix_for, mean_fit_times, task_generalizability, task_ranking, CrossTaskMatrix, EdgeSelection,
    GeneralizabilityGraph, TaskScores, TaskThresholdStats, DEFAULT_THRESHOLD,
};
use crate::preprocess::{average_trials, build_pairs, make_folds, FoldPlan, DEFAULT_COMMON_LEN, DEFAULT_FOLDS};
use crate::regressors::{Family, Hyperparameters, ModelSpec};
use crate::seed::derive_seed;
use crate::synth::{generate_subject_task, task_seed, SubjectParams, SynthConfig};
use crate::types::{validate_dataset, DimensionProfile, TaskDataset, TaskLabel, Trial};

pub const DEFAULT_SEED: u64 = 2024;
pub const DEFAULT_SUBJECTS: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub seed: u64,
    pub families: Vec<Family>,
    pub tasks: Vec<TaskLabel>,
    pub subjects: usize,
    pub folds: usize,
    pub common_len: usize,
    pub threshold: f64,
    pub output_dir: PathBuf,
    pub profile: DimensionProfile,
    /// Per-family overrides; families absent here use their defaults.
    pub hyperparameters: Vec<Hyperparameters>,
    pub synth: SynthConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: DEFAULT_SEED,
            families: Family::ALL.to_vec(),
            tasks: TaskLabel::ALL.to_vec(),
            subjects: DEFAULT_SUBJECTS,
            folds: DEFAULT_FOLDS,
            common_len: DEFAULT_COMMON_LEN,
            threshold: DEFAULT_THRESHOLD,
            output_dir: PathBuf::from("results"),
            profile: DimensionProfile::default(),
            hyperparameters: Vec::new(),
            synth: SynthConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.families.is_empty() {
            return Err(Error::EmptyInput("family list"));
        }
        if self.tasks.is_empty() {
            return Err(Error::EmptyInput("task list"));
        }
        if self.subjects == 0 {
            return Err(Error::EmptyInput("subject count"));
        }
        if self.folds < 2 {
            return Err(Error::InvalidHyperparameter(format!(
                "fold count must be at least 2, got {}",
                self.folds
            )));
        }
        if self.common_len < 2 {
            return Err(Error::InvalidHyperparameter("common_len must be at least 2".into()));
        }
        for h in &self.hyperparameters {
            h.validate()?;
        }
        Ok(())
    }

    /// Reads a TOML or JSON (by extension) configuration; absent keys keep
    /// their defaults.
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg = match path.extension().and_then(|e| e.to_str()) {
            Some("json") => serde_json::from_str(&text)?,
            _ => toml::from_str(&text)?,
        };
        Ok(cfg)
    }

    /// Families and tasks sorted and deduplicated.
    pub fn normalized(mut self) -> Self {
        self.families.sort();
        self.families.dedup();
        self.tasks.sort();
        self.tasks.dedup();
        self
    }

    pub fn spec(&self, family: Family) -> ModelSpec {
        let hyperparameters = self
            .hyperparameters
            .iter()
            .rev()
            .find(|h| h.family() == family)
            .cloned()
            .unwrap_or_else(|| Hyperparameters::default_for(family));
        ModelSpec {
            hyperparameters,
            seed: derive_seed(self.seed, &[0xFA, family.index() as u64]),
        }
    }

    pub fn subject_params(&self) -> Vec<SubjectParams> {
        (0..self.subjects).map(|i| SubjectParams::draw(i, self.seed)).collect()
    }
}

/// Every trial of every (subject, task) in the configuration.
pub fn generate_trials(cfg: &RunConfig) -> Result<Vec<Trial>> {
    let noise = cfg.synth.noise()?;
    let jobs: Vec<(usize, SubjectParams, TaskLabel)> = cfg
        .subject_params()
        .into_iter()
        .enumerate()
        .flat_map(|(i, s)| cfg.tasks.iter().map(move |&t| (i, s.clone(), t)))
        .collect();
    let per_job: Vec<Vec<Trial>> = jobs
        .par_iter()
        .map(|(i, subject, task)| {
            let arch = cfg.synth.archetype(*task)?;
            generate_subject_task(&arch, subject, &noise, cfg.synth.trials, task_seed(cfg.seed, *i, *task))
        })
        .collect::<Result<_>>()?;
    Ok(per_job.into_iter().flatten().collect())
}

/// Datasets of one subject, in task order.
#[derive(Debug, Clone, PartialEq)]
pub struct SubjectData {
    pub subject: String,
    pub datasets: Vec<TaskDataset>,
}

/// Averages the trials of each (subject, task) and builds supervised
/// pairs. Subjects keep their order of first appearance.
pub fn build_datasets(trials: &[Trial], common_len: usize, profile: &DimensionProfile) -> Result<Vec<SubjectData>> {
    let mut subjects: Vec<String> = Vec::new();
    let mut groups: BTreeMap<(String, TaskLabel), Vec<Trial>> = BTreeMap::new();
    for t in trials {
        if !subjects.contains(&t.subject) {
            subjects.push(t.subject.clone());
        }
        groups.entry((t.subject.clone(), t.task)).or_default().push(t.clone());
    }
    subjects
        .into_iter()
        .map(|s| {
            let datasets = groups
                .iter()
                .filter(|((subj, _), _)| *subj == s)
                .map(|((_, task), ts)| {
                    let avg = average_trials(ts, common_len)?;
                    validate_dataset(build_pairs(&avg)?, profile)
                        .map_err(|e| e.context(format!("subject {s} task {task}")))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(SubjectData { subject: s, datasets })
        })
        .collect()
}

pub fn fold_plans(cfg: &RunConfig, subject_index: usize, datasets: &[TaskDataset]) -> Result<BTreeMap<TaskLabel, FoldPlan>> {
    datasets
        .iter()
        .map(|ds| {
            let seed = derive_seed(cfg.seed, &[0xF0, subject_index as u64, ds.task.index() as u64]);
            Ok((ds.task, make_folds(ds.len(), cfg.folds, seed)?))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyResult {
    pub family: Family,
    /// One matrix per subject, in subject order.
    pub matrices: Vec<CrossTaskMatrix>,
    pub graph: GeneralizabilityGraph,
    pub score: f64,
    pub off_diagonal_score: Option<f64>,
    /// Mean of the subject-averaged diagonal (cross-validated) cells.
    pub diagonal_mean: f64,
    pub threshold_stats: Vec<TaskThresholdStats>,
    pub mean_fit_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkResult {
    pub families: Vec<FamilyResult>,
    pub task_ranking: Vec<(TaskLabel, f64)>,
}

impl BenchmarkResult {
    pub fn timings(&self) -> BTreeMap<Family, f64> {
        self.families.iter().map(|f| (f.family, f.mean_fit_time)).collect()
    }
}

/// Runs every (family, subject) cross-task matrix and aggregates them.
pub fn run_benchmark(cfg: &RunConfig, data: &[SubjectData]) -> Result<BenchmarkResult> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::EmptyInput("subject datasets"));
    }
    let plans: Vec<BTreeMap<TaskLabel, FoldPlan>> = data
        .iter()
        .enumerate()
        .map(|(i, s)| fold_plans(cfg, i, &s.datasets))
        .collect::<Result<_>>()?;
    let jobs: Vec<(Family, usize)> = cfg
        .families
        .iter()
        .flat_map(|&f| (0..data.len()).map(move |s| (f, s)))
        .collect();
    let matrices: Vec<CrossTaskMatrix> = jobs
        .par_iter()
        .map(|&(family, s)| {
            log::info!("{family}: subject {}", data[s].subject);
            cross_task_matrix_for(&cfg.spec(family), &data[s].datasets, &plans[s], &cfg.tasks)
        })
        .collect::<Result<_>>()?;

    let mut families = Vec::with_capacity(cfg.families.len());
    let mut task_scores = TaskScores::new();
    for (k, &family) in cfg.families.iter().enumerate() {
        let ms: Vec<CrossTaskMatrix> = matrices[k * data.len()..(k + 1) * data.len()].to_vec();
        let graph = GeneralizabilityGraph::from_matrices(&ms)?;
        let records: Vec<_> = ms.iter().flat_map(|m| m.fit_records.iter().copied()).collect();
        let n = graph.tasks.len();
        let diagonal_mean = (0..n).map(|i| graph.weights[i][i]).sum::<f64>() / n as f64;
        let off = graph.score(EdgeSelection::OffDiagonal);
        if n > 1 {
            task_scores.insert(family, graph.out_edge_means());
        }
        families.push(FamilyResult {
            family,
            score: graph.score(EdgeSelection::All),
            off_diagonal_score: off.is_finite().then_some(off),
            diagonal_mean,
            threshold_stats: task_generalizability(&graph, cfg.threshold),
            mean_fit_time: mean_fit_times(&records).get(&family).copied().unwrap_or(0.0),
            graph,
            matrices: ms,
        });
    }
    let task_ranking = if task_scores.is_empty() {
        Vec::new()
    } else {
        task_ranking(&task_scores, &cfg.tasks)?
    };
    Ok(BenchmarkResult {
        families,
        task_ranking,
    })
}
