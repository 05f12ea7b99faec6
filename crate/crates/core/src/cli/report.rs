//! On-disk artifacts: the trial manifest, the benchmark bundle and its
//! summary index.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::evaluation::export::{graph_dot, matrix_csv_string, GraphJson, MatrixTable};
use crate::evaluation::TaskThresholdStats;
use crate::io::{read_trials, write_trials};
use crate::pipeline::{BenchmarkResult, RunConfig};
use crate::regressors::Family;
use crate::synth::{task_seed, trial_seed, SubjectParams};
use crate::types::{TaskLabel, Trial};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const SUMMARY_FILE: &str = "summary.json";
pub const SUMMARY_SCHEMA: &str = include_str!("../../schemas/summary.schema.json");

fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

/// Stable identifier of a configuration. The output directory does not
/// enter it.
pub fn run_id(cfg: &RunConfig) -> Result<String> {
    let mut c = cfg.clone();
    c.output_dir = PathBuf::new();
    let text = serde_json::to_string(&c)?;
    Ok(format!("run-{}", &sha256_hex(text.as_bytes())[..16]))
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    /// Relative to the manifest's directory.
    pub path: String,
    pub subject: String,
    pub task: TaskLabel,
    pub trial: u32,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub run_id: String,
    pub seed: u64,
    pub subjects: Vec<SubjectParams>,
    pub files: Vec<ManifestEntry>,
    pub config: RunConfig,
}

pub fn trial_file_name(trial: &Trial) -> String {
    format!("trials/S{}_{}_T{}.csv", trial.subject, trial.task, trial.trial_index)
}

/// Writes one CSV per trial plus the manifest under `cfg.output_dir`.
/// `trials` must come from [`crate::pipeline::generate_trials`] on `cfg`.
pub fn write_generated(cfg: &RunConfig, trials: &[Trial]) -> Result<Manifest> {
    let subjects = cfg.subject_params();
    let mut files = Vec::with_capacity(trials.len());
    for t in trials {
        let s = subjects
            .iter()
            .position(|p| p.id == t.subject)
            .ok_or_else(|| Error::Schema(format!("trial subject {} is not in the configuration", t.subject)))?;
        let rel = trial_file_name(t);
        let path = cfg.output_dir.join(&rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        write_trials(&path, std::slice::from_ref(t))?;
        files.push(ManifestEntry {
            path: rel,
            subject: t.subject.clone(),
            task: t.task,
            trial: t.trial_index,
            seed: trial_seed(task_seed(cfg.seed, s, t.task), t.task, t.trial_index as usize - 1),
        });
    }
    let manifest = Manifest {
        run_id: run_id(cfg)?,
        seed: cfg.seed,
        subjects,
        files,
        config: cfg.clone(),
    };
    write_file(&cfg.output_dir.join(MANIFEST_FILE), &serde_json::to_string_pretty(&manifest)?)?;
    Ok(manifest)
}

pub fn read_manifest(path: &Path) -> Result<Manifest> {
    serde_json::from_str(&read_file(path)?).map_err(|e| Error::from(e).context(path.display().to_string()))
}

/// Trials of a data directory: the files listed in its manifest, or every
/// `*.csv` below it in name order when there is no manifest.
pub fn read_data_dir(dir: &Path) -> Result<Vec<Trial>> {
    let manifest = dir.join(MANIFEST_FILE);
    let paths: Vec<PathBuf> = if manifest.exists() {
        read_manifest(&manifest)?.files.iter().map(|f| dir.join(&f.path)).collect()
    } else {
        let mut found = Vec::new();
        collect_csv(dir, &mut found)?;
        found.sort();
        found
    };
    if paths.is_empty() {
        return Err(Error::EmptyInput("trial files"));
    }
    let mut trials = Vec::new();
    for p in paths {
        trials.extend(read_trials(&p)?);
    }
    Ok(trials)
}

fn collect_csv(dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    for entry in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.is_dir() {
            collect_csv(&path, out)?;
        } else if path.extension().and_then(|e| e.to_str()) == Some("csv") {
            out.push(path);
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedTask {
    pub task: TaskLabel,
    pub score: f64,
}

/// The results index of one benchmark run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub run_id: String,
    pub seed: u64,
    pub families: Vec<Family>,
    pub tasks: Vec<TaskLabel>,
    pub subjects: Vec<String>,
    pub folds: usize,
    /// All-edge graph score per family, in percent.
    pub scores: BTreeMap<Family, f64>,
    pub off_diagonal_scores: BTreeMap<Family, Option<f64>>,
    pub diagonal_means: BTreeMap<Family, f64>,
    pub threshold: f64,
    pub threshold_stats: BTreeMap<Family, Vec<TaskThresholdStats>>,
    pub task_ranking: Vec<RankedTask>,
    pub matrices: Vec<String>,
    pub graphs: Vec<String>,
    /// Mean fit seconds per family; excluded from `content_hash`.
    pub timings: BTreeMap<Family, f64>,
    pub content_hash: String,
}

impl Summary {
    /// SHA-256 of the summary with `timings` and `content_hash` removed.
    pub fn compute_hash(&self) -> Result<String> {
        hash_summary_value(&serde_json::to_value(self)?)
    }
}

/// Same as [`Summary::compute_hash`] for an already parsed document.
pub fn hash_summary_value(value: &serde_json::Value) -> Result<String> {
    let mut v = value.clone();
    let obj = v
        .as_object_mut()
        .ok_or_else(|| Error::Schema("summary is not a JSON object".into()))?;
    obj.remove("timings");
    obj.remove("content_hash");
    Ok(sha256_hex(serde_json::to_string(&v)?.as_bytes()))
}

pub fn matrix_file_name(family: Family, subject: &str) -> String {
    format!("matrices/{family}_S{subject}.csv")
}

pub fn graph_file_names(family: Family) -> [String; 2] {
    [format!("graphs/{family}.dot"), format!("graphs/{family}.json")]
}

/// Writes matrices, graphs and the summary under `cfg.output_dir`, in
/// family then subject order.
pub fn write_benchmark(cfg: &RunConfig, subjects: &[String], result: &BenchmarkResult) -> Result<Summary> {
    let out = &cfg.output_dir;
    let mut matrices = Vec::new();
    let mut graphs = Vec::new();
    for fr in &result.families {
        for m in &fr.matrices {
            let rel = matrix_file_name(fr.family, &m.subject);
            write_file(&out.join(&rel), &matrix_csv_string(&MatrixTable::from(m))?)?;
            matrices.push(rel);
        }
        let [dot, json] = graph_file_names(fr.family);
        write_file(&out.join(&dot), &graph_dot(&fr.graph))?;
        write_file(&out.join(&json), &serde_json::to_string_pretty(&GraphJson::from(&fr.graph))?)?;
        graphs.push(dot);
        graphs.push(json);
    }
    let mut summary = Summary {
        run_id: run_id(cfg)?,
        seed: cfg.seed,
        families: cfg.families.clone(),
        tasks: cfg.tasks.clone(),
        subjects: subjects.to_vec(),
        folds: cfg.folds,
        scores: result.families.iter().map(|r| (r.family, r.score)).collect(),
        off_diagonal_scores: result.families.iter().map(|r| (r.family, r.off_diagonal_score)).collect(),
        diagonal_means: result.families.iter().map(|r| (r.family, r.diagonal_mean)).collect(),
        threshold: cfg.threshold,
        threshold_stats: result.families.iter().map(|r| (r.family, r.threshold_stats.clone())).collect(),
        task_ranking: result
            .task_ranking
            .iter()
            .map(|&(task, score)| RankedTask { task, score })
            .collect(),
        matrices,
        graphs,
        timings: result.timings(),
        content_hash: String::new(),
    };
    summary.content_hash = summary.compute_hash()?;
    write_file(&out.join(SUMMARY_FILE), &serde_json::to_string_pretty(&summary)?)?;
    Ok(summary)
}

pub fn read_summary(path: &Path) -> Result<Summary> {
    let summary: Summary =
        serde_json::from_str(&read_file(path)?).map_err(|e| Error::from(e).context(path.display().to_string()))?;
    let hash = summary.compute_hash()?;
    if hash != summary.content_hash {
        return Err(Error::Schema(format!(
            "{}: content_hash {} does not match the contents ({hash})",
            path.display(),
            summary.content_hash
        )));
    }
    Ok(summary)
}
