//! The `exodyn` command line: `generate`, `benchmark`, `fixture-rank` and
//! `check`.

pub mod args;
pub mod report;

use std::ffi::OsString;
use std::io::Write;
use std::path::Path;

use clap::Parser;

use crate::error::{Error, Result};
use crate::evaluation::export::{parse_fixture, parse_graph_dot, parse_matrix_csv, Fixture, GraphJson};
use crate::evaluation::EdgeSelection;
use crate::io::parse_trials;
use crate::pipeline::{build_datasets, generate_trials, run_benchmark, RunConfig};
use crate::regressors::Family;
use crate::synth::SynthConfig;

pub use args::{Cli, Command};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_ASSERTION: i32 = 3;

/// Published per-subject Total R² values for every family and task pair.
pub const PUBLISHED_FIXTURE: &str = include_str!("../../data/published_total_r2.csv");

/// Published family order and scores the fixture ranking is compared with.
pub const REFERENCE_RANKING: [(Family, f64); 6] = [
    (Family::Xgboost, 84.93),
    (Family::Gpr, 82.31),
    (Family::Knn, 76.79),
    (Family::Lwpr, 69.31),
    (Family::Svr, 63.31),
    (Family::Mlp, 55.65),
];

enum Failure {
    Usage(String),
    Data(Error),
    Assertion(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Data(e)
    }
}

/// Parses `args` (program name first) and runs the command, writing the
/// report to `out` and diagnostics to stderr. Returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let _ = env_logger::Builder::new().filter_level(cli.log).try_init();
    let result = match &cli.command {
        Command::Generate(a) => cmd_generate(a, out),
        Command::Benchmark(a) => cmd_benchmark(a, out),
        Command::FixtureRank(a) => cmd_fixture_rank(a, out),
        Command::Check(a) => cmd_check(a, out),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Data(e)) => {
            eprintln!("error: {e}");
            EXIT_DATA
        }
        Err(Failure::Assertion(msg)) => {
            eprintln!("assertion failed: {msg}");
            EXIT_ASSERTION
        }
    }
}

/// Defaults, then the config file, then the flags.
pub fn resolve_config(a: &args::RunArgs) -> Result<RunConfig> {
    let mut cfg = match &a.config {
        Some(p) => RunConfig::from_path(p).map_err(|e| e.context(p.display().to_string()))?,
        None => RunConfig::default(),
    };
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(f) = &a.families {
        cfg.families = f.clone();
    }
    if let Some(t) = &a.tasks {
        cfg.tasks = t.clone();
    }
    if let Some(s) = a.subjects {
        cfg.subjects = s;
    }
    if let Some(k) = a.folds {
        cfg.folds = k;
    }
    if let Some(o) = &a.out {
        cfg.output_dir = o.clone();
    }
    if a.noiseless {
        cfg.synth.noise_variances = SynthConfig::noiseless().noise_variances;
    }
    let cfg = cfg.normalized();
    cfg.validate()?;
    Ok(cfg)
}

fn config_or_usage(a: &args::RunArgs) -> std::result::Result<RunConfig, Failure> {
    resolve_config(a).map_err(|e| match e.root() {
        Error::Io { .. } | Error::Json(_) | Error::Toml(_) => Failure::Data(e),
        _ => Failure::Usage(e.to_string()),
    })
}

fn cmd_generate(a: &args::RunArgs, out: &mut dyn Write) -> std::result::Result<(), Failure> {
    let cfg = config_or_usage(a)?;
    let trials = generate_trials(&cfg)?;
    let manifest = report::write_generated(&cfg, &trials)?;
    let _ = writeln!(
        out,
        "wrote {} trial files and {} to {}",
        manifest.files.len(),
        report::MANIFEST_FILE,
        cfg.output_dir.display()
    );
    Ok(())
}

fn cmd_benchmark(a: &args::BenchmarkArgs, out: &mut dyn Write) -> std::result::Result<(), Failure> {
    let mut cfg = config_or_usage(&a.run)?;
    let trials = match &a.data {
        Some(dir) => {
            let all = report::read_data_dir(dir)?;
            all.into_iter().filter(|t| cfg.tasks.contains(&t.task)).collect()
        }
        None => generate_trials(&cfg)?,
    };
    let data = build_datasets(&trials, cfg.common_len, &cfg.profile)?;
    if a.data.is_some() {
        cfg.subjects = data.len();
    }
    let result = run_benchmark(&cfg, &data)?;
    let subjects: Vec<String> = data.iter().map(|s| s.subject.clone()).collect();
    let summary = report::write_benchmark(&cfg, &subjects, &result)?;
    let _ = writeln!(out, "run {} ({} subjects, {} tasks)", summary.run_id, subjects.len(), cfg.tasks.len());
    let _ = writeln!(out, "{:<8} {:>10} {:>10} {:>10} {:>10}", "family", "score", "off-diag", "diagonal", "fit s");
    for f in &result.families {
        let off = f.off_diagonal_score.map_or("-".to_string(), |v| format!("{v:.2}"));
        let _ = writeln!(
            out,
            "{:<8} {:>10.2} {:>10} {:>10.2} {:>10.4}",
            f.family.as_str(),
            f.score,
            off,
            f.diagonal_mean,
            f.mean_fit_time
        );
    }
    if !summary.task_ranking.is_empty() {
        let order: Vec<String> = summary.task_ranking.iter().map(|r| r.task.to_string()).collect();
        let _ = writeln!(out, "task ranking: {}", order.join(" > "));
    }
    let _ = writeln!(out, "summary: {}", cfg.output_dir.join(report::SUMMARY_FILE).display());
    Ok(())
}

/// Family scores on a fixture and the ranking they induce.
#[derive(Debug, Clone, PartialEq)]
pub struct FixtureReport {
    pub selection: EdgeSelection,
    /// `(family, all-edge score, off-diagonal score)` in family order.
    pub scores: Vec<(Family, f64, f64)>,
    /// Families by the selected score, best first; ties keep family order.
    pub ranking: Vec<Family>,
    /// Adjacent ranking positions with exactly equal scores.
    pub ties: Vec<(Family, Family)>,
}

impl FixtureReport {
    pub fn score(&self, family: Family) -> Option<f64> {
        self.scores.iter().find(|s| s.0 == family).map(|s| match self.selection {
            EdgeSelection::All => s.1,
            EdgeSelection::OffDiagonal => s.2,
        })
    }

    pub fn matches_reference(&self) -> bool {
        self.ties.is_empty() && self.ranking.iter().eq(REFERENCE_RANKING.iter().map(|r| &r.0))
    }
}

pub fn fixture_rank(fixture: &Fixture, selection: EdgeSelection) -> Result<FixtureReport> {
    let mut scores = Vec::with_capacity(Family::ALL.len());
    for f in Family::ALL {
        let g = fixture.graph(f)?;
        scores.push((f, g.score(EdgeSelection::All), g.score(EdgeSelection::OffDiagonal)));
    }
    let pick = |s: &(Family, f64, f64)| match selection {
        EdgeSelection::All => s.1,
        EdgeSelection::OffDiagonal => s.2,
    };
    let mut ranked = scores.clone();
    ranked.sort_by(|a, b| pick(b).total_cmp(&pick(a)));
    let ties = ranked
        .windows(2)
        .filter(|w| pick(&w[0]) == pick(&w[1]))
        .map(|w| (w[0].0, w[1].0))
        .collect();
    Ok(FixtureReport {
        selection,
        scores,
        ranking: ranked.iter().map(|s| s.0).collect(),
        ties,
    })
}

fn cmd_fixture_rank(a: &args::FixtureArgs, out: &mut dyn Write) -> std::result::Result<(), Failure> {
    let fixture = match &a.fixture {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            parse_fixture(&text).map_err(|e| e.context(p.display().to_string()))?
        }
        None => parse_fixture(PUBLISHED_FIXTURE)?,
    };
    let rep = fixture_rank(&fixture, a.edges.into())?;
    let _ = writeln!(out, "{:<8} {:>10} {:>10} {:>10}", "family", "all-edge", "off-diag", "reported");
    for &(f, all, off) in &rep.scores {
        let reported = REFERENCE_RANKING.iter().find(|r| r.0 == f).map(|r| r.1).unwrap_or(f64::NAN);
        let _ = writeln!(out, "{:<8} {:>10.2} {:>10.2} {:>10.2}", f.as_str(), all, off, reported);
    }
    let names = |fs: &mut dyn Iterator<Item = Family>| fs.map(|f| f.as_str()).collect::<Vec<_>>().join(" > ");
    let _ = writeln!(out, "ranking:   {}", names(&mut rep.ranking.iter().copied()));
    let _ = writeln!(out, "reference: {}", names(&mut REFERENCE_RANKING.iter().map(|r| r.0)));
    if !rep.ties.is_empty() {
        let list: Vec<String> = rep.ties.iter().map(|(a, b)| format!("{a} = {b}")).collect();
        return Err(Failure::Assertion(format!(
            "{} tied score pair(s) ({}); a tie never matches the reference order",
            rep.ties.len(),
            list.join(", ")
        )));
    }
    if !rep.matches_reference() {
        return Err(Failure::Assertion("ranking differs from the reference order".into()));
    }
    let _ = writeln!(out, "ranking matches the reference order");
    Ok(())
}

/// What a file written by this tool contains, after reading it back.
pub fn describe_file(path: &Path) -> Result<String> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let ctx = |e: Error| e.context(path.display().to_string());
    match path.extension().and_then(|e| e.to_str()) {
        Some("dot") => {
            let g = parse_graph_dot(&text).map_err(ctx)?;
            Ok(format!("graph of {} over {} tasks", g.family, g.tasks.len()))
        }
        Some("json") => {
            let v: serde_json::Value = serde_json::from_str(&text).map_err(|e| ctx(e.into()))?;
            if v.get("content_hash").is_some() {
                let s = report::read_summary(path)?;
                Ok(format!("summary {} with {} families", s.run_id, s.families.len()))
            } else if v.get("files").is_some() {
                let m = report::read_manifest(path)?;
                Ok(format!("manifest {} listing {} trial files", m.run_id, m.files.len()))
            } else {
                let g: GraphJson = serde_json::from_value(v).map_err(|e| ctx(e.into()))?;
                Ok(format!("graph of {} over {} tasks (score {:.2})", g.graph.family, g.graph.tasks.len(), g.score))
            }
        }
        Some("csv") => {
            let first = text
                .lines()
                .find(|l| !l.trim_start().starts_with('#'))
                .unwrap_or_default();
            if first.starts_with("train_task,") {
                let m = parse_matrix_csv(&text).map_err(ctx)?;
                Ok(format!("cross-task matrix over {} tasks", m.tasks.len()))
            } else if first.starts_with("family,") {
                let f = parse_fixture(&text).map_err(ctx)?;
                Ok(format!("fixture with {} families", f.grids.len()))
            } else {
                let ts = parse_trials(&text).map_err(ctx)?;
                let rows: usize = ts.iter().map(|t| t.len()).sum();
                Ok(format!("{} trial(s), {rows} samples", ts.len()))
            }
        }
        _ => Err(Error::Schema(format!("{}: unrecognised file type", path.display()))),
    }
}

fn cmd_check(a: &args::CheckArgs, out: &mut dyn Write) -> std::result::Result<(), Failure> {
    for p in &a.files {
        let d = describe_file(p)?;
        let _ = writeln!(out, "{}: {d}", p.display());
    }
    Ok(())
}
