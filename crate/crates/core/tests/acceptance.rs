//! Acceptance criteria 1–10. Each test prints one PASS/FAIL line (written
//! straight to stderr so it shows even when the test passes). A mutex
//! runs them one at a time so the runtime limits are measured without
//! interference.

mod common;

use std::io::Write;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use common::checks::{self, Check};
use exodyn::cli::report::write_benchmark;
use exodyn::cli::{fixture_rank, PUBLISHED_FIXTURE, REFERENCE_RANKING};
use exodyn::evaluation::export::parse_fixture;
use exodyn::evaluation::EdgeSelection;
use exodyn::pipeline::{build_datasets, generate_trials, run_benchmark, RunConfig};
use exodyn::regressors::Family;
use exodyn::synth::SynthConfig;

static SERIAL: Mutex<()> = Mutex::new(());

fn criterion(number: u32, name: &str, limit: Duration, body: impl FnOnce() -> Check) {
    let guard = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let start = Instant::now();
    let outcome = body();
    let elapsed = start.elapsed();
    drop(guard);
    let outcome = outcome.and_then(|detail| {
        if elapsed <= limit {
            Ok(detail)
        } else {
            Err(format!("took {:.2} s, limit {:.0} s ({detail})", elapsed.as_secs_f64(), limit.as_secs_f64()))
        }
    });
    let line = match &outcome {
        Ok(detail) => format!("criterion {number:>2} {name}: PASS in {:.2} s; {detail}", elapsed.as_secs_f64()),
        Err(why) => format!("criterion {number:>2} {name}: FAIL in {:.2} s; {why}", elapsed.as_secs_f64()),
    };
    let _ = writeln!(std::io::stderr(), "{line}");
    if let Err(why) = outcome {
        panic!("criterion {number} failed: {why}");
    }
}

#[test]
fn criterion_01_fixture_ranking() {
    criterion(1, "fixture ranking", Duration::from_secs(1), || {
        let fixture = parse_fixture(PUBLISHED_FIXTURE).map_err(|e| e.to_string())?;
        let report = fixture_rank(&fixture, EdgeSelection::All).map_err(|e| e.to_string())?;
        let scores: Vec<String> = REFERENCE_RANKING
            .iter()
            .map(|&(f, reported)| format!("{f} {:.2} (reported {reported:.2})", report.score(f).unwrap()))
            .collect();
        let order: Vec<&str> = report.ranking.iter().map(|f| f.as_str()).collect();
        if report.matches_reference() {
            Ok(format!("{}; {}", order.join(" > "), scores.join(", ")))
        } else {
            Err(format!(
                "ranking {} differs from XGBoost > GPR > KNN > LWPR > SVR > MLP; ties {:?}; {}",
                order.join(" > "),
                report.ties,
                scores.join(", ")
            ))
        }
    });
}

#[test]
fn criterion_02_metric_oracles() {
    criterion(2, "metric oracles", Duration::from_secs(5), || checks::metric_oracle(0xA2, 1000));
}

#[test]
fn criterion_03_gpr_oracle() {
    criterion(3, "GPR oracle", Duration::from_secs(10), || checks::gpr_oracle(0xA3, 50));
}

#[test]
fn criterion_04_knn_oracle() {
    criterion(4, "KNN oracle", Duration::from_secs(5), || checks::knn_oracle(0xA4, 100));
}

#[test]
fn criterion_05_xgboost_split_oracle() {
    criterion(5, "XGBoost split oracle", Duration::from_secs(10), || {
        checks::xgboost_split_oracle(0xA5, 200)
    });
}

#[test]
fn criterion_06_mlp_gradient_check() {
    criterion(6, "MLP gradient check", Duration::from_secs(10), || checks::mlp_gradient_check(0xA6, 20));
}

#[test]
fn criterion_07_lwpr_laws() {
    criterion(7, "LWPR laws", Duration::from_secs(5), || checks::lwpr_laws(0xA7, 1000));
}

#[test]
fn criterion_08_svr_kkt() {
    criterion(8, "SVR KKT and reference QP", Duration::from_secs(30), || checks::svr_kkt(0xA8, 20));
}

#[test]
fn criterion_09_pipeline_laws() {
    criterion(9, "pipeline laws", Duration::from_secs(5), || checks::pipeline_laws(0xA9, 100));
}

fn full_noiseless_run(dir: &std::path::Path) -> Result<exodyn::cli::report::Summary, String> {
    let cfg = RunConfig {
        synth: SynthConfig::noiseless(),
        output_dir: dir.to_path_buf(),
        ..RunConfig::default()
    };
    let trials = generate_trials(&cfg).map_err(|e| e.to_string())?;
    let data = build_datasets(&trials, cfg.common_len, &cfg.profile).map_err(|e| e.to_string())?;
    let result = run_benchmark(&cfg, &data).map_err(|e| e.to_string())?;
    let subjects: Vec<String> = data.iter().map(|s| s.subject.clone()).collect();
    write_benchmark(&cfg, &subjects, &result).map_err(|e| e.to_string())
}

#[test]
fn criterion_10_end_to_end() {
    let guard = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let start = Instant::now();
    let first = full_noiseless_run(dirs[0].path());
    let elapsed = start.elapsed();
    let second = full_noiseless_run(dirs[1].path());
    drop(guard);

    let limit = Duration::from_secs(600);
    let outcome: Check = (|| {
        let a = first?;
        let b = second?;
        if elapsed > limit {
            return Err(format!("run took {:.1} s, limit 600 s", elapsed.as_secs_f64()));
        }
        if a.families.len() != Family::ALL.len() || a.subjects.len() != 3 || a.tasks.len() != 6 {
            return Err(format!("unexpected shape: {:?} / {:?} / {:?}", a.families, a.subjects, a.tasks));
        }
        // 18 matrices, 6 graphs in two formats each
        if a.matrices.len() != 18 || a.graphs.len() != 12 {
            return Err(format!("{} matrix files and {} graph files", a.matrices.len(), a.graphs.len()));
        }
        let low: Vec<String> = a
            .diagonal_means
            .iter()
            .filter(|(_, &v)| v < 90.0)
            .map(|(f, v)| format!("{f} {v:.2}"))
            .collect();
        if !low.is_empty() {
            return Err(format!("diagonal mean below 90: {}", low.join(", ")));
        }
        if a.content_hash != b.content_hash {
            return Err(format!("summary hash changed between runs: {} vs {}", a.content_hash, b.content_hash));
        }
        for rel in a.matrices.iter().chain(&a.graphs) {
            let x = std::fs::read(dirs[0].path().join(rel)).map_err(|e| e.to_string())?;
            let y = std::fs::read(dirs[1].path().join(rel)).map_err(|e| e.to_string())?;
            if x != y {
                return Err(format!("{rel} differs between runs"));
            }
        }
        let diag: Vec<String> = a.diagonal_means.iter().map(|(f, v)| format!("{f} {v:.2}")).collect();
        Ok(format!("diagonal means {}; hash {}", diag.join(", "), &a.content_hash[..12]))
    })();
    let line = match &outcome {
        Ok(d) => format!("criterion 10 end-to-end benchmark: PASS in {:.2} s; {d}", elapsed.as_secs_f64()),
        Err(w) => format!("criterion 10 end-to-end benchmark: FAIL in {:.2} s; {w}", elapsed.as_secs_f64()),
    };
    let _ = writeln!(std::io::stderr(), "{line}");
    if let Err(w) = outcome {
        panic!("criterion 10 failed: {w}");
    }
}
