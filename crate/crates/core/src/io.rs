//! Trial CSV files:
//! `t,elbow_angle,elbow_vel,wrist_angle,wrist_vel,thr_elbow,thr_hand,emg_bicep,emg_tricep,emg_open,emg_close,subject,task,trial`.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::types::{DimensionProfile, TaskLabel, Trial};

pub const TRIAL_HEADER: [&str; 14] = [
    "t",
    "elbow_angle",
    "elbow_vel",
    "wrist_angle",
    "wrist_vel",
    "thr_elbow",
    "thr_hand",
    "emg_bicep",
    "emg_tricep",
    "emg_open",
    "emg_close",
    "subject",
    "task",
    "trial",
];

const FEATURES: usize = 10;

fn check_profile(trial: &Trial) -> Result<()> {
    if trial.profile != DimensionProfile::default() {
        return Err(Error::DimensionMismatch {
            what: "trial CSV columns",
            expected: FEATURES,
            found: trial.profile.input_dim(),
        });
    }
    Ok(())
}

/// Appends the rows of `trial` to `w`.
pub fn write_trial<W: std::io::Write>(w: &mut csv::Writer<W>, trial: &Trial) -> Result<()> {
    check_profile(trial)?;
    let task = trial.task.to_string();
    let index = trial.trial_index.to_string();
    for (i, row) in trial.features.row_iter().enumerate() {
        let mut rec: Vec<String> = Vec::with_capacity(TRIAL_HEADER.len());
        rec.push((i as f64 / trial.sample_rate).to_string());
        rec.extend(row.iter().map(|v| v.to_string()));
        rec.push(trial.subject.clone());
        rec.push(task.clone());
        rec.push(index.clone());
        w.write_record(&rec)?;
    }
    Ok(())
}

pub fn trials_csv_string(trials: &[Trial]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(TRIAL_HEADER)?;
    for t in trials {
        write_trial(&mut w, t)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Schema(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Schema(e.to_string()))
}

pub fn write_trials(path: &Path, trials: &[Trial]) -> Result<()> {
    std::fs::write(path, trials_csv_string(trials)?).map_err(|e| Error::io(path, e))
}

type TrialKey = (String, TaskLabel, u32);

/// Parses one or more trials, grouped by `(subject, task, trial)` in
/// order of first appearance. The sample rate comes from the `t` column.
pub fn parse_trials(text: &str) -> Result<Vec<Trial>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers()?.clone();
    if header.iter().collect::<Vec<_>>() != TRIAL_HEADER {
        return Err(Error::Schema(format!(
            "trial CSV header must be {}",
            TRIAL_HEADER.join(",")
        )));
    }
    let mut order: Vec<TrialKey> = Vec::new();
    let mut groups: BTreeMap<TrialKey, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let num = |i: usize| -> Result<f64> {
            rec[i].trim().parse::<f64>().map_err(|_| {
                Error::Schema(format!("row {}: column {} is not a number: {:?}", line + 1, TRIAL_HEADER[i], &rec[i]))
            })
        };
        let task: TaskLabel = rec[12].parse()?;
        let trial: u32 = rec[13]
            .trim()
            .parse()
            .map_err(|_| Error::Schema(format!("row {}: bad trial index {:?}", line + 1, &rec[13])))?;
        let key = (rec[11].to_string(), task, trial);
        let entry = groups.entry(key.clone()).or_insert_with(|| {
            order.push(key);
            (Vec::new(), Vec::new())
        });
        entry.0.push(num(0)?);
        for i in 1..=FEATURES {
            entry.1.push(num(i)?);
        }
    }
    order
        .into_iter()
        .map(|key| {
            let (times, data) = groups.remove(&key).unwrap();
            let n = times.len();
            if n < 2 {
                return Err(Error::TooFewSamples { required: 2, found: n });
            }
            if times.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(Error::Schema(format!(
                    "time column of subject {} task {} trial {} is not strictly increasing",
                    key.0, key.1, key.2
                )));
            }
            let rate = (n - 1) as f64 / (times[n - 1] - times[0]);
            Trial::new(
                Matrix::from_vec(n, FEATURES, data)?,
                rate,
                key.1,
                key.0,
                key.2,
                DimensionProfile::default(),
            )
        })
        .collect()
}

pub fn read_trials(path: &Path) -> Result<Vec<Trial>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_trials(&text).map_err(|e| e.context(path.display().to_string()))
}
