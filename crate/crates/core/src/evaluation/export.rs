//! Matrix CSV, graph DOT/JSON, and the fixture CSV of transcribed R²
//! values. Every writer has a matching reader.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::crossval::CrossTaskMatrix;
use super::graph::{EdgeSelection, GeneralizabilityGraph};
use crate::error::{Error, Result};
use crate::regressors::Family;
use crate::types::TaskLabel;

/// The three metric rows written per training task.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MatrixTable {
    pub tasks: Vec<TaskLabel>,
    pub r2: Vec<Vec<f64>>,
    pub rmse: Vec<Vec<f64>>,
    pub mae: Vec<Vec<f64>>,
}

impl From<&CrossTaskMatrix> for MatrixTable {
    fn from(m: &CrossTaskMatrix) -> Self {
        let pick = |f: fn(&super::metrics::MetricSet) -> f64| -> Vec<Vec<f64>> {
            m.cells.iter().map(|row| row.iter().map(f).collect()).collect()
        };
        MatrixTable {
            tasks: m.tasks.clone(),
            r2: pick(|c| c.r_squared),
            rmse: pick(|c| c.rmse),
            mae: pick(|c| c.mae),
        }
    }
}

const METRIC_NAMES: [&str; 3] = ["R2", "RMSE", "MAE"];

pub fn matrix_csv_string(table: &MatrixTable) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["train_task".to_string(), "metric".to_string()];
    header.extend(table.tasks.iter().map(|t| t.to_string()));
    w.write_record(&header)?;
    for (i, t) in table.tasks.iter().enumerate() {
        for (name, grid) in METRIC_NAMES.iter().zip([&table.r2, &table.rmse, &table.mae]) {
            let mut rec = vec![t.to_string(), name.to_string()];
            rec.extend(grid[i].iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::Schema(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Schema(e.to_string()))
}

fn parse_f64(s: &str, what: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| Error::Schema(format!("{what}: {s:?} is not a number")))
}

pub fn parse_matrix_csv(text: &str) -> Result<MatrixTable> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers()?.clone();
    if header.len() < 3 || &header[0] != "train_task" || &header[1] != "metric" {
        return Err(Error::Schema("matrix CSV header must start with train_task,metric".into()));
    }
    let tasks = header
        .iter()
        .skip(2)
        .map(str::parse::<TaskLabel>)
        .collect::<Result<Vec<_>>>()?;
    let n = tasks.len();
    let mut table = MatrixTable {
        tasks: tasks.clone(),
        r2: vec![Vec::new(); n],
        rmse: vec![Vec::new(); n],
        mae: vec![Vec::new(); n],
    };
    for rec in r.records() {
        let rec = rec?;
        let train: TaskLabel = rec[0].parse()?;
        let i = tasks
            .iter()
            .position(|&t| t == train)
            .ok_or_else(|| Error::Schema(format!("row task {train} is not a column")))?;
        let values = rec
            .iter()
            .skip(2)
            .map(|v| parse_f64(v, "matrix cell"))
            .collect::<Result<Vec<_>>>()?;
        let slot = match &rec[1] {
            "R2" => &mut table.r2[i],
            "RMSE" => &mut table.rmse[i],
            "MAE" => &mut table.mae[i],
            other => return Err(Error::Schema(format!("unknown metric row {other:?}"))),
        };
        if !slot.is_empty() {
            return Err(Error::Schema(format!("duplicate {} row for {train}", &rec[1])));
        }
        *slot = values;
    }
    for grid in [&table.r2, &table.rmse, &table.mae] {
        if grid.iter().any(|row| row.len() != n) {
            return Err(Error::Schema("matrix CSV is missing metric rows".into()));
        }
    }
    Ok(table)
}

pub fn graph_dot(graph: &GeneralizabilityGraph) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "digraph \"{}\" {{", graph.family);
    for t in &graph.tasks {
        let _ = writeln!(s, "  \"{t}\";");
    }
    for (i, from) in graph.tasks.iter().enumerate() {
        for (j, to) in graph.tasks.iter().enumerate() {
            let w = graph.weights[i][j];
            let _ = writeln!(s, "  \"{from}\" -> \"{to}\" [weight={w}, label=\"{w:.2}\"];");
        }
    }
    s.push_str("}\n");
    s
}

fn quoted(s: &str) -> Option<&str> {
    let s = s.trim();
    s.strip_prefix('"')?.strip_suffix('"')
}

/// Reads a graph written by [`graph_dot`]. The subject count is not part
/// of the DOT form and comes back as 0.
pub fn parse_graph_dot(text: &str) -> Result<GeneralizabilityGraph> {
    let bad = |m: &str| Error::Schema(format!("DOT: {m}"));
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
    let head = lines.next().ok_or_else(|| bad("empty input"))?;
    let name = head
        .strip_prefix("digraph")
        .and_then(|r| r.trim().strip_suffix('{'))
        .and_then(quoted)
        .ok_or_else(|| bad("missing digraph header"))?;
    let family: Family = name.parse()?;
    let mut tasks = Vec::new();
    let mut edges = Vec::new();
    for line in lines {
        if line == "}" {
            break;
        }
        let body = line.strip_suffix(';').ok_or_else(|| bad("statement without ';'"))?;
        if let Some((lhs, rest)) = body.split_once("->") {
            let (rhs, attrs) = rest.split_once('[').ok_or_else(|| bad("edge without attributes"))?;
            let from: TaskLabel = quoted(lhs).ok_or_else(|| bad("unquoted node"))?.parse()?;
            let to: TaskLabel = quoted(rhs).ok_or_else(|| bad("unquoted node"))?.parse()?;
            let w = attrs
                .trim_end_matches(']')
                .split(',')
                .find_map(|a| a.trim().strip_prefix("weight="))
                .ok_or_else(|| bad("edge without weight"))?;
            edges.push((from, to, parse_f64(w, "edge weight")?));
        } else {
            tasks.push(quoted(body).ok_or_else(|| bad("unquoted node"))?.parse::<TaskLabel>()?);
        }
    }
    let n = tasks.len();
    let mut weights = vec![vec![f64::NAN; n]; n];
    for (from, to, w) in edges {
        let i = tasks.iter().position(|&t| t == from).ok_or_else(|| bad("edge to undeclared node"))?;
        let j = tasks.iter().position(|&t| t == to).ok_or_else(|| bad("edge to undeclared node"))?;
        weights[i][j] = w;
    }
    if weights.iter().flatten().any(|w| w.is_nan()) {
        return Err(bad("graph is missing edges"));
    }
    Ok(GeneralizabilityGraph {
        family,
        tasks,
        weights,
        subjects: 0,
    })
}

/// JSON adjacency form with both edge selections' scores attached.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphJson {
    #[serde(flatten)]
    pub graph: GeneralizabilityGraph,
    pub score: f64,
    pub off_diagonal_score: Option<f64>,
}

impl From<&GeneralizabilityGraph> for GraphJson {
    fn from(g: &GeneralizabilityGraph) -> Self {
        let off = g.score(EdgeSelection::OffDiagonal);
        GraphJson {
            graph: g.clone(),
            score: g.score(EdgeSelection::All),
            off_diagonal_score: off.is_finite().then_some(off),
        }
    }
}

/// Transcribed Total R² values: `family → subject → grid[train][test]`
/// over all six tasks.
#[derive(Debug, Clone, PartialEq)]
pub struct Fixture {
    pub grids: BTreeMap<Family, BTreeMap<String, Vec<Vec<f64>>>>,
}

#[derive(Deserialize)]
struct FixtureRow {
    family: String,
    subject: String,
    train_task: String,
    test_task: String,
    r2_total: String,
}

/// Parses `family,subject,train_task,test_task,r2_total`, skipping `#`
/// comment lines. Every family needs a complete 6×6 grid per subject.
pub fn parse_fixture(text: &str) -> Result<Fixture> {
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let expected = ["family", "subject", "train_task", "test_task", "r2_total"];
    let header = r.headers()?.clone();
    if header.iter().collect::<Vec<_>>() != expected {
        return Err(Error::Schema(format!(
            "fixture header must be {}, got {}",
            expected.join(","),
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut cells: BTreeMap<Family, BTreeMap<String, Vec<Vec<Option<f64>>>>> = BTreeMap::new();
    for (line, rec) in r.deserialize::<FixtureRow>().enumerate() {
        let rec = rec.map_err(|e| Error::Schema(format!("fixture row {}: {e}", line + 1)))?;
        let family: Family = rec.family.parse()?;
        let i = rec.train_task.parse::<TaskLabel>()?.index();
        let j = rec.test_task.parse::<TaskLabel>()?.index();
        let v = parse_f64(&rec.r2_total, "r2_total")?;
        if !v.is_finite() {
            return Err(Error::Schema(format!("fixture row {}: non-finite r2_total", line + 1)));
        }
        let grid = cells
            .entry(family)
            .or_default()
            .entry(rec.subject.clone())
            .or_insert_with(|| vec![vec![None; 6]; 6]);
        if grid[i][j].replace(v).is_some() {
            return Err(Error::Schema(format!(
                "duplicate fixture cell {family} subject {} {}->{}",
                rec.subject, rec.train_task, rec.test_task
            )));
        }
    }
    for f in Family::ALL {
        if !cells.contains_key(&f) {
            return Err(Error::Schema(format!("fixture has no rows for {f}")));
        }
    }
    let mut grids = BTreeMap::new();
    for (family, subjects) in cells {
        let mut out = BTreeMap::new();
        for (subject, grid) in subjects {
            let full = grid
                .into_iter()
                .map(|row| row.into_iter().collect::<Option<Vec<f64>>>())
                .collect::<Option<Vec<_>>>()
                .ok_or_else(|| Error::Schema(format!("fixture grid for {family} subject {subject} is incomplete")))?;
            out.insert(subject, full);
        }
        grids.insert(family, out);
    }
    Ok(Fixture { grids })
}

pub fn read_fixture(path: &Path) -> Result<Fixture> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_fixture(&text)
}

impl Fixture {
    pub fn graph(&self, family: Family) -> Result<GeneralizabilityGraph> {
        let subjects = self
            .grids
            .get(&family)
            .ok_or_else(|| Error::Schema(format!("fixture has no rows for {family}")))?;
        let grids: Vec<Vec<Vec<f64>>> = subjects.values().cloned().collect();
        GeneralizabilityGraph::from_grids(family, TaskLabel::ALL.to_vec(), &grids)
    }
}
