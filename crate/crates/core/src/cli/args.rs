use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::evaluation::EdgeSelection;
use crate::regressors::Family;
use crate::types::TaskLabel;

#[derive(Debug, Parser)]
#[command(name = "exodyn", version, about = "Cross-task benchmark of exoskeleton dynamics regressors")]
pub struct Cli {
    /// Log verbosity (error, warn, info, debug, trace).
    #[arg(long, global = true, default_value = "warn")]
    pub log: log::LevelFilter,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write synthetic trial CSVs and a manifest.
    Generate(RunArgs),
    /// Train and evaluate every family on every task pair.
    Benchmark(BenchmarkArgs),
    /// Score and rank the families on a transcribed R² fixture.
    FixtureRank(FixtureArgs),
    /// Read back any file written by this tool and describe it.
    Check(CheckArgs),
}

/// Flags shared by `generate` and `benchmark`. Each one overrides the
/// corresponding config-file value.
#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// TOML or JSON run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Comma-separated, e.g. `KNN,GPR`.
    #[arg(long, value_delimiter = ',', value_parser = parse_family)]
    pub families: Option<Vec<Family>>,
    /// Comma-separated, e.g. `H,V,E`.
    #[arg(long, value_delimiter = ',', value_parser = parse_task)]
    pub tasks: Option<Vec<TaskLabel>>,
    #[arg(long)]
    pub subjects: Option<usize>,
    #[arg(long)]
    pub folds: Option<usize>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Zero the sensor noise.
    #[arg(long)]
    pub noiseless: bool,
}

#[derive(Debug, Clone, Args)]
pub struct BenchmarkArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Directory written by `generate`; synthesized in memory when absent.
    #[arg(long)]
    pub data: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct FixtureArgs {
    /// Fixture CSV; the bundled published scores when absent.
    #[arg(long)]
    pub fixture: Option<PathBuf>,
    /// Edges entering the score used for the ranking.
    #[arg(long, value_enum, default_value_t = Edges::All)]
    pub edges: Edges,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Edges {
    All,
    OffDiagonal,
}

impl From<Edges> for EdgeSelection {
    fn from(e: Edges) -> Self {
        match e {
            Edges::All => EdgeSelection::All,
            Edges::OffDiagonal => EdgeSelection::OffDiagonal,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct CheckArgs {
    /// Files to read back.
    #[arg(required = true)]
    pub files: Vec<PathBuf>,
}

fn parse_family(s: &str) -> Result<Family, String> {
    s.parse().map_err(|e: crate::Error| e.to_string())
}

fn parse_task(s: &str) -> Result<TaskLabel, String> {
    s.parse().map_err(|e: crate::Error| e.to_string())
}
