//! Scores, cross-validation, cross-task matrices and generalizability
//! graphs.

pub mod crossval;
pub mod export;
pub mod graph;
pub mod metrics;

pub use crossval::{
    cross_task_matrix, cross_task_matrix_for, cross_validate, mean_fit_times, timing_report, CrossTaskMatrix,
    CvResult, FitRecord,
};
pub use graph::{
    graph_score, task_generalizability, task_ranking, EdgeSelection, GeneralizabilityGraph, TaskScores,
    TaskThresholdStats, DEFAULT_THRESHOLD,
};
pub use metrics::{error_metrics, evaluate, r_squared, ChannelMetrics, MetricSet};
