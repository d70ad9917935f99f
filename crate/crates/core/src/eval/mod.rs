//! Temporal IoU between predicted and labeled stage timelines, and the
//! per-stage / per-cohort aggregation built on it.

mod csv;
mod iou;
mod report;
mod timeline;

use thiserror::Error;

pub use self::csv::{
    format_seconds, parse_seconds, read_timelines, timelines_from_csv, timelines_to_csv,
    write_partial_run, write_timelines, TIMELINE_HEADER,
};
pub use iou::{discretized_iou_oracle, interval_iou, StageInterval};
pub use report::{
    aggregate, CohortSummary, EfficiencyReport, Histogram, StageStats, Summary, Table,
    DEFAULT_HIST_BINS,
};
pub use timeline::{pair_runs, timeline_from_starts, timeline_iou, IoUVector, Timeline};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("timeline needs at least one stage")]
    NoStages,
    #[error("stage {stage} does not start after the previous stage")]
    NonIncreasingStarts { stage: usize },
    #[error("boundary {stage} precedes the previous boundary")]
    DecreasingBoundary { stage: usize },
    #[error("completion {completion_ms} ms is not after the last stage start {last_start_ms} ms")]
    CompletionNotAfterLastStart { completion_ms: u64, last_start_ms: u64 },
    #[error("run '{run_id}': predicted timeline has {predicted} stages, labels have {truth}")]
    StageCountMismatch { run_id: String, predicted: usize, truth: usize },
    #[error("predicted run '{predicted}' compared against labels of run '{truth}'")]
    RunMismatch { predicted: String, truth: String },
    #[error("run '{run_id}' has no {missing} timeline")]
    UnmatchedRun { run_id: String, missing: &'static str },
    #[error("no IoU vectors to aggregate")]
    EmptyInput,
    #[error("run '{run_id}' has IoU values outside [0, 1]")]
    ValueOutOfRange { run_id: String },
    #[error("invalid report: {0}")]
    InvalidReport(String),
    #[error("unexpected timeline header '{0}'")]
    BadHeader(String),
    #[error("line {line}: row for run '{run_id}' is out of sequence")]
    BadRow { line: usize, run_id: String },
    #[error("'{0}' is not a seconds value with millisecond precision")]
    BadSeconds(String),
    #[error(transparent)]
    Csv(#[from] ::csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
