use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::iou::{interval_iou, StageInterval};
use super::EvalError;

/// Builds contiguous stage intervals from stage-start instants and the
/// completion instant: stage `i` spans `[starts[i], starts[i+1])` and the
/// last stage ends at `completion_ms`.
pub fn timeline_from_starts(
    stage_starts: &[u64],
    completion_ms: u64,
) -> Result<Vec<StageInterval>, EvalError> {
    if stage_starts.is_empty() {
        return Err(EvalError::NoStages);
    }
    if let Some(i) = stage_starts.windows(2).position(|w| w[1] <= w[0]) {
        return Err(EvalError::NonIncreasingStarts { stage: i + 1 });
    }
    let last = *stage_starts.last().expect("non-empty");
    if completion_ms <= last {
        return Err(EvalError::CompletionNotAfterLastStart { completion_ms, last_start_ms: last });
    }
    Ok(intervals_from_boundaries(stage_starts.iter().copied().chain([completion_ms])))
}

fn intervals_from_boundaries(bounds: impl IntoIterator<Item = u64>) -> Vec<StageInterval> {
    let bounds: Vec<u64> = bounds.into_iter().collect();
    bounds
        .windows(2)
        .map(|w| StageInterval { start_ms: w[0], end_ms: w[1] })
        .collect()
}

/// Stage intervals of one run, predicted or labeled.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Timeline {
    pub run_id: String,
    pub cohort: String,
    intervals: Vec<StageInterval>,
}

impl Timeline {
    /// Strict construction from recorded stage starts.
    pub fn from_starts(
        run_id: impl Into<String>,
        cohort: impl Into<String>,
        stage_starts: &[u64],
        completion_ms: u64,
    ) -> Result<Self, EvalError> {
        Ok(Timeline {
            run_id: run_id.into(),
            cohort: cohort.into(),
            intervals: timeline_from_starts(stage_starts, completion_ms)?,
        })
    }

    /// Construction from `n + 1` non-decreasing boundaries (stage starts
    /// followed by the completion instant). Repeated boundaries produce
    /// empty intervals, which is how stages a session never reached are
    /// represented.
    pub fn from_boundaries(
        run_id: impl Into<String>,
        cohort: impl Into<String>,
        boundaries: &[u64],
    ) -> Result<Self, EvalError> {
        if boundaries.len() < 2 {
            return Err(EvalError::NoStages);
        }
        if let Some(i) = boundaries.windows(2).position(|w| w[1] < w[0]) {
            return Err(EvalError::DecreasingBoundary { stage: i + 1 });
        }
        Ok(Timeline {
            run_id: run_id.into(),
            cohort: cohort.into(),
            intervals: intervals_from_boundaries(boundaries.iter().copied()),
        })
    }

    /// Timeline for a session that reached only the first `reached_starts.len()`
    /// stages. The last reached stage is closed at `end_ms`; every later
    /// stage becomes the empty interval `[end_ms, end_ms)`.
    pub fn truncated(
        run_id: impl Into<String>,
        cohort: impl Into<String>,
        reached_starts: &[u64],
        stage_count: usize,
        end_ms: u64,
    ) -> Result<Self, EvalError> {
        if stage_count == 0 {
            return Err(EvalError::NoStages);
        }
        if reached_starts.len() > stage_count {
            return Err(EvalError::StageCountMismatch {
                run_id: String::new(),
                predicted: reached_starts.len(),
                truth: stage_count,
            });
        }
        let mut bounds = reached_starts.to_vec();
        bounds.resize(stage_count + 1, end_ms);
        Self::from_boundaries(run_id, cohort, &bounds)
    }

    pub fn intervals(&self) -> &[StageInterval] {
        &self.intervals
    }

    pub fn stage_count(&self) -> usize {
        self.intervals.len()
    }

    /// Stage starts followed by the completion instant.
    pub fn boundaries(&self) -> Vec<u64> {
        let mut out: Vec<u64> = self.intervals.iter().map(|iv| iv.start_ms).collect();
        out.push(self.completion_ms());
        out
    }

    pub fn completion_ms(&self) -> u64 {
        self.intervals.last().map_or(0, |iv| iv.end_ms)
    }
}

/// Per-stage IoU values of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IoUVector {
    pub run_id: String,
    pub cohort: String,
    pub values: Vec<f64>,
}

/// Stage-by-stage [`interval_iou`] between a predicted and a labeled
/// timeline of the same run. The cohort is taken from the labels.
pub fn timeline_iou(predicted: &Timeline, truth: &Timeline) -> Result<IoUVector, EvalError> {
    if predicted.run_id != truth.run_id {
        return Err(EvalError::RunMismatch {
            predicted: predicted.run_id.clone(),
            truth: truth.run_id.clone(),
        });
    }
    if predicted.stage_count() != truth.stage_count() {
        return Err(EvalError::StageCountMismatch {
            run_id: truth.run_id.clone(),
            predicted: predicted.stage_count(),
            truth: truth.stage_count(),
        });
    }
    let values = predicted
        .intervals
        .iter()
        .zip(&truth.intervals)
        .map(|(p, t)| interval_iou(p, t))
        .collect();
    Ok(IoUVector { run_id: truth.run_id.clone(), cohort: truth.cohort.clone(), values })
}

/// Pairs predictions with labels by run id and scores every run, in label
/// order. Each side must cover exactly the same runs.
pub fn pair_runs(predicted: &[Timeline], truth: &[Timeline]) -> Result<Vec<IoUVector>, EvalError> {
    let by_id: HashMap<&str, &Timeline> = predicted.iter().map(|t| (t.run_id.as_str(), t)).collect();
    if let Some(extra) = predicted.iter().find(|p| !truth.iter().any(|t| t.run_id == p.run_id)) {
        return Err(EvalError::UnmatchedRun { run_id: extra.run_id.clone(), missing: "labeled" });
    }
    truth
        .iter()
        .map(|t| match by_id.get(t.run_id.as_str()) {
            Some(p) => timeline_iou(p, t),
            None => Err(EvalError::UnmatchedRun { run_id: t.run_id.clone(), missing: "predicted" }),
        })
        .collect()
}
