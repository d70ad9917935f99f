use std::io::Write;
use std::sync::Arc;

use serde::Serialize;

use super::state::EngineState;
use super::types::{FrameObservation, OperatorMessage, SessionEvent, StageTransition};
use super::EngineError;
use crate::eval::Timeline;
use crate::workspace::{AssemblyPlan, EngineConfig};

/// Everything a finished (or abandoned) replay produced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SessionResult {
    pub stage_count: usize,
    pub events: Vec<SessionEvent>,
    pub completed: bool,
    pub stage_starts: Vec<u64>,
    pub completion_ms: Option<u64>,
    pub last_timestamp_ms: Option<u64>,
}

impl SessionResult {
    pub fn from_state(state: &EngineState) -> Self {
        SessionResult {
            stage_count: state.plan().stage_count(),
            events: state.events().to_vec(),
            completed: state.completed(),
            stage_starts: state.stage_starts(),
            completion_ms: state.completion_ms(),
            last_timestamp_ms: state.last_timestamp_ms(),
        }
    }

    pub fn transitions(&self) -> Vec<StageTransition> {
        self.events
            .iter()
            .filter_map(|e| match e {
                SessionEvent::Transition(t) => Some(*t),
                SessionEvent::Message(_) => None,
            })
            .collect()
    }

    pub fn messages(&self) -> Vec<&OperatorMessage> {
        self.events
            .iter()
            .filter_map(|e| match e {
                SessionEvent::Message(m) => Some(m),
                SessionEvent::Transition(_) => None,
            })
            .collect()
    }

    /// Predicted stage timeline. A completed session yields contiguous
    /// intervals from its stage starts to the completion instant. An
    /// incomplete one closes its current stage at the last processed frame
    /// and leaves the unreached stages empty. `None` when no frame was
    /// processed.
    pub fn predicted_timeline(&self, run_id: &str, cohort: &str) -> Option<Timeline> {
        let end = self.last_timestamp_ms?;
        let timeline = match self.completion_ms {
            Some(done) => {
                let mut bounds = self.stage_starts.clone();
                bounds.push(done);
                Timeline::from_boundaries(run_id, cohort, &bounds)
            }
            None => Timeline::truncated(run_id, cohort, &self.stage_starts, self.stage_count, end),
        };
        Some(timeline.expect("engine timestamps are monotone"))
    }

    /// JSON-lines event log followed by one `session_summary` line.
    pub fn write_log<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for e in &self.events {
            serde_json::to_writer(&mut out, e)?;
            out.write_all(b"\n")?;
        }
        #[derive(Serialize)]
        struct Summary {
            completed: bool,
            stages_entered: usize,
            stage_count: usize,
        }
        let summary = serde_json::json!({
            "timestamp_ms": self.last_timestamp_ms.unwrap_or(0),
            "type": "session_summary",
            "payload": Summary {
                completed: self.completed,
                stages_entered: self.stage_starts.len(),
                stage_count: self.stage_count,
            },
        });
        serde_json::to_writer(&mut out, &summary)?;
        out.write_all(b"\n")?;
        Ok(())
    }
}

/// Folds [`EngineState::step`] over a stream of frame pairs. Frames after
/// the plan completes are not consumed.
pub fn run_session<I>(
    plan: Arc<AssemblyPlan>,
    config: EngineConfig,
    frames: I,
) -> Result<SessionResult, EngineError>
where
    I: IntoIterator<Item = (FrameObservation, FrameObservation)>,
{
    let mut state = EngineState::new(plan, config)?;
    for (leading, auxiliary) in frames {
        if state.completed() {
            break;
        }
        state.step(&leading, &auxiliary)?;
    }
    Ok(SessionResult::from_state(&state))
}
