//! The stage state machine: consumes paired camera frames, gates stage
//! progress on placements and confirmed connections, and records the
//! instant each stage begins.

mod decision;
mod placement;
mod session;
mod state;
mod types;

use thiserror::Error;

pub use decision::{decide_connection, decide_connection_single, ConnectionDecision};
pub use placement::{
    assign_zone, evaluate_occupancy, evaluate_placement, merge_max, occupancy, CountGap,
    Occupancy, PlacementStatus,
};
pub use session::{run_session, SessionResult};
pub use state::{EngineState, Snapshot, StepOutcome, ZoneCount};
pub use types::{
    Camera, ConnectionHypothesis, Detection, FrameObservation, LogLine, MessageKind,
    OperatorMessage, SessionEvent, StageTransition,
};

use crate::workspace::{ConfigError, Violation};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("plan is invalid: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    InvalidPlan(Vec<Violation>),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("frames must come as a (leading, auxiliary) pair")]
    CameraRole,
    #[error("{camera:?} frame at {timestamp_ms} ms does not follow the previous frame at {last_ms} ms")]
    OutOfOrder { camera: Camera, timestamp_ms: u64, last_ms: u64 },
    #[error("frame at {timestamp_ms} ms: {reason}")]
    InvalidFrame { timestamp_ms: u64, reason: String },
    #[error("session already completed")]
    Completed,
}
