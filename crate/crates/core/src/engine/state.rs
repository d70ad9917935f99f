use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::decision::{decide_connection, decide_connection_single, ConnectionDecision};
use super::placement::{evaluate_occupancy, merge_max, occupancy, Occupancy};
use super::types::{
    Camera, FrameObservation, MessageKind, OperatorMessage, SessionEvent, StageTransition,
};
use super::EngineError;
use crate::workspace::{AssemblyPlan, EngineConfig, StageKind};

/// What a single [`EngineState::step`] added to the session.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct StepOutcome {
    pub messages: Vec<OperatorMessage>,
    pub transition: Option<StageTransition>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ZoneCount {
    pub zone_id: String,
    pub part_id: String,
    pub count: u32,
}

/// Read-only view of a session for displays and the service API.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub current_stage: usize,
    pub stage_count: usize,
    /// Instruction of the current stage; `None` once the plan is complete.
    pub instruction: Option<String>,
    pub zone_occupancy: Vec<ZoneCount>,
    /// Feedback currently standing for the latest frame.
    pub feedback: Vec<MessageKind>,
    pub pending_leading_connection: Option<String>,
    pub completed: bool,
}

/// Stage state machine of one assembly session.
///
/// Feeds on paired leading/auxiliary frames. Operator feedback
/// (missing, extra, wrong connection) is logged when it first appears and
/// not repeated while it persists from frame to frame; stage changes are
/// always logged.
#[derive(Debug, Clone)]
pub struct EngineState {
    plan: Arc<AssemblyPlan>,
    config: EngineConfig,
    assembly_zone: String,
    current_stage: usize,
    zone_occupancy: Occupancy,
    pending_leading_connection: Option<String>,
    feedback: Vec<MessageKind>,
    events: Vec<SessionEvent>,
    started_at_ms: Option<u64>,
    last_leading_ms: Option<u64>,
    last_auxiliary_ms: Option<u64>,
}

impl EngineState {
    pub fn new(plan: Arc<AssemblyPlan>, config: EngineConfig) -> Result<Self, EngineError> {
        plan.validate().map_err(EngineError::InvalidPlan)?;
        config.validate()?;
        let assembly_zone = plan.assembly_zone().expect("validated plan").id.clone();
        Ok(EngineState {
            plan,
            config,
            assembly_zone,
            current_stage: 0,
            zone_occupancy: Occupancy::new(),
            pending_leading_connection: None,
            feedback: Vec::new(),
            events: Vec::new(),
            started_at_ms: None,
            last_leading_ms: None,
            last_auxiliary_ms: None,
        })
    }

    pub fn plan(&self) -> &Arc<AssemblyPlan> {
        &self.plan
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn current_stage(&self) -> usize {
        self.current_stage
    }

    pub fn completed(&self) -> bool {
        self.current_stage == self.plan.stage_count()
    }

    pub fn events(&self) -> &[SessionEvent] {
        &self.events
    }

    pub fn messages(&self) -> impl Iterator<Item = &OperatorMessage> {
        self.events.iter().filter_map(|e| match e {
            SessionEvent::Message(m) => Some(m),
            SessionEvent::Transition(_) => None,
        })
    }

    pub fn transitions(&self) -> impl Iterator<Item = &StageTransition> {
        self.events.iter().filter_map(|e| match e {
            SessionEvent::Transition(t) => Some(t),
            SessionEvent::Message(_) => None,
        })
    }

    pub fn zone_occupancy(&self) -> &Occupancy {
        &self.zone_occupancy
    }

    pub fn pending_leading_connection(&self) -> Option<&str> {
        self.pending_leading_connection.as_deref()
    }

    /// Timestamp of the first processed leading frame, taken as the start
    /// of stage 0.
    pub fn started_at_ms(&self) -> Option<u64> {
        self.started_at_ms
    }

    pub fn last_timestamp_ms(&self) -> Option<u64> {
        self.last_leading_ms
    }

    /// Stage-0 start followed by the start of every stage entered since.
    pub fn stage_starts(&self) -> Vec<u64> {
        let n = self.plan.stage_count();
        self.started_at_ms
            .into_iter()
            .chain(
                self.transitions()
                    .filter(|t| t.stage_index < n)
                    .map(|t| t.start_timestamp_ms),
            )
            .collect()
    }

    pub fn completion_ms(&self) -> Option<u64> {
        let n = self.plan.stage_count();
        self.transitions()
            .find(|t| t.stage_index == n)
            .map(|t| t.start_timestamp_ms)
    }

    pub fn snapshot(&self) -> Snapshot {
        Snapshot {
            current_stage: self.current_stage,
            stage_count: self.plan.stage_count(),
            instruction: self
                .plan
                .stages
                .get(self.current_stage)
                .map(|s| s.instruction.clone()),
            zone_occupancy: self
                .zone_occupancy
                .iter()
                .map(|((z, p), &c)| ZoneCount { zone_id: z.clone(), part_id: p.clone(), count: c })
                .collect(),
            feedback: self.feedback.clone(),
            pending_leading_connection: self.pending_leading_connection.clone(),
            completed: self.completed(),
        }
    }

    fn check_frames(
        &self,
        leading: &FrameObservation,
        auxiliary: &FrameObservation,
    ) -> Result<(), EngineError> {
        if self.completed() {
            return Err(EngineError::Completed);
        }
        if leading.camera != Camera::Leading || auxiliary.camera != Camera::Auxiliary {
            return Err(EngineError::CameraRole);
        }
        for (frame, last) in [(leading, self.last_leading_ms), (auxiliary, self.last_auxiliary_ms)] {
            if let Some(last) = last {
                if frame.timestamp_ms <= last {
                    return Err(EngineError::OutOfOrder {
                        camera: frame.camera,
                        timestamp_ms: frame.timestamp_ms,
                        last_ms: last,
                    });
                }
            }
            for d in &frame.detections {
                if d.bbox.validate().is_err() || !(0.0..=1.0).contains(&d.confidence) {
                    return Err(EngineError::InvalidFrame {
                        timestamp_ms: frame.timestamp_ms,
                        reason: format!("detection '{}' has an invalid box or confidence", d.object_class),
                    });
                }
            }
            for h in &frame.connection_hypotheses {
                if !(0.0..=1.0).contains(&h.probability) {
                    return Err(EngineError::InvalidFrame {
                        timestamp_ms: frame.timestamp_ms,
                        reason: format!("hypothesis '{}' has probability {}", h.connection_id, h.probability),
                    });
                }
            }
        }
        Ok(())
    }

    fn frame_occupancy(&self, frame: &FrameObservation) -> Occupancy {
        let parts = frame.detections.iter().filter(|d| self.plan.has_part(&d.object_class));
        occupancy(parts, &self.plan.zones, &self.config)
    }

    fn log(&mut self, ts: u64, kind: MessageKind, out: &mut Vec<OperatorMessage>) {
        let m = OperatorMessage { timestamp_ms: ts, kind };
        out.push(m.clone());
        self.events.push(SessionEvent::Message(m));
    }

    /// Processes one pair of synchronized frames. Nothing changes when an
    /// error is returned.
    pub fn step(
        &mut self,
        leading: &FrameObservation,
        auxiliary: &FrameObservation,
    ) -> Result<StepOutcome, EngineError> {
        self.check_frames(leading, auxiliary)?;
        let ts = leading.timestamp_ms;
        let mut out = StepOutcome::default();

        self.last_leading_ms = Some(ts);
        self.last_auxiliary_ms = Some(auxiliary.timestamp_ms);
        if self.started_at_ms.is_none() {
            self.started_at_ms = Some(ts);
            let text = self.plan.stages[0].instruction.clone();
            self.log(ts, MessageKind::StageInstruction { text }, &mut out.messages);
        }

        self.zone_occupancy = merge_max(self.frame_occupancy(leading), &self.frame_occupancy(auxiliary));
        let threshold = self.config.connection_threshold;
        let zone = Some(self.assembly_zone.as_str());
        self.pending_leading_connection = decide_connection_single(
            leading
                .connection_hypotheses
                .iter()
                .filter(|h| zone.is_none_or(|z| h.source_zone_id == z)),
            threshold,
        )
        .map(str::to_owned);

        let plan = Arc::clone(&self.plan);
        let stage = &plan.stages[self.current_stage];
        let (advance, feedback) = match &stage.kind {
            StageKind::Placement(reqs) => {
                let status = evaluate_occupancy(&self.zone_occupancy, reqs);
                let feedback = status
                    .missing
                    .iter()
                    .map(|g| MessageKind::MissingDetail { part: g.part_id.clone(), zone: g.zone_id.clone() })
                    .chain(status.extra.iter().map(|g| MessageKind::ExtraDetail {
                        part: g.part_id.clone(),
                        zone: g.zone_id.clone(),
                    }))
                    .collect();
                (status.satisfied, feedback)
            }
            StageKind::Connection(req) => {
                match decide_connection(leading, auxiliary, threshold, zone)? {
                    ConnectionDecision::Agreed(c) if c == req.connection_id => (true, Vec::new()),
                    ConnectionDecision::Agreed(c) => (
                        false,
                        vec![MessageKind::WrongConnection { seen: c, expected: req.connection_id.clone() }],
                    ),
                    ConnectionDecision::NoDecision => (false, Vec::new()),
                }
            }
        };

        if advance {
            self.feedback.clear();
            let next = self.current_stage + 1;
            let transition = StageTransition { stage_index: next, start_timestamp_ms: ts };
            self.events.push(SessionEvent::Transition(transition));
            self.current_stage = next;
            out.transition = Some(transition);
            self.log(ts, MessageKind::ProceedNextStage { new_stage_index: next }, &mut out.messages);
            if let Some(s) = plan.stages.get(next) {
                let text = s.instruction.clone();
                self.log(ts, MessageKind::StageInstruction { text }, &mut out.messages);
            }
        } else {
            for kind in &feedback {
                if !self.feedback.contains(kind) {
                    self.log(ts, kind.clone(), &mut out.messages);
                }
            }
            self.feedback = feedback;
        }
        Ok(out)
    }
}
