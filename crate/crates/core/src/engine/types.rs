use serde::{Deserialize, Serialize};

use crate::workspace::Rect;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Camera {
    Leading,
    Auxiliary,
}

/// One classified box from a camera frame: a part, tool, hand or foreign
/// object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Detection {
    pub object_class: String,
    pub bbox: Rect,
    pub confidence: f64,
}

/// A candidate connection with the model's probability, computed over the
/// crop of `source_zone_id`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConnectionHypothesis {
    pub connection_id: String,
    pub probability: f64,
    pub source_zone_id: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameObservation {
    pub camera: Camera,
    pub timestamp_ms: u64,
    #[serde(default)]
    pub detections: Vec<Detection>,
    #[serde(default)]
    pub connection_hypotheses: Vec<ConnectionHypothesis>,
}

impl FrameObservation {
    pub fn empty(camera: Camera, timestamp_ms: u64) -> Self {
        FrameObservation {
            camera,
            timestamp_ms,
            detections: Vec::new(),
            connection_hypotheses: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "type", content = "payload", rename_all = "snake_case")]
pub enum MessageKind {
    /// A required part is absent from its zone.
    MissingDetail { part: String, zone: String },
    /// A zone holds more of a part than the stage requires.
    ExtraDetail { part: String, zone: String },
    /// Both cameras agreed on a connection that does not belong to this stage.
    WrongConnection { seen: String, expected: String },
    StageInstruction { text: String },
    ProceedNextStage { new_stage_index: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OperatorMessage {
    pub timestamp_ms: u64,
    #[serde(flatten)]
    pub kind: MessageKind,
}

/// Entry into `stage_index`. An index equal to the stage count marks
/// completion of the plan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageTransition {
    pub stage_index: usize,
    pub start_timestamp_ms: u64,
}

/// One line of the session event log, in engine order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SessionEvent {
    Message(OperatorMessage),
    Transition(StageTransition),
}

/// JSON-lines shape shared by messages and transitions:
/// `{"timestamp_ms": .., "type": "..", "payload": {..}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogLine {
    pub timestamp_ms: u64,
    #[serde(rename = "type")]
    pub kind: String,
    pub payload: serde_json::Value,
}

const TRANSITION_TYPE: &str = "stage_transition";

impl SessionEvent {
    pub fn timestamp_ms(&self) -> u64 {
        match self {
            SessionEvent::Message(m) => m.timestamp_ms,
            SessionEvent::Transition(t) => t.start_timestamp_ms,
        }
    }

    pub fn to_log_line(&self) -> LogLine {
        match self {
            SessionEvent::Message(m) => {
                let tagged = serde_json::to_value(&m.kind).expect("message serializes");
                LogLine {
                    timestamp_ms: m.timestamp_ms,
                    kind: tagged["type"].as_str().unwrap_or_default().to_owned(),
                    payload: tagged["payload"].clone(),
                }
            }
            SessionEvent::Transition(t) => LogLine {
                timestamp_ms: t.start_timestamp_ms,
                kind: TRANSITION_TYPE.to_owned(),
                payload: serde_json::json!({ "stage_index": t.stage_index }),
            },
        }
    }

    pub fn from_log_line(line: &LogLine) -> Result<Self, serde_json::Error> {
        if line.kind == TRANSITION_TYPE {
            #[derive(Deserialize)]
            #[serde(deny_unknown_fields)]
            struct Payload {
                stage_index: usize,
            }
            let p: Payload = serde_json::from_value(line.payload.clone())?;
            return Ok(SessionEvent::Transition(StageTransition {
                stage_index: p.stage_index,
                start_timestamp_ms: line.timestamp_ms,
            }));
        }
        let kind: MessageKind = serde_json::from_value(
            serde_json::json!({ "type": line.kind, "payload": line.payload }),
        )?;
        Ok(SessionEvent::Message(OperatorMessage { timestamp_ms: line.timestamp_ms, kind }))
    }
}

impl Serialize for SessionEvent {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_log_line().serialize(s)
    }
}

impl<'de> Deserialize<'de> for SessionEvent {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let line = LogLine::deserialize(d)?;
        SessionEvent::from_log_line(&line).map_err(serde::de::Error::custom)
    }
}
