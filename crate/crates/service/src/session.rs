use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use stagewatch_core::engine::{
    EngineError, EngineState, OperatorMessage, SessionEvent, SessionResult, Snapshot, StageTransition,
};
use stagewatch_core::eval::timelines_to_csv;
use stagewatch_core::sim::{noiseless_frames, Action, ScenarioEvent, World};
use stagewatch_core::workspace::{AssemblyPlan, EngineConfig};
use tokio::sync::{broadcast, Mutex};

use crate::error::ApiError;

/// Cohort label of exported session timelines.
pub const TIMELINE_COHORT: &str = "live";

const UPDATE_BUFFER: usize = 256;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateSession {
    pub plan: AssemblyPlan,
    #[serde(default)]
    pub config: Option<EngineConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionDescriptor {
    pub session_id: String,
    pub plan_id: String,
    /// Unix time in milliseconds.
    pub created_at: u64,
    pub snapshot: Snapshot,
}

/// An operator action seen by the bench, as posted by a client.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClientEvent {
    /// Session time of the action; must increase from event to event.
    pub at_ms: u64,
    pub action: Action,
    /// Client wall clock, echoed back untouched.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub client_ts: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventResponse {
    pub seq: u64,
    pub messages: Vec<OperatorMessage>,
    pub transition: Option<StageTransition>,
    pub snapshot: Snapshot,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub client_ts: Option<u64>,
}

/// One push-channel item: what a processed event changed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Update {
    pub seq: u64,
    pub events: Vec<SessionEvent>,
    pub snapshot: Snapshot,
}

struct Inner {
    world: World,
    engine: EngineState,
    /// Number of client events processed so far.
    seq: u64,
}

pub struct Session {
    id: String,
    plan_id: String,
    created_at: u64,
    assembly_zone: String,
    // The tokio mutex queues waiters in arrival order, which is what
    // serializes a session's events.
    inner: Mutex<Inner>,
    updates: broadcast::Sender<Update>,
}

impl Session {
    pub fn id(&self) -> &str {
        &self.id
    }

    pub async fn descriptor(&self) -> SessionDescriptor {
        let inner = self.inner.lock().await;
        SessionDescriptor {
            session_id: self.id.clone(),
            plan_id: self.plan_id.clone(),
            created_at: self.created_at,
            snapshot: inner.engine.snapshot(),
        }
    }

    /// Feeds one client event to the engine as a zero-lag, noise-free pair
    /// of frames taken at `at_ms`.
    pub async fn apply(&self, event: ClientEvent) -> Result<EventResponse, ApiError> {
        let mut inner = self.inner.lock().await;
        if inner.engine.completed() {
            return Err(ApiError::Completed(self.id.clone()));
        }
        let scenario_event = ScenarioEvent { at_ms: event.at_ms, action: event.action };
        scenario_event.check().map_err(ApiError::BadRequest)?;
        if let Some(last) = inner.engine.last_timestamp_ms() {
            if event.at_ms <= last {
                return Err(ApiError::OutOfOrder(format!(
                    "event at {} ms does not follow the previous event at {last} ms",
                    event.at_ms
                )));
            }
        }

        let mut world = inner.world.clone();
        world.push(&scenario_event).map_err(ApiError::OutOfOrder)?;
        let (leading, auxiliary) = noiseless_frames(&world, &self.assembly_zone, event.at_ms);
        let logged = inner.engine.events().len();
        let outcome = inner.engine.step(&leading, &auxiliary).map_err(|e| match e {
            EngineError::Completed => ApiError::Completed(self.id.clone()),
            EngineError::OutOfOrder { .. } => ApiError::OutOfOrder(e.to_string()),
            other => ApiError::BadRequest(other.to_string()),
        })?;
        inner.world = world;
        inner.seq += 1;

        let snapshot = inner.engine.snapshot();
        let update = Update { seq: inner.seq, events: inner.engine.events()[logged..].to_vec(), snapshot: snapshot.clone() };
        // Sent under the lock so subscribers see updates in processing order.
        let _ = self.updates.send(update);
        Ok(EventResponse {
            seq: inner.seq,
            messages: outcome.messages,
            transition: outcome.transition,
            snapshot,
            client_ts: event.client_ts,
        })
    }

    /// Current state plus a receiver for every later update.
    pub async fn subscribe(&self) -> (Update, broadcast::Receiver<Update>) {
        let inner = self.inner.lock().await;
        let rx = self.updates.subscribe();
        (Update { seq: inner.seq, events: Vec::new(), snapshot: inner.engine.snapshot() }, rx)
    }

    pub async fn timeline_csv(&self) -> Result<String, ApiError> {
        let inner = self.inner.lock().await;
        if !inner.engine.completed() {
            return Err(ApiError::Incomplete(self.id.clone()));
        }
        let timeline = SessionResult::from_state(&inner.engine)
            .predicted_timeline(&self.id, TIMELINE_COHORT)
            .ok_or_else(|| ApiError::Incomplete(self.id.clone()))?;
        Ok(timelines_to_csv(&[timeline]))
    }
}

/// In-memory session store.
#[derive(Default)]
pub struct Registry {
    next_id: AtomicU64,
    sessions: RwLock<HashMap<String, Arc<Session>>>,
}

impl Registry {
    pub fn create(&self, req: CreateSession) -> Result<Arc<Session>, ApiError> {
        req.plan.validate().map_err(ApiError::InvalidPlan)?;
        let config = req.config.unwrap_or_default();
        config.validate().map_err(|e| ApiError::MalformedPlan(e.to_string()))?;
        let assembly_zone = req.plan.assembly_zone().expect("validated plan").id.clone();
        let plan_id = req.plan.plan_id.clone();
        let engine = EngineState::new(Arc::new(req.plan), config).map_err(|e| match e {
            EngineError::InvalidPlan(v) => ApiError::InvalidPlan(v),
            other => ApiError::MalformedPlan(other.to_string()),
        })?;

        let id = format!("s{}", self.next_id.fetch_add(1, Ordering::Relaxed) + 1);
        let created_at = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis() as u64);
        let session = Arc::new(Session {
            id: id.clone(),
            plan_id,
            created_at,
            assembly_zone,
            inner: Mutex::new(Inner { world: World::new(), engine, seq: 0 }),
            updates: broadcast::channel(UPDATE_BUFFER).0,
        });
        self.sessions.write().expect("registry lock").insert(id, Arc::clone(&session));
        Ok(session)
    }

    pub fn get(&self, id: &str) -> Result<Arc<Session>, ApiError> {
        self.sessions
            .read()
            .expect("registry lock")
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::NotFound(id.to_owned()))
    }

    pub fn len(&self) -> usize {
        self.sessions.read().expect("registry lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
