//! Live assembly sessions over HTTP.
//!
//! | method | path | body | response |
//! |---|---|---|---|
//! | POST | `/sessions` | [`CreateSession`] | 201, [`SessionDescriptor`] |
//! | POST | `/sessions/{id}/events` | [`ClientEvent`] | 200, [`EventResponse`] |
//! | GET | `/sessions/{id}` | | 200, [`SessionDescriptor`] |
//! | GET | `/sessions/{id}/stream` | | server-sent events, see [`stream`] |
//! | GET | `/sessions/{id}/timeline` | | 200, `text/csv` timeline |
//!
//! Failures answer with [`ErrorBody`]: 404 unknown session, 409 completed
//! (events) or incomplete (timeline) session, 422 invalid plan, 400 bad or
//! out-of-order event.

mod error;
mod session;

use std::net::SocketAddr;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::IntoResponse;
use axum::routing::{get, post};
use axum::{Json, Router};
use futures::stream::{self, Stream, StreamExt};
use tokio::sync::broadcast::error::RecvError;

pub use error::{ApiError, ErrorBody};
pub use session::{
    ClientEvent, CreateSession, EventResponse, Registry, Session, SessionDescriptor, Update,
    TIMELINE_COHORT,
};

pub type AppState = Arc<Registry>;

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/events", post(post_event))
        .route("/sessions/{id}/stream", get(stream))
        .route("/sessions/{id}/timeline", get(timeline))
        .with_state(state)
}

/// Binds `addr` and serves until the process is stopped. `on_bound` gets
/// the actual address (useful with port 0).
pub async fn serve(addr: SocketAddr, on_bound: impl FnOnce(SocketAddr)) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    on_bound(listener.local_addr()?);
    axum::serve(listener, router(Arc::new(Registry::default()))).await
}

async fn create_session(State(registry): State<AppState>, body: Bytes) -> Result<impl IntoResponse, ApiError> {
    let req: CreateSession = serde_json::from_slice(&body).map_err(|e| ApiError::MalformedPlan(e.to_string()))?;
    let session = registry.create(req)?;
    Ok((StatusCode::CREATED, Json(session.descriptor().await)))
}

async fn get_session(State(registry): State<AppState>, Path(id): Path<String>) -> Result<impl IntoResponse, ApiError> {
    Ok(Json(registry.get(&id)?.descriptor().await))
}

async fn post_event(
    State(registry): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<impl IntoResponse, ApiError> {
    let session = registry.get(&id)?;
    let event: ClientEvent = serde_json::from_slice(&body).map_err(|e| ApiError::BadRequest(e.to_string()))?;
    Ok(Json(session.apply(event).await?))
}

async fn timeline(State(registry): State<AppState>, Path(id): Path<String>) -> Result<impl IntoResponse, ApiError> {
    let csv = registry.get(&id)?.timeline_csv().await?;
    Ok(([(header::CONTENT_TYPE, "text/csv")], csv))
}

fn sse_event(name: &str, update: &Update) -> Event {
    Event::default()
        .event(name)
        .id(update.seq.to_string())
        .json_data(update)
        .expect("update serializes")
}

/// Server-sent events of one session.
///
/// The first event, `snapshot`, carries the state as of subscription with an
/// empty `events` list. Every processed client event then produces one
/// `update` whose `events` are the engine's log lines in order. Each event's
/// id is the session sequence number, so no update is delivered twice. A
/// subscriber that falls behind gets a fresh `snapshot` instead of the
/// updates it missed. The stream ends after the update that completes the
/// plan.
async fn stream(
    State(registry): State<AppState>,
    Path(id): Path<String>,
) -> Result<Sse<impl Stream<Item = Result<Event, std::convert::Infallible>>>, ApiError> {
    let session = registry.get(&id)?;
    let (first, rx) = session.subscribe().await;
    let done = first.snapshot.completed;
    let head = stream::iter([Ok(sse_event("snapshot", &first))]);

    let tail = stream::unfold(
        (rx, first.seq, session, done),
        |(mut rx, mut last, session, done)| async move {
            if done {
                return None;
            }
            loop {
                match rx.recv().await {
                    Ok(update) if update.seq <= last => continue,
                    Ok(update) => {
                        let done = update.snapshot.completed;
                        let event = sse_event("update", &update);
                        return Some((Ok(event), (rx, update.seq, session, done)));
                    }
                    Err(RecvError::Lagged(_)) => {
                        let (fresh, rx) = session.subscribe().await;
                        if fresh.seq <= last {
                            last = fresh.seq;
                            continue;
                        }
                        let done = fresh.snapshot.completed;
                        let event = sse_event("snapshot", &fresh);
                        return Some((Ok(event), (rx, fresh.seq, session, done)));
                    }
                    Err(RecvError::Closed) => return None,
                }
            }
        },
    );
    Ok(Sse::new(head.chain(tail)).keep_alive(KeepAlive::default()))
}
