//! Two-camera connection confirmation.
//!
//! The leading camera is consulted first. Only when it is confident about a
//! single connection is the auxiliary frame evaluated with the same rule,
//! and a decision is made only when both name the same connection.

use serde::{Deserialize, Serialize};

use super::types::{Camera, ConnectionHypothesis, FrameObservation};
use super::EngineError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "decision", content = "connection_id", rename_all = "snake_case")]
pub enum ConnectionDecision {
    NoDecision,
    Agreed(String),
}

/// The most probable connection among those strictly above `threshold`,
/// smallest id on ties.
pub fn decide_connection_single<'a>(
    hypotheses: impl IntoIterator<Item = &'a ConnectionHypothesis>,
    threshold: f64,
) -> Option<&'a str> {
    hypotheses
        .into_iter()
        .filter(|h| h.probability > threshold)
        .fold(None, |best: Option<&ConnectionHypothesis>, h| match best {
            Some(b)
                if b.probability > h.probability
                    || (b.probability == h.probability && b.connection_id <= h.connection_id) =>
            {
                Some(b)
            }
            _ => Some(h),
        })
        .map(|h| h.connection_id.as_str())
}

fn in_zone<'a>(
    frame: &'a FrameObservation,
    zone: Option<&'a str>,
) -> impl Iterator<Item = &'a ConnectionHypothesis> + 'a {
    frame
        .connection_hypotheses
        .iter()
        .filter(move |h| zone.is_none_or(|z| h.source_zone_id == z))
}

/// Runs the leading-then-auxiliary procedure. With `assembly_zone` set,
/// hypotheses computed over any other zone are ignored.
pub fn decide_connection(
    leading: &FrameObservation,
    auxiliary: &FrameObservation,
    threshold: f64,
    assembly_zone: Option<&str>,
) -> Result<ConnectionDecision, EngineError> {
    if leading.camera != Camera::Leading || auxiliary.camera != Camera::Auxiliary {
        return Err(EngineError::CameraRole);
    }
    let Some(lead) = decide_connection_single(in_zone(leading, assembly_zone), threshold) else {
        return Ok(ConnectionDecision::NoDecision);
    };
    match decide_connection_single(in_zone(auxiliary, assembly_zone), threshold) {
        Some(aux) if aux == lead => Ok(ConnectionDecision::Agreed(lead.to_owned())),
        _ => Ok(ConnectionDecision::NoDecision),
    }
}
