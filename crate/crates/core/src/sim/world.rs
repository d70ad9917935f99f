//! Physical state of the workbench as a function of time, built from
//! operator actions.

use serde::{Deserialize, Serialize};

use crate::engine::Detection;
use crate::workspace::Rect;

/// Something the operator does at the bench.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Action {
    PlacePart { part: String, zone: String, bbox: Rect },
    /// Takes the most recently placed `part` out of `zone`.
    RemovePart { part: String, zone: String },
    /// Holds a finished connection up to the cameras for `duration_ms`.
    ShowConnection { connection: String, duration_ms: u64, leading_prob: f64, aux_prob: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioEvent {
    pub at_ms: u64,
    pub action: Action,
}

impl ScenarioEvent {
    pub fn check(&self) -> Result<(), String> {
        match &self.action {
            Action::PlacePart { bbox, .. } => bbox.validate().map_err(|e| e.to_string()),
            Action::RemovePart { .. } => Ok(()),
            Action::ShowConnection { duration_ms, leading_prob, aux_prob, .. } => {
                if *duration_ms == 0 {
                    return Err("connection shown for zero time".to_owned());
                }
                let unit = |p: &f64| (0.0..=1.0).contains(p);
                if !unit(leading_prob) || !unit(aux_prob) {
                    return Err("connection probability outside [0, 1]".to_owned());
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlacedPart {
    pub part: String,
    pub zone: String,
    pub bbox: Rect,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActiveShow {
    pub connection: String,
    pub leading_prob: f64,
    pub aux_prob: f64,
}

/// What is on the bench at one instant.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct WorldView {
    pub parts: Vec<Detection>,
    pub shows: Vec<ActiveShow>,
}

#[derive(Debug, Clone)]
struct Show {
    from_ms: u64,
    until_ms: u64,
    view: ActiveShow,
}

/// Append-only history of the bench. Events must arrive in time order;
/// the state at any past instant can be queried.
#[derive(Debug, Clone, Default)]
pub struct World {
    /// Part layout after each event time, oldest first.
    layouts: Vec<(u64, Vec<PlacedPart>)>,
    shows: Vec<Show>,
}

impl World {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_events<'a>(events: impl IntoIterator<Item = &'a ScenarioEvent>) -> Result<Self, String> {
        let mut w = World::new();
        for e in events {
            w.push(e)?;
        }
        Ok(w)
    }

    pub fn last_event_ms(&self) -> Option<u64> {
        let layout = self.layouts.last().map(|(t, _)| *t);
        let show = self.shows.last().map(|s| s.from_ms);
        layout.max(show)
    }

    /// Instant after which nothing changes any more.
    pub fn settled_after_ms(&self) -> u64 {
        let layout = self.layouts.last().map_or(0, |(t, _)| *t);
        let show = self.shows.iter().map(|s| s.until_ms).max().unwrap_or(0);
        layout.max(show)
    }

    pub fn push(&mut self, event: &ScenarioEvent) -> Result<(), String> {
        event.check()?;
        if let Some(last) = self.last_event_ms() {
            if event.at_ms < last {
                return Err(format!("event at {} ms precedes event at {last} ms", event.at_ms));
            }
        }
        match &event.action {
            Action::ShowConnection { connection, duration_ms, leading_prob, aux_prob } => {
                self.shows.push(Show {
                    from_ms: event.at_ms,
                    until_ms: event.at_ms.saturating_add(*duration_ms),
                    view: ActiveShow {
                        connection: connection.clone(),
                        leading_prob: *leading_prob,
                        aux_prob: *aux_prob,
                    },
                });
            }
            Action::PlacePart { part, zone, bbox } => {
                let mut layout = self.current_layout();
                layout.push(PlacedPart { part: part.clone(), zone: zone.clone(), bbox: *bbox });
                self.store_layout(event.at_ms, layout);
            }
            Action::RemovePart { part, zone } => {
                let mut layout = self.current_layout();
                if let Some(i) = layout.iter().rposition(|p| &p.part == part && &p.zone == zone) {
                    layout.remove(i);
                }
                self.store_layout(event.at_ms, layout);
            }
        }
        Ok(())
    }

    fn current_layout(&self) -> Vec<PlacedPart> {
        self.layouts.last().map(|(_, l)| l.clone()).unwrap_or_default()
    }

    fn store_layout(&mut self, at: u64, layout: Vec<PlacedPart>) {
        match self.layouts.last_mut() {
            Some((t, l)) if *t == at => *l = layout,
            _ => self.layouts.push((at, layout)),
        }
    }

    pub fn parts_at(&self, t: u64) -> &[PlacedPart] {
        let idx = self.layouts.partition_point(|(at, _)| *at <= t);
        if idx == 0 {
            &[]
        } else {
            &self.layouts[idx - 1].1
        }
    }

    pub fn view_at(&self, t: u64) -> WorldView {
        WorldView {
            parts: self
                .parts_at(t)
                .iter()
                .map(|p| Detection { object_class: p.part.clone(), bbox: p.bbox, confidence: 1.0 })
                .collect(),
            shows: self
                .shows
                .iter()
                .filter(|s| s.from_ms <= t && t < s.until_ms)
                .map(|s| s.view.clone())
                .collect(),
        }
    }
}
