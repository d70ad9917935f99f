use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::types::Detection;
use crate::workspace::{zone_overlap_fraction, EngineConfig, PlacementRequirement, Zone};

/// Number of each part seen in each zone, keyed by `(zone_id, part_id)`.
pub type Occupancy = BTreeMap<(String, String), u32>;

/// Difference between required and observed count for one `(part, zone)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountGap {
    pub part_id: String,
    pub zone_id: String,
    pub count: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PlacementStatus {
    pub satisfied: bool,
    pub missing: Vec<CountGap>,
    pub extra: Vec<CountGap>,
}

/// Zone a detail counts as placed in: the one with the largest overlap
/// fraction among those reaching the threshold, smallest id on ties.
/// Details with an unusable box are never placed.
pub fn assign_zone<'z>(detection: &Detection, zones: &'z [Zone], config: &EngineConfig) -> Option<&'z Zone> {
    let mut best: Option<(&Zone, f64)> = None;
    for zone in zones {
        let Ok(frac) = zone_overlap_fraction(&detection.bbox, &zone.rect) else {
            return None;
        };
        if frac < config.overlap_threshold {
            continue;
        }
        best = match best {
            Some((b, bf)) if bf > frac || (bf == frac && b.id <= zone.id) => Some((b, bf)),
            _ => Some((zone, frac)),
        };
    }
    best.map(|(z, _)| z)
}

pub fn occupancy<'a>(
    detections: impl IntoIterator<Item = &'a Detection>,
    zones: &[Zone],
    config: &EngineConfig,
) -> Occupancy {
    let mut occ = Occupancy::new();
    for d in detections {
        if let Some(zone) = assign_zone(d, zones, config) {
            *occ.entry((zone.id.clone(), d.object_class.clone())).or_default() += 1;
        }
    }
    occ
}

/// Checks the requirements of a placement stage against observed counts.
/// Only the listed `(part, zone)` pairs are inspected; satisfaction means
/// every one of them matches its count exactly.
pub fn evaluate_occupancy(occ: &Occupancy, requirements: &[PlacementRequirement]) -> PlacementStatus {
    let mut status = PlacementStatus::default();
    for req in requirements {
        let seen = occ
            .get(&(req.zone_id.clone(), req.part_id.clone()))
            .copied()
            .unwrap_or(0);
        let gap = |count| CountGap {
            part_id: req.part_id.clone(),
            zone_id: req.zone_id.clone(),
            count,
        };
        if seen < req.count {
            status.missing.push(gap(req.count - seen));
        } else if seen > req.count {
            status.extra.push(gap(seen - req.count));
        }
    }
    status.satisfied = status.missing.is_empty() && status.extra.is_empty();
    status
}

/// Assigns each detection to at most one zone and checks the stage's
/// placement requirements against the resulting counts.
pub fn evaluate_placement(
    detections: &[Detection],
    requirements: &[PlacementRequirement],
    zones: &[Zone],
    config: &EngineConfig,
) -> PlacementStatus {
    evaluate_occupancy(&occupancy(detections, zones, config), requirements)
}

/// Combines per-camera counts: a part counts as present as many times as
/// the camera that sees the most of it reports.
pub fn merge_max(a: Occupancy, b: &Occupancy) -> Occupancy {
    let mut out = a;
    for (k, &v) in b {
        let e = out.entry(k.clone()).or_default();
        *e = (*e).max(v);
    }
    out
}
