//! Assembly plans: zones, catalogs and the ordered stage list.
//!
//! Plans are read from JSON. Zones are written flat
//! (`{id, x, y, w, h, is_assembly_zone}`) and each stage carries a
//! `kind` tag next to its `requirements`:
//!
//! ```json
//! {"index": 0, "kind": "placement",
//!  "requirements": [{"part_id": "base", "zone_id": "assembly", "count": 1}],
//!  "instruction": "Put the base plate into the assembly zone"}
//! {"index": 1, "kind": "connection",
//!  "requirements": {"connection_id": "bracket_to_base"},
//!  "instruction": "Attach the bracket to the base"}
//! ```
//!
//! Unknown keys are rejected everywhere.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::geometry::Rect;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "ZoneRecord", into = "ZoneRecord")]
pub struct Zone {
    pub id: String,
    pub rect: Rect,
    pub is_assembly_zone: bool,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ZoneRecord {
    id: String,
    x: f64,
    y: f64,
    w: f64,
    h: f64,
    #[serde(default)]
    is_assembly_zone: bool,
}

impl From<ZoneRecord> for Zone {
    fn from(z: ZoneRecord) -> Self {
        Zone {
            id: z.id,
            rect: Rect { x: z.x, y: z.y, w: z.w, h: z.h },
            is_assembly_zone: z.is_assembly_zone,
        }
    }
}

impl From<Zone> for ZoneRecord {
    fn from(z: Zone) -> Self {
        ZoneRecord {
            id: z.id,
            x: z.rect.x,
            y: z.rect.y,
            w: z.rect.w,
            h: z.rect.h,
            is_assembly_zone: z.is_assembly_zone,
        }
    }
}

/// Catalog entry for both part classes and connection classes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CatalogEntry {
    pub id: String,
    pub display_name: String,
}

pub type PartClass = CatalogEntry;
pub type ConnectionClass = CatalogEntry;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlacementRequirement {
    pub part_id: String,
    pub zone_id: String,
    pub count: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConnectionRequirement {
    pub connection_id: String,
}

/// What a stage demands before the operator may move on.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "requirements", rename_all = "lowercase")]
pub enum StageKind {
    Placement(Vec<PlacementRequirement>),
    Connection(ConnectionRequirement),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "StageRecord", into = "StageRecord")]
pub struct StageSpec {
    pub index: usize,
    pub kind: StageKind,
    pub instruction: String,
}

impl StageSpec {
    pub fn is_placement(&self) -> bool {
        matches!(self.kind, StageKind::Placement(_))
    }
}

// `deny_unknown_fields` cannot be combined with `flatten`, so the stage is
// decoded through a flat record and the kind/requirements pair re-joined.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StageRecord {
    index: usize,
    kind: String,
    requirements: serde_json::Value,
    instruction: String,
}

impl TryFrom<StageRecord> for StageSpec {
    type Error = String;

    fn try_from(s: StageRecord) -> Result<Self, String> {
        let tagged = serde_json::json!({ "kind": s.kind, "requirements": s.requirements });
        let kind: StageKind = serde_json::from_value(tagged)
            .map_err(|e| format!("stage {}: {e}", s.index))?;
        Ok(StageSpec { index: s.index, kind, instruction: s.instruction })
    }
}

impl From<StageSpec> for StageRecord {
    fn from(s: StageSpec) -> Self {
        let tagged = serde_json::to_value(&s.kind).expect("stage kind serializes");
        StageRecord {
            index: s.index,
            kind: tagged["kind"].as_str().unwrap_or_default().to_owned(),
            requirements: tagged["requirements"].clone(),
            instruction: s.instruction,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssemblyPlan {
    pub plan_id: String,
    pub zones: Vec<Zone>,
    pub parts: Vec<PartClass>,
    pub connections: Vec<ConnectionClass>,
    pub stages: Vec<StageSpec>,
}

#[derive(Debug, Error)]
pub enum PlanLoadError {
    #[error("cannot read plan {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed plan JSON: {0}")]
    Parse(#[from] serde_json::Error),
}

/// A single broken plan invariant.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "violation", rename_all = "snake_case")]
pub enum Violation {
    NoStages,
    StageIndexOutOfOrder { position: usize, found: usize },
    DuplicateZone { zone_id: String },
    DuplicatePart { part_id: String },
    DuplicateConnection { connection_id: String },
    InvalidZoneGeometry { zone_id: String },
    AssemblyZoneCount { found: usize },
    EmptyPlacement { stage: usize },
    UnknownPart { stage: usize, part_id: String },
    UnknownZone { stage: usize, zone_id: String },
    UnknownConnection { stage: usize, connection_id: String },
    ZeroCount { stage: usize, part_id: String, zone_id: String },
    RepeatedRequirement { stage: usize, part_id: String, zone_id: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Violation::*;
        match self {
            NoStages => write!(f, "plan has no stages"),
            StageIndexOutOfOrder { position, found } => {
                write!(f, "stage at position {position} has index {found}")
            }
            DuplicateZone { zone_id } => write!(f, "duplicate zone id '{zone_id}'"),
            DuplicatePart { part_id } => write!(f, "duplicate part id '{part_id}'"),
            DuplicateConnection { connection_id } => {
                write!(f, "duplicate connection id '{connection_id}'")
            }
            InvalidZoneGeometry { zone_id } => {
                write!(f, "zone '{zone_id}' is not a valid workspace rectangle")
            }
            AssemblyZoneCount { found } => {
                write!(f, "expected exactly one assembly zone, found {found}")
            }
            EmptyPlacement { stage } => write!(f, "placement stage {stage} has no requirements"),
            UnknownPart { stage, part_id } => {
                write!(f, "stage {stage} references unknown part '{part_id}'")
            }
            UnknownZone { stage, zone_id } => {
                write!(f, "stage {stage} references unknown zone '{zone_id}'")
            }
            UnknownConnection { stage, connection_id } => {
                write!(f, "stage {stage} references unknown connection '{connection_id}'")
            }
            ZeroCount { stage, part_id, zone_id } => {
                write!(f, "stage {stage} requires zero '{part_id}' in '{zone_id}'")
            }
            RepeatedRequirement { stage, part_id, zone_id } => {
                write!(f, "stage {stage} lists '{part_id}' in '{zone_id}' more than once")
            }
        }
    }
}

impl AssemblyPlan {
    pub fn from_json(text: &str) -> Result<Self, PlanLoadError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, PlanLoadError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|source| PlanLoadError::Io { path: path.display().to_string(), source })?;
        Self::from_json(&text)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("plan serializes")
    }

    pub fn stage_count(&self) -> usize {
        self.stages.len()
    }

    pub fn zone(&self, id: &str) -> Option<&Zone> {
        self.zones.iter().find(|z| z.id == id)
    }

    /// The first zone flagged as the assembly zone. Validated plans have
    /// exactly one.
    pub fn assembly_zone(&self) -> Option<&Zone> {
        self.zones.iter().find(|z| z.is_assembly_zone)
    }

    pub fn has_part(&self, id: &str) -> bool {
        self.parts.iter().any(|p| p.id == id)
    }

    pub fn has_connection(&self, id: &str) -> bool {
        self.connections.iter().any(|c| c.id == id)
    }

    /// Every broken invariant, in a stable order. Empty means the plan is
    /// usable by the engine and simulator.
    pub fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();

        if self.stages.is_empty() {
            out.push(Violation::NoStages);
        }
        for (position, stage) in self.stages.iter().enumerate() {
            if stage.index != position {
                out.push(Violation::StageIndexOutOfOrder { position, found: stage.index });
            }
        }

        let mut seen = HashSet::new();
        for z in &self.zones {
            if !seen.insert(z.id.as_str()) {
                out.push(Violation::DuplicateZone { zone_id: z.id.clone() });
            }
            if z.rect.validate().is_err() {
                out.push(Violation::InvalidZoneGeometry { zone_id: z.id.clone() });
            }
        }
        let assembly = self.zones.iter().filter(|z| z.is_assembly_zone).count();
        if assembly != 1 {
            out.push(Violation::AssemblyZoneCount { found: assembly });
        }

        let mut seen = HashSet::new();
        for p in &self.parts {
            if !seen.insert(p.id.as_str()) {
                out.push(Violation::DuplicatePart { part_id: p.id.clone() });
            }
        }
        let mut seen = HashSet::new();
        for c in &self.connections {
            if !seen.insert(c.id.as_str()) {
                out.push(Violation::DuplicateConnection { connection_id: c.id.clone() });
            }
        }

        for stage in &self.stages {
            let at = stage.index;
            match &stage.kind {
                StageKind::Placement(reqs) => {
                    if reqs.is_empty() {
                        out.push(Violation::EmptyPlacement { stage: at });
                    }
                    let mut pairs = BTreeSet::new();
                    for req in reqs {
                        if !self.has_part(&req.part_id) {
                            out.push(Violation::UnknownPart {
                                stage: at,
                                part_id: req.part_id.clone(),
                            });
                        }
                        if self.zone(&req.zone_id).is_none() {
                            out.push(Violation::UnknownZone {
                                stage: at,
                                zone_id: req.zone_id.clone(),
                            });
                        }
                        if req.count == 0 {
                            out.push(Violation::ZeroCount {
                                stage: at,
                                part_id: req.part_id.clone(),
                                zone_id: req.zone_id.clone(),
                            });
                        }
                        if !pairs.insert((req.part_id.as_str(), req.zone_id.as_str())) {
                            out.push(Violation::RepeatedRequirement {
                                stage: at,
                                part_id: req.part_id.clone(),
                                zone_id: req.zone_id.clone(),
                            });
                        }
                    }
                }
                StageKind::Connection(req) => {
                    if !self.has_connection(&req.connection_id) {
                        out.push(Violation::UnknownConnection {
                            stage: at,
                            connection_id: req.connection_id.clone(),
                        });
                    }
                }
            }
        }
        out
    }

    /// `Ok(())` for a usable plan, otherwise every violation found.
    pub fn validate(&self) -> Result<(), Vec<Violation>> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(v)
        }
    }
}

/// Free-function form of [`AssemblyPlan::validate`].
pub fn validate_plan(plan: &AssemblyPlan) -> Result<(), Vec<Violation>> {
    plan.validate()
}

/// The twelve-stage, seven-part bench device used throughout the tests and
/// as the CLI default: six placement stages alternating with six connection
/// demonstrations.
pub fn reference_plan() -> AssemblyPlan {
    let zone = |id: &str, x, y, w, h, assembly| Zone {
        id: id.to_owned(),
        rect: Rect { x, y, w, h },
        is_assembly_zone: assembly,
    };
    let entry = |id: &str, name: &str| CatalogEntry { id: id.to_owned(), display_name: name.to_owned() };
    let place = |index, reqs: &[(&str, &str, u32)], text: &str| StageSpec {
        index,
        kind: StageKind::Placement(
            reqs.iter()
                .map(|&(p, z, c)| PlacementRequirement {
                    part_id: p.to_owned(),
                    zone_id: z.to_owned(),
                    count: c,
                })
                .collect(),
        ),
        instruction: text.to_owned(),
    };
    let connect = |index, id: &str, text: &str| StageSpec {
        index,
        kind: StageKind::Connection(ConnectionRequirement { connection_id: id.to_owned() }),
        instruction: text.to_owned(),
    };

    AssemblyPlan {
        plan_id: "bench-gear-unit".to_owned(),
        zones: vec![
            zone("assembly", 0.35, 0.30, 0.30, 0.40, true),
            zone("tray_left", 0.05, 0.30, 0.25, 0.40, false),
            zone("tray_right", 0.70, 0.30, 0.25, 0.40, false),
            zone("tools", 0.35, 0.75, 0.30, 0.20, false),
        ],
        parts: vec![
            entry("base", "Base plate"),
            entry("bracket", "Motor bracket"),
            entry("motor", "Motor"),
            entry("shaft", "Output shaft"),
            entry("coupling", "Shaft coupling"),
            entry("gear", "Spur gear"),
            entry("cover", "Cover"),
        ],
        connections: vec![
            entry("bracket_to_base", "Bracket fixed on base"),
            entry("motor_to_bracket", "Motor mounted in bracket"),
            entry("shaft_to_motor", "Shaft inserted into motor"),
            entry("coupling_to_shaft", "Coupling slid onto shaft"),
            entry("gear_to_coupling", "Gear pressed onto coupling"),
            entry("cover_to_base", "Cover closed over base"),
        ],
        stages: vec![
            place(0, &[("base", "assembly", 1), ("bracket", "tray_left", 1)], "Put the base plate into the assembly zone and the bracket on the left tray"),
            connect(1, "bracket_to_base", "Attach the bracket to the base and show it to the cameras"),
            place(2, &[("motor", "tray_left", 1)], "Put the motor on the left tray"),
            connect(3, "motor_to_bracket", "Mount the motor in the bracket"),
            place(4, &[("shaft", "tray_right", 1)], "Put the shaft on the right tray"),
            connect(5, "shaft_to_motor", "Insert the shaft into the motor"),
            place(6, &[("coupling", "tray_right", 1)], "Put the coupling on the right tray"),
            connect(7, "coupling_to_shaft", "Slide the coupling onto the shaft"),
            place(8, &[("gear", "tray_left", 1)], "Put the gear on the left tray"),
            connect(9, "gear_to_coupling", "Press the gear onto the coupling"),
            place(10, &[("cover", "tray_right", 1)], "Put the cover on the right tray"),
            connect(11, "cover_to_base", "Close the cover over the base"),
        ],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_plan_is_valid() {
        let plan = reference_plan();
        assert_eq!(validate_plan(&plan), Ok(()));
        assert_eq!(plan.stage_count(), 12);
        assert_eq!(plan.parts.len(), 7);
        assert_eq!(plan.stages.iter().filter(|s| s.is_placement()).count(), 6);
    }

    #[test]
    fn dangling_zone_is_reported() {
        let mut plan = reference_plan();
        if let StageKind::Placement(reqs) = &mut plan.stages[0].kind {
            reqs[0].zone_id = "shelf".into();
        }
        let v = validate_plan(&plan).unwrap_err();
        assert!(v.contains(&Violation::UnknownZone { stage: 0, zone_id: "shelf".into() }));
    }

    #[test]
    fn empty_plan_is_reported() {
        let mut plan = reference_plan();
        plan.stages.clear();
        assert_eq!(validate_plan(&plan).unwrap_err(), vec![Violation::NoStages]);
    }

    #[test]
    fn structural_violations_are_all_listed() {
        let mut plan = reference_plan();
        plan.stages.swap(0, 1);
        plan.zones[1].is_assembly_zone = true;
        plan.zones.push(plan.zones[3].clone());
        plan.parts.push(plan.parts[0].clone());
        plan.connections[0].id = "ghost".into();
        plan.zones[2].rect.w = 0.5;
        let v = plan.violations();
        assert!(v.contains(&Violation::StageIndexOutOfOrder { position: 0, found: 1 }));
        assert!(v.contains(&Violation::AssemblyZoneCount { found: 2 }));
        assert!(v.contains(&Violation::DuplicateZone { zone_id: "tools".into() }));
        assert!(v.contains(&Violation::DuplicatePart { part_id: "base".into() }));
        assert!(v.contains(&Violation::UnknownConnection {
            stage: 1,
            connection_id: "bracket_to_base".into()
        }));
        assert!(v.contains(&Violation::InvalidZoneGeometry { zone_id: "tray_right".into() }));
    }

    #[test]
    fn zero_count_and_repeats() {
        let mut plan = reference_plan();
        if let StageKind::Placement(reqs) = &mut plan.stages[2].kind {
            reqs[0].count = 0;
            reqs.push(reqs[0].clone());
        }
        let v = plan.violations();
        assert!(v.iter().any(|x| matches!(x, Violation::ZeroCount { stage: 2, .. })));
        assert!(v.iter().any(|x| matches!(x, Violation::RepeatedRequirement { stage: 2, .. })));
    }

    #[test]
    fn json_round_trip_and_shape() {
        let plan = reference_plan();
        let text = plan.to_json_pretty();
        let value: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(value["zones"][0]["x"], 0.35);
        assert_eq!(value["stages"][0]["kind"], "placement");
        assert_eq!(value["stages"][1]["requirements"]["connection_id"], "bracket_to_base");
        assert_eq!(AssemblyPlan::from_json(&text).unwrap(), plan);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let mut value = serde_json::to_value(reference_plan()).unwrap();
        value["zones"][0]["colour"] = "red".into();
        assert!(serde_json::from_value::<AssemblyPlan>(value).is_err());

        let mut value = serde_json::to_value(reference_plan()).unwrap();
        value["stages"][0]["deadline"] = 3.into();
        assert!(serde_json::from_value::<AssemblyPlan>(value).is_err());

        let mut value = serde_json::to_value(reference_plan()).unwrap();
        value["stages"][1]["requirements"]["strength"] = 1.into();
        assert!(serde_json::from_value::<AssemblyPlan>(value).is_err());

        let mut value = serde_json::to_value(reference_plan()).unwrap();
        value["owner"] = "line 3".into();
        assert!(serde_json::from_value::<AssemblyPlan>(value).is_err());
    }

    #[test]
    fn unknown_stage_kind_is_rejected() {
        let mut value = serde_json::to_value(reference_plan()).unwrap();
        value["stages"][1]["kind"] = "inspection".into();
        assert!(serde_json::from_value::<AssemblyPlan>(value).is_err());
    }
}
