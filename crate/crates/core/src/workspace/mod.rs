//! Workspace geometry, part/connection catalogs, assembly plans and engine
//! configuration. Everything here is an immutable value once built.

mod config;
mod geometry;
mod plan;

pub use config::{
    ConfigError, EngineConfig, DEFAULT_CONNECTION_THRESHOLD, DEFAULT_FRAME_PERIOD_MS,
    DEFAULT_OVERLAP_THRESHOLD,
};
pub use geometry::{rect_intersection_area, zone_overlap_fraction, GeometryError, Rect};
pub use plan::{
    reference_plan, validate_plan, AssemblyPlan, CatalogEntry, ConnectionClass,
    ConnectionRequirement, PartClass, PlacementRequirement, PlanLoadError, StageKind, StageSpec,
    Violation, Zone,
};
