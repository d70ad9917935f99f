//! Supervision of regulated manual assembly.
//!
//! * [`workspace`]: zone geometry, part and connection catalogs, plans.
//! * [`engine`]: the stage state machine fed with paired camera frames.
//! * [`sim`]: seeded operator scenarios, frame rendering with lag and noise.
//! * [`eval`]: temporal IoU of predicted vs labeled stage timelines.

pub mod engine;
pub mod eval;
pub mod sim;
pub mod workspace;
