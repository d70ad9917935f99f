//! Seeded assembly runs: operator scripts with their true timelines, the
//! camera streams they produce, and the engine's reading of those streams.

mod render;
mod scenario;
mod world;

use std::sync::Arc;

use thiserror::Error;

pub use render::{noiseless_frames, render_frames, FrameRenderer, LagModel, NoiseModel, RenderSettings};
pub use scenario::{
    generate_scenario, Cohort, GroundTruth, PaceProfile, Scenario, FAST_MEAN_STAGE_MS,
    SLOW_MEAN_STAGE_MS,
};
pub use world::{Action, ActiveShow, PlacedPart, ScenarioEvent, World, WorldView};

use crate::engine::{run_session, EngineError, SessionResult};
use crate::workspace::{AssemblyPlan, EngineConfig, Violation};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("plan is invalid ({} violations)", .0.len())]
    InvalidPlan(Vec<Violation>),
    #[error("invalid pace profile {0:?}")]
    InvalidPace(PaceProfile),
    #[error("invalid lag model {0:?}")]
    InvalidLag(LagModel),
    #[error("invalid noise model {0:?}")]
    InvalidNoise(NoiseModel),
    #[error("frame period must be positive")]
    InvalidFramePeriod,
    #[error("stage {stage} is already satisfied by the layout of earlier stages")]
    StageAlreadySatisfied { stage: usize },
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

/// Paired labels of one simulated run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedRun {
    pub truth: GroundTruth,
    pub session: SessionResult,
}

/// Ticks rendered past the last world change, so a late or noisy engine
/// still gets a chance to catch up.
fn horizon_for(world: &World, lag: &LagModel, pace_mean_ms: u64, frame_period_ms: u64) -> u64 {
    world.settled_after_ms() + lag.max_ms() + 2 * pace_mean_ms + 10 * frame_period_ms
}

/// Derives the frame-noise seed of a run from the model seed and run seed.
pub fn render_seed(noise_seed: u64, run_seed: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = noise_seed ^ run_seed.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Generates a scenario, renders it through the lag and noise models and
/// replays it through the engine.
pub fn simulate_run(
    plan: &Arc<AssemblyPlan>,
    config: &EngineConfig,
    pace: &PaceProfile,
    lag: &LagModel,
    noise: &NoiseModel,
    seed: u64,
) -> Result<SimulatedRun, SimError> {
    let scenario = generate_scenario(plan, pace, seed)?;
    let world = World::from_events(&scenario.events).map_err(SimError::InvalidScenario)?;
    let settings = RenderSettings {
        lag: *lag,
        noise: NoiseModel { seed: render_seed(noise.seed, seed), ..*noise },
        frame_period_ms: config.frame_period_ms,
        horizon_ms: horizon_for(&world, lag, pace.mean_stage_duration_ms, config.frame_period_ms),
        connection_threshold: config.connection_threshold,
    };
    let frames = render_frames(&world, plan, settings)?;
    let session = run_session(Arc::clone(plan), *config, frames)?;
    Ok(SimulatedRun { truth: scenario.truth, session })
}

/// Replays a hand-written scenario through the engine.
pub fn replay_scenario(
    plan: &Arc<AssemblyPlan>,
    config: &EngineConfig,
    events: &[ScenarioEvent],
    lag: &LagModel,
    noise: &NoiseModel,
) -> Result<SessionResult, SimError> {
    plan.validate().map_err(SimError::InvalidPlan)?;
    let world = World::from_events(events).map_err(SimError::InvalidScenario)?;
    let settings = RenderSettings {
        lag: *lag,
        noise: *noise,
        frame_period_ms: config.frame_period_ms,
        horizon_ms: horizon_for(&world, lag, 0, config.frame_period_ms),
        connection_threshold: config.connection_threshold,
    };
    let frames = render_frames(&world, plan, settings)?;
    Ok(run_session(Arc::clone(plan), *config, frames)?)
}
