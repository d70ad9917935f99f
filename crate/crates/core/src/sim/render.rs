//! Synthetic camera streams: the world as both cameras see it, late and
//! imperfectly.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::world::World;
use super::SimError;
use crate::engine::{Camera, ConnectionHypothesis, Detection, FrameObservation};
use crate::workspace::AssemblyPlan;

/// Delay between the bench changing and the cameras reflecting it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LagModel {
    Constant { lag_ms: u64 },
    /// Fresh integer lag drawn uniformly from `[min_ms, max_ms]` every frame.
    UniformJitter { min_ms: u64, max_ms: u64 },
}

impl LagModel {
    pub const NONE: LagModel = LagModel::Constant { lag_ms: 0 };

    pub fn validate(&self) -> Result<(), SimError> {
        match *self {
            LagModel::UniformJitter { min_ms, max_ms } if min_ms > max_ms => Err(SimError::InvalidLag(*self)),
            _ => Ok(()),
        }
    }

    pub fn max_ms(&self) -> u64 {
        match *self {
            LagModel::Constant { lag_ms } => lag_ms,
            LagModel::UniformJitter { max_ms, .. } => max_ms,
        }
    }

    fn sample(&self, rng: &mut impl Rng) -> u64 {
        match *self {
            LagModel::Constant { lag_ms } => lag_ms,
            LagModel::UniformJitter { min_ms, max_ms } => rng.random_range(min_ms..=max_ms),
        }
    }
}

/// Per-frame detection failures and spurious connection hypotheses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    /// Probability that any single detection or hypothesis is dropped, drawn
    /// independently per camera.
    pub miss_rate: f64,
    /// Probability that a camera reports one made-up connection in a frame.
    pub false_hypothesis_rate: f64,
    pub seed: u64,
}

impl NoiseModel {
    pub const NONE: NoiseModel = NoiseModel { miss_rate: 0.0, false_hypothesis_rate: 0.0, seed: 0 };

    pub fn validate(&self) -> Result<(), SimError> {
        let rate = |r: f64| (0.0..1.0).contains(&r);
        if !rate(self.miss_rate) || !rate(self.false_hypothesis_rate) {
            return Err(SimError::InvalidNoise(*self));
        }
        Ok(())
    }

    pub fn is_silent(&self) -> bool {
        self.miss_rate == 0.0 && self.false_hypothesis_rate == 0.0
    }
}

/// Settings shared by every frame of one rendering.
#[derive(Debug, Clone)]
pub struct RenderSettings {
    pub lag: LagModel,
    pub noise: NoiseModel,
    pub frame_period_ms: u64,
    /// Last tick rendered (inclusive).
    pub horizon_ms: u64,
    /// Spurious hypotheses get a probability in `(threshold, 1]`.
    pub connection_threshold: f64,
}

/// Lazily renders `(leading, auxiliary)` frame pairs at ticks
/// `0, p, 2p, ...` up to the horizon.
///
/// At tick `t` a lag `l` is drawn once for both cameras and the cameras see
/// the bench as it was at `t - l` (an empty bench before time 0).
/// Hypotheses are reported over the assembly zone.
pub struct FrameRenderer<'w> {
    world: &'w World,
    settings: RenderSettings,
    assembly_zone: String,
    connections: Vec<String>,
    next_tick: Option<u64>,
    lag_rng: ChaCha8Rng,
    noise_rng: ChaCha8Rng,
}

impl<'w> FrameRenderer<'w> {
    pub fn new(world: &'w World, plan: &AssemblyPlan, settings: RenderSettings) -> Result<Self, SimError> {
        settings.lag.validate()?;
        settings.noise.validate()?;
        if settings.frame_period_ms == 0 {
            return Err(SimError::InvalidFramePeriod);
        }
        let assembly_zone = plan
            .assembly_zone()
            .ok_or_else(|| SimError::InvalidPlan(plan.violations()))?
            .id
            .clone();
        let mut lag_rng = ChaCha8Rng::seed_from_u64(settings.noise.seed);
        lag_rng.set_stream(1);
        let mut noise_rng = ChaCha8Rng::seed_from_u64(settings.noise.seed);
        noise_rng.set_stream(2);
        Ok(FrameRenderer {
            world,
            assembly_zone,
            connections: plan.connections.iter().map(|c| c.id.clone()).collect(),
            next_tick: Some(0),
            settings,
            lag_rng,
            noise_rng,
        })
    }

    fn frame(
        &mut self,
        camera: Camera,
        timestamp_ms: u64,
        parts: &[Detection],
        shows: &[(String, f64)],
    ) -> FrameObservation {
        let noise = self.settings.noise;
        let rng = &mut self.noise_rng;
        let keep = |rng: &mut ChaCha8Rng| noise.miss_rate == 0.0 || !rng.random_bool(noise.miss_rate);

        let detections = parts.iter().filter(|_| keep(rng)).cloned().collect();
        let mut connection_hypotheses: Vec<ConnectionHypothesis> = shows
            .iter()
            .filter(|_| keep(rng))
            .map(|(c, p)| ConnectionHypothesis {
                connection_id: c.clone(),
                probability: *p,
                source_zone_id: self.assembly_zone.clone(),
            })
            .collect();
        if noise.false_hypothesis_rate > 0.0
            && !self.connections.is_empty()
            && rng.random_bool(noise.false_hypothesis_rate)
        {
            let c = &self.connections[rng.random_range(0..self.connections.len())];
            let t = self.settings.connection_threshold;
            let u: f64 = rng.random();
            connection_hypotheses.push(ConnectionHypothesis {
                connection_id: c.clone(),
                probability: 1.0 - u * (1.0 - t),
                source_zone_id: self.assembly_zone.clone(),
            });
        }
        FrameObservation { camera, timestamp_ms, detections, connection_hypotheses }
    }
}

impl Iterator for FrameRenderer<'_> {
    type Item = (FrameObservation, FrameObservation);

    fn next(&mut self) -> Option<Self::Item> {
        let tick = self.next_tick.filter(|t| *t <= self.settings.horizon_ms)?;
        self.next_tick = tick.checked_add(self.settings.frame_period_ms);

        let lag = self.settings.lag.sample(&mut self.lag_rng);
        let view = tick
            .checked_sub(lag)
            .map(|seen_at| self.world.view_at(seen_at))
            .unwrap_or_default();
        let lead_shows: Vec<(String, f64)> =
            view.shows.iter().map(|s| (s.connection.clone(), s.leading_prob)).collect();
        let aux_shows: Vec<(String, f64)> =
            view.shows.iter().map(|s| (s.connection.clone(), s.aux_prob)).collect();
        let leading = self.frame(Camera::Leading, tick, &view.parts, &lead_shows);
        let auxiliary = self.frame(Camera::Auxiliary, tick, &view.parts, &aux_shows);
        Some((leading, auxiliary))
    }
}

/// Renders a finished event list into frame pairs.
pub fn render_frames<'w>(
    world: &'w World,
    plan: &AssemblyPlan,
    settings: RenderSettings,
) -> Result<FrameRenderer<'w>, SimError> {
    FrameRenderer::new(world, plan, settings)
}

/// The pair of frames both cameras would report at `t` with no lag and no
/// noise.
pub fn noiseless_frames(world: &World, assembly_zone: &str, t: u64) -> (FrameObservation, FrameObservation) {
    let view = world.view_at(t);
    let frame = |camera, prob: fn(&super::world::ActiveShow) -> f64| FrameObservation {
        camera,
        timestamp_ms: t,
        detections: view.parts.clone(),
        connection_hypotheses: view
            .shows
            .iter()
            .map(|s| ConnectionHypothesis {
                connection_id: s.connection.clone(),
                probability: prob(s),
                source_zone_id: assembly_zone.to_owned(),
            })
            .collect(),
    };
    (frame(Camera::Leading, |s| s.leading_prob), frame(Camera::Auxiliary, |s| s.aux_prob))
}
