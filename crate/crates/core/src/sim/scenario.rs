use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::world::{Action, ScenarioEvent};
use super::SimError;
use crate::eval::{EvalError, Timeline};
use crate::workspace::{AssemblyPlan, Rect, StageKind, Zone};

/// Mean stage length of a quick run: 52 s over 12 stages.
pub const FAST_MEAN_STAGE_MS: u64 = 52_000 / 12;
/// Mean stage length of a slow run: 129 s over 12 stages.
pub const SLOW_MEAN_STAGE_MS: u64 = 129_000 / 12;

/// Share of the zone's width/height a generated part box occupies.
const PART_BOX_SCALE: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Cohort {
    Fast,
    Slow,
}

impl Cohort {
    pub fn as_str(self) -> &'static str {
        match self {
            Cohort::Fast => "fast",
            Cohort::Slow => "slow",
        }
    }
}

impl fmt::Display for Cohort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Cohort {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "fast" => Ok(Cohort::Fast),
            "slow" => Ok(Cohort::Slow),
            other => Err(format!("unknown cohort '{other}'")),
        }
    }
}

/// How quickly the simulated operator works through stages.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PaceProfile {
    pub mean_stage_duration_ms: u64,
    /// Each stage lasts `mean * (1 + jitter * u)` with `u` uniform in `[-1, 1]`.
    pub jitter_fraction: f64,
    pub cohort: Cohort,
}

impl PaceProfile {
    /// Quick operator. Quick runs vary more from stage to stage.
    pub fn fast() -> Self {
        PaceProfile { mean_stage_duration_ms: FAST_MEAN_STAGE_MS, jitter_fraction: 0.4, cohort: Cohort::Fast }
    }

    pub fn slow() -> Self {
        PaceProfile { mean_stage_duration_ms: SLOW_MEAN_STAGE_MS, jitter_fraction: 0.2, cohort: Cohort::Slow }
    }

    pub fn for_cohort(cohort: Cohort) -> Self {
        match cohort {
            Cohort::Fast => Self::fast(),
            Cohort::Slow => Self::slow(),
        }
    }

    /// Every stage lasts exactly `ms`.
    pub fn fixed(ms: u64, cohort: Cohort) -> Self {
        PaceProfile { mean_stage_duration_ms: ms, jitter_fraction: 0.0, cohort }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.mean_stage_duration_ms == 0 || !(0.0..1.0).contains(&self.jitter_fraction) {
            return Err(SimError::InvalidPace(*self));
        }
        Ok(())
    }

    fn sample_duration(&self, rng: &mut impl Rng) -> u64 {
        if self.jitter_fraction == 0.0 {
            return self.mean_stage_duration_ms;
        }
        let u: f64 = rng.random_range(-1.0..=1.0);
        let d = self.mean_stage_duration_ms as f64 * (1.0 + self.jitter_fraction * u);
        (d.round() as u64).max(1)
    }
}

/// Labeled stage starts of one run plus its completion instant.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub stage_starts: Vec<u64>,
    pub completion_ms: u64,
}

impl GroundTruth {
    pub fn timeline(&self, run_id: &str, cohort: &str) -> Result<Timeline, EvalError> {
        Timeline::from_starts(run_id, cohort, &self.stage_starts, self.completion_ms)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub events: Vec<ScenarioEvent>,
    pub truth: GroundTruth,
}

/// Random box fully inside `zone` that no other zone with a smaller id
/// also fully contains, so zone assignment cannot drift to a neighbour.
fn part_box(zone: &Zone, zones: &[Zone], rng: &mut impl Rng) -> Rect {
    let w = zone.rect.w * PART_BOX_SCALE;
    let h = zone.rect.h * PART_BOX_SCALE;
    let mut candidate = Rect { x: zone.rect.x, y: zone.rect.y, w, h };
    for _ in 0..32 {
        candidate = Rect {
            x: zone.rect.x + rng.random_range(0.0..=zone.rect.w - w),
            y: zone.rect.y + rng.random_range(0.0..=zone.rect.h - h),
            w,
            h,
        };
        let shadowed = zones
            .iter()
            .any(|z| z.id < zone.id && z.rect.contains(&candidate));
        if !shadowed {
            break;
        }
    }
    candidate
}

/// Generates the minimal operator script that walks through `plan` at the
/// given pace, together with its true stage timeline.
///
/// Stage 0 starts at 0. Stage `i` lasts a sampled duration, and the actions
/// that fulfil it all happen at its end, which is also the true start of
/// stage `i + 1`. Placement stages add or remove exactly the parts needed
/// to match their counts; connection stages show the required connection
/// with probability 1 on both cameras until the next stage is fulfilled.
pub fn generate_scenario(plan: &AssemblyPlan, pace: &PaceProfile, seed: u64) -> Result<Scenario, SimError> {
    plan.validate().map_err(SimError::InvalidPlan)?;
    pace.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let n = plan.stage_count();
    let durations: Vec<u64> = (0..n).map(|_| pace.sample_duration(&mut rng)).collect();
    let mut starts = Vec::with_capacity(n);
    let mut t = 0u64;
    for d in &durations {
        starts.push(t);
        t += d;
    }
    let completion_ms = t;

    let mut counts: BTreeMap<(&str, &str), u32> = BTreeMap::new();
    let mut events = Vec::new();
    for (i, stage) in plan.stages.iter().enumerate() {
        let done_at = starts[i] + durations[i];
        match &stage.kind {
            StageKind::Placement(reqs) => {
                let mut moved = false;
                for req in reqs {
                    let have = counts.entry((&req.part_id, &req.zone_id)).or_default();
                    let zone = plan.zone(&req.zone_id).expect("validated plan");
                    while *have < req.count {
                        let bbox = part_box(zone, &plan.zones, &mut rng);
                        events.push(ScenarioEvent {
                            at_ms: done_at,
                            action: Action::PlacePart {
                                part: req.part_id.clone(),
                                zone: req.zone_id.clone(),
                                bbox,
                            },
                        });
                        *have += 1;
                        moved = true;
                    }
                    while *have > req.count {
                        events.push(ScenarioEvent {
                            at_ms: done_at,
                            action: Action::RemovePart {
                                part: req.part_id.clone(),
                                zone: req.zone_id.clone(),
                            },
                        });
                        *have -= 1;
                        moved = true;
                    }
                }
                if !moved {
                    return Err(SimError::StageAlreadySatisfied { stage: i });
                }
            }
            StageKind::Connection(req) => {
                let duration_ms = durations
                    .get(i + 1)
                    .copied()
                    .unwrap_or(pace.mean_stage_duration_ms)
                    .max(1);
                events.push(ScenarioEvent {
                    at_ms: done_at,
                    action: Action::ShowConnection {
                        connection: req.connection_id.clone(),
                        duration_ms,
                        leading_prob: 1.0,
                        aux_prob: 1.0,
                    },
                });
            }
        }
    }

    Ok(Scenario { events, truth: GroundTruth { stage_starts: starts, completion_ms } })
}
