use serde::{Deserialize, Serialize};

/// Half-open time interval `[start_ms, end_ms)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StageInterval {
    pub start_ms: u64,
    pub end_ms: u64,
}

impl StageInterval {
    /// Returns `None` when `end_ms < start_ms`.
    pub fn new(start_ms: u64, end_ms: u64) -> Option<Self> {
        (end_ms >= start_ms).then_some(StageInterval { start_ms, end_ms })
    }

    pub fn len(&self) -> u64 {
        self.end_ms - self.start_ms
    }

    pub fn is_empty(&self) -> bool {
        self.end_ms == self.start_ms
    }

    pub fn overlap(&self, other: &StageInterval) -> u64 {
        self.end_ms
            .min(other.end_ms)
            .saturating_sub(self.start_ms.max(other.start_ms))
    }
}

/// Temporal intersection-over-union: overlap duration divided by union
/// duration.
///
/// Two empty intervals agree perfectly (`1.0`); exactly one empty interval
/// scores `0.0`.
pub fn interval_iou(a: &StageInterval, b: &StageInterval) -> f64 {
    let overlap = a.overlap(b);
    let union = a.len() + b.len() - overlap;
    if union == 0 {
        return 1.0;
    }
    overlap as f64 / union as f64
}

/// Rasterizes both intervals into binary masks at `resolution_ms` and
/// returns the ratio of jointly set cells to cells set in either mask.
///
/// A cell `[k·r, (k+1)·r)` is set when the interval covers its midpoint.
/// Slow by construction; meant as an independent cross-check of
/// [`interval_iou`].
pub fn discretized_iou_oracle(a: &StageInterval, b: &StageInterval, resolution_ms: u64) -> f64 {
    let res = resolution_ms.max(1);
    let lo = a.start_ms.min(b.start_ms) / res;
    let hi = a.end_ms.max(b.end_ms).div_ceil(res);
    // Midpoints doubled to stay in integers.
    let covers = |iv: &StageInterval, cell: u64| {
        let mid2 = 2 * cell * res + res;
        2 * iv.start_ms <= mid2 && mid2 < 2 * iv.end_ms
    };
    let (mut both, mut either) = (0u64, 0u64);
    for cell in lo..hi {
        let (ia, ib) = (covers(a, cell), covers(b, cell));
        both += u64::from(ia && ib);
        either += u64::from(ia || ib);
    }
    if either == 0 {
        // Neither mask has a set cell; agree only if both are truly empty.
        return if a.is_empty() == b.is_empty() { 1.0 } else { 0.0 };
    }
    both as f64 / either as f64
}
