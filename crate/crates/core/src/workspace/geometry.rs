//! Axis-aligned rectangles in normalized workspace coordinates.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Slack allowed on the `[0,1]` bounds to absorb float noise from
/// generated or hand-written coordinates such as `0.7 + 0.3`.
const BOUNDS_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("rectangle {0:?} violates workspace bounds")]
    OutOfBounds(Rect),
    #[error("rectangle {0:?} has non-positive extent")]
    Degenerate(Rect),
}

/// Rectangle `[x, x+w) x [y, y+h)` in the unit workspace square.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rect {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl Rect {
    /// Builds a rectangle, rejecting anything outside the unit square.
    pub fn new(x: f64, y: f64, w: f64, h: f64) -> Result<Self, GeometryError> {
        let r = Rect { x, y, w, h };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        let finite = [self.x, self.y, self.w, self.h].iter().all(|v| v.is_finite());
        if !finite || !(self.w > 0.0 && self.h > 0.0) {
            return Err(GeometryError::Degenerate(*self));
        }
        if self.x < 0.0
            || self.y < 0.0
            || self.x + self.w > 1.0 + BOUNDS_EPS
            || self.y + self.h > 1.0 + BOUNDS_EPS
        {
            return Err(GeometryError::OutOfBounds(*self));
        }
        Ok(())
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    pub fn right(&self) -> f64 {
        self.x + self.w
    }

    pub fn bottom(&self) -> f64 {
        self.y + self.h
    }

    pub fn contains(&self, other: &Rect) -> bool {
        other.x >= self.x
            && other.y >= self.y
            && other.right() <= self.right()
            && other.bottom() <= self.bottom()
    }
}

/// Area of the geometric intersection of two rectangles; `0.0` when disjoint
/// or merely touching.
pub fn rect_intersection_area(a: &Rect, b: &Rect) -> f64 {
    let w = a.right().min(b.right()) - a.x.max(b.x);
    let h = a.bottom().min(b.bottom()) - a.y.max(b.y);
    if w <= 0.0 || h <= 0.0 {
        0.0
    } else {
        w * h
    }
}

/// Share of the detail's own area that lies inside `zone`.
///
/// The denominator is the detail box, not the zone: a small part sitting
/// entirely inside a large zone scores `1.0`.
pub fn zone_overlap_fraction(detail_bbox: &Rect, zone: &Rect) -> Result<f64, GeometryError> {
    let area = detail_bbox.area();
    if area.is_nan() || area <= 0.0 || area.is_infinite() {
        return Err(GeometryError::Degenerate(*detail_bbox));
    }
    let frac = rect_intersection_area(detail_bbox, zone) / area;
    Ok(frac.clamp(0.0, 1.0))
}
