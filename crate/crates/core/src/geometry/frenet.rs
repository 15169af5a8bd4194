use super::{Polyline, Vec2};
use crate::error::{Error, Result};

/// Default lateral capture range of a frenet frame, meters.
pub const DEFAULT_CAPTURE_DISTANCE: f64 = 15.0;

/// Curvilinear `(s, d)` coordinates attached to a reference polyline.
///
/// `s` is arc length along the reference, `d` the signed lateral offset
/// (positive to the left of travel). Self-intersecting references are
/// rejected because their projection is not unique near the crossing.
#[derive(Clone, Debug)]
pub struct FrenetFrame {
    reference: Polyline,
    capture: f64,
}

impl FrenetFrame {
    pub fn new(reference: Polyline) -> Result<Self> {
        Self::with_capture(reference, DEFAULT_CAPTURE_DISTANCE)
    }

    pub fn with_capture(reference: Polyline, capture: f64) -> Result<Self> {
        if !(capture > 0.0) {
            return Err(Error::InvalidGeometry(format!(
                "capture distance must be positive, got {capture}"
            )));
        }
        if reference.self_intersects() {
            return Err(Error::InvalidGeometry(
                "frenet reference must not self-intersect".into(),
            ));
        }
        Ok(Self { reference, capture })
    }

    #[inline]
    pub fn reference(&self) -> &Polyline {
        &self.reference
    }

    #[inline]
    pub fn capture(&self) -> f64 {
        self.capture
    }

    #[inline]
    pub fn length(&self) -> f64 {
        self.reference.length()
    }

    /// Projects a cartesian point to `(s, d)` with `0 ≤ s ≤ length`.
    pub fn project(&self, p: Vec2) -> Result<(f64, f64)> {
        let pr = self.reference.project(p);
        if pr.distance > self.capture {
            return Err(Error::OutOfCapture {
                x: p.x,
                y: p.y,
                distance: pr.distance,
                capture: self.capture,
            });
        }
        Ok((pr.s, pr.d))
    }

    /// Projection with the end segments extended, so `s` may leave `[0, length]`.
    /// Returns `None` outside the capture range.
    pub fn project_extended(&self, p: Vec2) -> Option<(f64, f64)> {
        let pr = self.reference.project_extended(p);
        (pr.distance <= self.capture).then_some((pr.s, pr.d))
    }

    /// Unit tangent at `s`.
    pub fn tangent(&self, s: f64) -> Vec2 {
        self.reference.tangent_at(s)
    }

    /// Left unit normal at `s`.
    pub fn normal(&self, s: f64) -> Vec2 {
        self.tangent(s).perp()
    }

    pub fn to_cartesian(&self, s: f64, d: f64) -> Vec2 {
        self.reference.point_at(s) + self.normal(s) * d
    }
}

/// Free-function form of [`FrenetFrame::project`].
pub fn project_to_frenet(frame: &FrenetFrame, point: Vec2) -> Result<(f64, f64)> {
    frame.project(point)
}
