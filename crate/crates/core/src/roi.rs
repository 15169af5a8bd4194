//! Region of interest: a polygon plus one (possibly refined) segment per edge.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Polygon, Vec2};

/// One ROI edge as a standalone segment. Refinement rotates the segment
/// about its midpoint, so refined edges no longer share polygon vertices.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoiEdge {
    pub a: Vec2,
    pub b: Vec2,
    #[serde(default)]
    pub refined: bool,
}

impl RoiEdge {
    pub fn midpoint(&self) -> Vec2 {
        self.a.lerp(self.b, 0.5)
    }

    pub fn length(&self) -> f64 {
        self.a.distance(self.b)
    }

    /// Unit direction from `a` to `b`.
    pub fn direction(&self) -> Vec2 {
        (self.b - self.a) / self.length()
    }

    /// Outward unit normal (right of `a → b` for a counterclockwise polygon).
    pub fn outward_normal(&self) -> Vec2 {
        -self.direction().perp()
    }

    /// Signed coordinate of `p` along the edge, measured from the midpoint.
    pub fn offset_of(&self, p: Vec2) -> f64 {
        (p - self.midpoint()).dot(self.direction())
    }

    pub fn point_at_offset(&self, offset: f64) -> Vec2 {
        self.midpoint() + self.direction() * offset
    }

    /// Signed distance of `p` from the edge line, positive outside.
    pub fn outside_distance(&self, p: Vec2) -> f64 {
        (p - self.midpoint()).dot(self.outward_normal())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RoiSpec {
    polygon: Polygon,
    edges: Vec<RoiEdge>,
}

#[derive(Deserialize)]
struct RawRoi {
    polygon: Vec<Vec2>,
    #[serde(default)]
    edges: Option<Vec<RoiEdge>>,
}

impl<'de> Deserialize<'de> for RoiSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawRoi::deserialize(d)?;
        let polygon = Polygon::new(raw.polygon).map_err(serde::de::Error::custom)?;
        match raw.edges {
            None => Ok(RoiSpec::new(polygon)),
            Some(edges) => RoiSpec::with_edges(polygon, edges).map_err(serde::de::Error::custom),
        }
    }
}

impl RoiSpec {
    pub fn new(polygon: Polygon) -> Self {
        let edges = (0..polygon.edge_count())
            .map(|k| {
                let (a, b) = polygon.edge(k);
                RoiEdge {
                    a,
                    b,
                    refined: false,
                }
            })
            .collect();
        Self { polygon, edges }
    }

    pub fn with_edges(polygon: Polygon, edges: Vec<RoiEdge>) -> Result<Self> {
        if edges.len() != polygon.edge_count() {
            return Err(Error::InvalidGeometry(format!(
                "ROI has {} polygon edges but {} edge segments",
                polygon.edge_count(),
                edges.len()
            )));
        }
        if edges.iter().any(|e| e.length() <= 1e-9) {
            return Err(Error::InvalidGeometry(
                "ROI edge segment has zero length".into(),
            ));
        }
        Ok(Self { polygon, edges })
    }

    #[inline]
    pub fn polygon(&self) -> &Polygon {
        &self.polygon
    }

    #[inline]
    pub fn edges(&self) -> &[RoiEdge] {
        &self.edges
    }

    #[inline]
    pub fn edge(&self, k: usize) -> &RoiEdge {
        &self.edges[k]
    }

    pub(crate) fn set_edge(&mut self, k: usize, e: RoiEdge) {
        self.edges[k] = e;
    }
}
