use serde::{Deserialize, Serialize};

use super::polyline::{line_intersection, point_segment_distance, segments_intersect};
use super::Vec2;
use crate::error::{Error, Result};

/// A crossing of a segment through a polygon edge.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EdgeCrossing {
    pub edge: usize,
    pub point: Vec2,
    /// Parameter along the query segment, in `[0, 1)`.
    pub t: f64,
    /// True when the segment enters the polygon through this edge.
    pub inward: bool,
}

/// Simple polygon with counterclockwise winding. Edge `k` runs from vertex
/// `k` to vertex `k + 1 (mod n)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec2>", into = "Vec<Vec2>")]
pub struct Polygon {
    vertices: Vec<Vec2>,
}

impl TryFrom<Vec<Vec2>> for Polygon {
    type Error = Error;
    fn try_from(v: Vec<Vec2>) -> Result<Self> {
        Polygon::new(v)
    }
}

impl From<Polygon> for Vec<Vec2> {
    fn from(p: Polygon) -> Self {
        p.vertices
    }
}

impl Polygon {
    /// Validates and builds a polygon. Clockwise input is reversed to
    /// counterclockwise, which renumbers the edges.
    pub fn new(mut vertices: Vec<Vec2>) -> Result<Self> {
        if vertices.len() > 1 && vertices.first() == vertices.last() {
            vertices.pop();
        }
        if vertices.len() < 3 {
            return Err(Error::InvalidGeometry(format!(
                "polygon needs at least 3 vertices, got {}",
                vertices.len()
            )));
        }
        let area = signed_area(&vertices);
        if area.abs() < 1e-12 {
            return Err(Error::InvalidGeometry("polygon has zero area".into()));
        }
        let n = vertices.len();
        for i in 0..n {
            for j in (i + 1)..n {
                // skip edges sharing a vertex
                if j == i + 1 || (i == 0 && j == n - 1) {
                    continue;
                }
                if segments_intersect(
                    vertices[i],
                    vertices[(i + 1) % n],
                    vertices[j],
                    vertices[(j + 1) % n],
                ) {
                    return Err(Error::InvalidGeometry(format!(
                        "polygon edges {i} and {j} intersect"
                    )));
                }
            }
        }
        if area < 0.0 {
            vertices.reverse();
        }
        Ok(Self { vertices })
    }

    /// Axis-aligned rectangle `[min, max]`.
    pub fn rectangle(min: Vec2, max: Vec2) -> Result<Self> {
        Self::new(vec![
            min,
            Vec2::new(max.x, min.y),
            max,
            Vec2::new(min.x, max.y),
        ])
    }

    #[inline]
    pub fn vertices(&self) -> &[Vec2] {
        &self.vertices
    }

    #[inline]
    pub fn edge_count(&self) -> usize {
        self.vertices.len()
    }

    #[inline]
    pub fn edge(&self, k: usize) -> (Vec2, Vec2) {
        let n = self.vertices.len();
        (self.vertices[k % n], self.vertices[(k + 1) % n])
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.vertices)
    }

    pub fn perimeter(&self) -> f64 {
        (0..self.edge_count())
            .map(|k| {
                let (a, b) = self.edge(k);
                a.distance(b)
            })
            .sum()
    }

    /// `(min, max)` corners of the bounding box.
    pub fn bounds(&self) -> (Vec2, Vec2) {
        let mut lo = Vec2::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for v in &self.vertices {
            lo = Vec2::new(lo.x.min(v.x), lo.y.min(v.y));
            hi = Vec2::new(hi.x.max(v.x), hi.y.max(v.y));
        }
        (lo, hi)
    }

    /// Even-odd point containment. Points exactly on the boundary may go either way.
    pub fn contains(&self, p: Vec2) -> bool {
        let mut inside = false;
        let n = self.vertices.len();
        let mut j = n - 1;
        for i in 0..n {
            let (a, b) = (self.vertices[i], self.vertices[j]);
            if (a.y > p.y) != (b.y > p.y) {
                let x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
                if p.x < x {
                    inside = !inside;
                }
            }
            j = i;
        }
        inside
    }

    /// Unsigned distance from `p` to the polygon boundary.
    pub fn boundary_distance(&self, p: Vec2) -> f64 {
        (0..self.edge_count())
            .map(|k| {
                let (a, b) = self.edge(k);
                point_segment_distance(p, a, b)
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Distance from `p` to the polygon region (zero inside).
    pub fn distance(&self, p: Vec2) -> f64 {
        if self.contains(p) {
            0.0
        } else {
            self.boundary_distance(p)
        }
    }

    /// Every crossing of segment `a → b` with the polygon boundary, in travel order.
    ///
    /// Edges are half-open at their end vertex and the segment is half-open at
    /// `b`, so a chain of segments counts a crossing through a shared point once.
    pub fn crossings(&self, a: Vec2, b: Vec2) -> Vec<EdgeCrossing> {
        let mut out = Vec::new();
        let r = b - a;
        for k in 0..self.edge_count() {
            let (e0, e1) = self.edge(k);
            let Some((t, u)) = line_intersection(a, b, e0, e1) else {
                continue;
            };
            if (0.0..1.0).contains(&t) && (0.0..1.0).contains(&u) {
                out.push(EdgeCrossing {
                    edge: k,
                    point: a + r * t,
                    t,
                    inward: (e1 - e0).cross(r) > 0.0,
                });
            }
        }
        out.sort_by(|x, y| x.t.total_cmp(&y.t).then(x.edge.cmp(&y.edge)));
        out
    }
}

fn signed_area(v: &[Vec2]) -> f64 {
    let n = v.len();
    (0..n).map(|i| v[i].cross(v[(i + 1) % n])).sum::<f64>() / 2.0
}

/// First polygon edge crossed by `segment` in travel order, with the crossing point.
pub fn polygon_edge_crossing(polygon: &Polygon, segment: (Vec2, Vec2)) -> Option<(usize, Vec2)> {
    polygon
        .crossings(segment.0, segment.1)
        .first()
        .map(|c| (c.edge, c.point))
}
