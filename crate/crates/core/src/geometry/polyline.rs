use serde::{Deserialize, Serialize};

use super::Vec2;
use crate::error::{Error, Result};

/// Minimum distance between consecutive polyline vertices.
pub const MIN_SEGMENT_LENGTH: f64 = 1e-9;

/// Result of projecting a point onto a polyline.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Projection {
    /// Arc length of the foot point.
    pub s: f64,
    /// Signed lateral offset, positive to the left of travel direction.
    pub d: f64,
    /// Unsigned distance to the foot point.
    pub distance: f64,
    pub point: Vec2,
    pub segment: usize,
}

/// An ordered open polyline with a cumulative arc-length table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec2>", into = "Vec<Vec2>")]
pub struct Polyline {
    points: Vec<Vec2>,
    arc: Vec<f64>,
}

impl TryFrom<Vec<Vec2>> for Polyline {
    type Error = Error;
    fn try_from(points: Vec<Vec2>) -> Result<Self> {
        Polyline::new(points)
    }
}

impl From<Polyline> for Vec<Vec2> {
    fn from(p: Polyline) -> Self {
        p.points
    }
}

impl Polyline {
    /// Builds a polyline; requires at least two vertices and distinct consecutive vertices.
    pub fn new(points: Vec<Vec2>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidGeometry(format!(
                "polyline needs at least 2 points, got {}",
                points.len()
            )));
        }
        let mut arc = Vec::with_capacity(points.len());
        arc.push(0.0);
        for (k, w) in points.windows(2).enumerate() {
            if !(w[0].x.is_finite()
                && w[0].y.is_finite()
                && w[1].x.is_finite()
                && w[1].y.is_finite())
            {
                return Err(Error::InvalidGeometry("non-finite polyline vertex".into()));
            }
            let len = w[0].distance(w[1]);
            if len <= MIN_SEGMENT_LENGTH {
                return Err(Error::InvalidGeometry(format!(
                    "consecutive polyline vertices {} and {} coincide",
                    k,
                    k + 1
                )));
            }
            arc.push(arc[k] + len);
        }
        Ok(Self { points, arc })
    }

    /// Builds a polyline after dropping consecutive duplicate vertices.
    pub fn from_points_dedup(points: impl IntoIterator<Item = Vec2>) -> Result<Self> {
        let mut out: Vec<Vec2> = Vec::new();
        for p in points {
            if out
                .last()
                .is_none_or(|q| q.distance(p) > MIN_SEGMENT_LENGTH)
            {
                out.push(p);
            }
        }
        Self::new(out)
    }

    #[inline]
    pub fn points(&self) -> &[Vec2] {
        &self.points
    }

    #[inline]
    pub fn arc_lengths(&self) -> &[f64] {
        &self.arc
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.points.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    #[inline]
    pub fn segment_count(&self) -> usize {
        self.points.len() - 1
    }

    /// Total arc length.
    #[inline]
    pub fn length(&self) -> f64 {
        *self.arc.last().unwrap()
    }

    #[inline]
    pub fn start(&self) -> Vec2 {
        self.points[0]
    }

    #[inline]
    pub fn end(&self) -> Vec2 {
        *self.points.last().unwrap()
    }

    /// Unit direction of segment `k`.
    #[inline]
    pub fn segment_direction(&self, k: usize) -> Vec2 {
        let d = self.points[k + 1] - self.points[k];
        d / (self.arc[k + 1] - self.arc[k])
    }

    /// Segment index containing arc length `s` (clamped to the polyline).
    pub fn segment_at(&self, s: f64) -> usize {
        let n = self.segment_count();
        match self.arc.binary_search_by(|a| a.total_cmp(&s)) {
            Ok(k) => k.min(n - 1),
            Err(k) => k.saturating_sub(1).min(n - 1),
        }
    }

    /// Point at arc length `s`, linearly extrapolated beyond either end.
    pub fn point_at(&self, s: f64) -> Vec2 {
        let k = self.segment_at(s);
        self.points[k] + self.segment_direction(k) * (s - self.arc[k])
    }

    /// Unit tangent at arc length `s`.
    pub fn tangent_at(&self, s: f64) -> Vec2 {
        self.segment_direction(self.segment_at(s))
    }

    pub fn heading_at(&self, s: f64) -> f64 {
        self.tangent_at(s).angle()
    }

    /// Samples at `0, spacing, 2·spacing, …` plus the end point.
    pub fn sample_arc_lengths(&self, spacing: f64) -> Vec<f64> {
        assert!(spacing > 0.0, "sample spacing must be positive");
        let total = self.length();
        let n = (total / spacing + 1e-9).floor() as usize;
        let mut out: Vec<f64> = (0..=n).map(|k| k as f64 * spacing).collect();
        if total - out.last().unwrap() > 1e-6 {
            out.push(total);
        } else {
            *out.last_mut().unwrap() = total;
        }
        out
    }

    /// Uniform arc-length resampling that keeps both end points.
    pub fn resample(&self, spacing: f64) -> Result<Polyline> {
        Polyline::from_points_dedup(
            self.sample_arc_lengths(spacing)
                .into_iter()
                .map(|s| self.point_at(s)),
        )
    }

    fn project_segment(
        &self,
        k: usize,
        p: Vec2,
        extend_start: bool,
        extend_end: bool,
    ) -> Projection {
        let a = self.points[k];
        let len = self.arc[k + 1] - self.arc[k];
        let dir = (self.points[k + 1] - a) / len;
        let mut t = (p - a).dot(dir);
        if !extend_start {
            t = t.max(0.0);
        }
        if !extend_end {
            t = t.min(len);
        }
        let foot = a + dir * t;
        let rel = p - foot;
        let distance = rel.norm();
        let side = dir.cross(rel);
        Projection {
            s: self.arc[k] + t,
            d: if side < 0.0 { -distance } else { distance },
            distance,
            point: foot,
            segment: k,
        }
    }

    fn project_impl(&self, p: Vec2, extend: bool) -> Projection {
        let last = self.segment_count() - 1;
        let mut best = self.project_segment(0, p, extend, extend && last == 0);
        for k in 1..=last {
            let cand = self.project_segment(k, p, false, extend && k == last);
            // strict improvement only: ties keep the smaller arc length
            if cand.distance < best.distance - 1e-12 {
                best = cand;
            }
        }
        best
    }

    /// Nearest point on the polyline. Ties resolve to the smaller arc length.
    pub fn project(&self, p: Vec2) -> Projection {
        self.project_impl(p, false)
    }

    /// Like [`Polyline::project`] but treating the first and last segments as
    /// rays, so points before the start get `s < 0` and points past the end
    /// get `s > length`.
    pub fn project_extended(&self, p: Vec2) -> Projection {
        self.project_impl(p, true)
    }

    pub fn distance_to(&self, p: Vec2) -> f64 {
        self.project(p).distance
    }

    pub fn reversed(&self) -> Polyline {
        let mut pts = self.points.clone();
        pts.reverse();
        Polyline::new(pts).expect("reversal preserves validity")
    }

    /// Applies a map to every vertex; fails if the map collapses a segment.
    pub fn map_points(&self, mut f: impl FnMut(Vec2) -> Vec2) -> Result<Polyline> {
        Polyline::new(self.points.iter().map(|&p| f(p)).collect())
    }

    /// True if two non-adjacent segments intersect.
    pub fn self_intersects(&self) -> bool {
        let n = self.segment_count();
        for i in 0..n {
            for j in (i + 2)..n {
                if segments_intersect(
                    self.points[i],
                    self.points[i + 1],
                    self.points[j],
                    self.points[j + 1],
                ) {
                    return true;
                }
            }
        }
        false
    }

    /// Discrete curvature magnitude at each interior vertex (circumscribed circle).
    pub fn curvatures(&self) -> Vec<f64> {
        self.points
            .windows(3)
            .map(|w| {
                let a = w[0].distance(w[1]);
                let b = w[1].distance(w[2]);
                let c = w[0].distance(w[2]);
                let area2 = (w[1] - w[0]).cross(w[2] - w[0]).abs();
                if a * b * c <= 0.0 {
                    0.0
                } else {
                    2.0 * area2 / (a * b * c)
                }
            })
            .collect()
    }

    /// Douglas–Peucker simplification keeping both end points.
    pub fn simplify(&self, tolerance: f64) -> Polyline {
        let n = self.points.len();
        let mut keep = vec![false; n];
        keep[0] = true;
        keep[n - 1] = true;
        let mut stack = vec![(0usize, n - 1)];
        while let Some((lo, hi)) = stack.pop() {
            if hi <= lo + 1 {
                continue;
            }
            let (a, b) = (self.points[lo], self.points[hi]);
            let (mut worst, mut worst_d) = (lo, -1.0);
            for k in lo + 1..hi {
                let d = point_segment_distance(self.points[k], a, b);
                if d > worst_d {
                    worst = k;
                    worst_d = d;
                }
            }
            if worst_d > tolerance {
                keep[worst] = true;
                stack.push((lo, worst));
                stack.push((worst, hi));
            }
        }
        let pts: Vec<Vec2> = self
            .points
            .iter()
            .zip(&keep)
            .filter_map(|(&p, &k)| k.then_some(p))
            .collect();
        Polyline::new(pts).expect("subset of a valid polyline with distinct endpoints")
    }
}

/// Distance from `p` to the closed segment `ab`.
pub fn point_segment_distance(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 <= 0.0 {
        return p.distance(a);
    }
    let t = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
    p.distance(a + ab * t)
}

/// Parameters `(t, u)` of the proper intersection `p + t·r = q + u·s`, if the
/// supporting lines are not parallel.
pub fn line_intersection(p: Vec2, p2: Vec2, q: Vec2, q2: Vec2) -> Option<(f64, f64)> {
    let r = p2 - p;
    let s = q2 - q;
    let denom = r.cross(s);
    if denom.abs() < 1e-15 * (r.norm() * s.norm()).max(1e-300) {
        return None;
    }
    let qp = q - p;
    Some((qp.cross(s) / denom, qp.cross(r) / denom))
}

/// Closed-segment intersection test (collinear overlaps count).
pub fn segments_intersect(a: Vec2, b: Vec2, c: Vec2, d: Vec2) -> bool {
    let o1 = (b - a).cross(c - a);
    let o2 = (b - a).cross(d - a);
    let o3 = (d - c).cross(a - c);
    let o4 = (d - c).cross(b - c);
    if o1 * o2 < 0.0 && o3 * o4 < 0.0 {
        return true;
    }
    let on = |p: Vec2, q: Vec2, r: Vec2, o: f64| {
        o == 0.0
            && r.x >= p.x.min(q.x)
            && r.x <= p.x.max(q.x)
            && r.y >= p.y.min(q.y)
            && r.y <= p.y.max(q.y)
    };
    on(a, b, c, o1) || on(a, b, d, o2) || on(c, d, a, o3) || on(c, d, b, o4)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(pts: &[(f64, f64)]) -> Polyline {
        Polyline::new(pts.iter().map(|&p| p.into()).collect()).unwrap()
    }

    #[test]
    fn rejects_degenerate() {
        assert!(Polyline::new(vec![Vec2::ZERO]).is_err());
        assert!(Polyline::new(vec![Vec2::ZERO, Vec2::ZERO]).is_err());
        let p =
            Polyline::from_points_dedup(vec![Vec2::ZERO, Vec2::ZERO, Vec2::new(1.0, 0.0)]).unwrap();
        assert_eq!(p.len(), 2);
    }

    #[test]
    fn arc_length_and_interpolation() {
        let p = line(&[(0.0, 0.0), (3.0, 0.0), (3.0, 4.0)]);
        assert_eq!(p.length(), 7.0);
        assert_eq!(p.point_at(5.0), Vec2::new(3.0, 2.0));
        assert_eq!(p.tangent_at(1.0), Vec2::new(1.0, 0.0));
        assert_eq!(p.tangent_at(3.5), Vec2::new(0.0, 1.0));
        assert_eq!(p.point_at(-1.0), Vec2::new(-1.0, 0.0));
    }

    #[test]
    fn sampling_keeps_endpoint() {
        let p = line(&[(0.0, 0.0), (31.0, 0.0)]);
        let s = p.sample_arc_lengths(3.0);
        assert_eq!(s.len(), 12);
        assert_eq!(*s.last().unwrap(), 31.0);
        let p = line(&[(0.0, 0.0), (30.0, 0.0)]);
        assert_eq!(p.sample_arc_lengths(3.0).len(), 11);
    }

    #[test]
    fn projection_sign_and_ties() {
        let p = line(&[(0.0, 0.0), (10.0, 0.0)]);
        let pr = p.project(Vec2::new(5.0, 2.0));
        assert_eq!((pr.s, pr.d), (5.0, 2.0));
        let pr = p.project(Vec2::new(5.0, -2.0));
        assert_eq!((pr.s, pr.d), (5.0, -2.0));
        // equidistant from both legs of a V: smaller s wins
        let v = line(&[(-1.0, 1.0), (0.0, 0.0), (1.0, 1.0)]);
        let pr = v.project(Vec2::new(0.0, 1.0));
        assert_eq!(pr.segment, 0);
    }

    #[test]
    fn extended_projection() {
        let p = line(&[(0.0, 0.0), (10.0, 0.0)]);
        assert_eq!(p.project_extended(Vec2::new(-2.0, 1.0)).s, -2.0);
        assert_eq!(p.project_extended(Vec2::new(12.0, 1.0)).s, 12.0);
        assert_eq!(p.project(Vec2::new(12.0, 0.0)).s, 10.0);
    }

    #[test]
    fn simplify_collinear() {
        let p = Polyline::new((0..=10).map(|k| Vec2::new(k as f64, 0.0)).collect()).unwrap();
        assert_eq!(p.simplify(0.01).len(), 2);
    }

    #[test]
    fn self_intersection() {
        assert!(line(&[(0.0, 0.0), (2.0, 0.0), (1.0, 1.0), (1.0, -1.0)]).self_intersects());
        assert!(!line(&[(0.0, 0.0), (2.0, 0.0), (2.0, 2.0)]).self_intersects());
    }

    #[test]
    fn curvature_of_circle() {
        let r = 10.0;
        let pts = (0..50)
            .map(|k| Vec2::from_angle(k as f64 * 0.02) * r)
            .collect();
        let p = Polyline::new(pts).unwrap();
        for c in p.curvatures() {
            assert!((c - 0.1).abs() < 1e-9);
        }
    }
}
