use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::{Polygon, Pose2, Vec2};
use crate::error::{Error, Result};

/// Tolerance for the inclusive cell-center-in-shape convention.
const BOUNDARY_EPS: f64 = 1e-9;

/// Tracked-object bounding box.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrientedBox {
    pub pose: Pose2,
    pub length: f64,
    pub width: f64,
}

impl OrientedBox {
    pub fn new(pose: Pose2, length: f64, width: f64) -> Result<Self> {
        if !(width > 0.0 && length >= width && length.is_finite()) {
            return Err(Error::InvalidGeometry(format!(
                "box needs length >= width > 0, got {length} x {width}"
            )));
        }
        Ok(Self {
            pose,
            length,
            width,
        })
    }

    #[inline]
    pub fn center(&self) -> Vec2 {
        self.pose.position()
    }

    /// Inclusive containment in the box's local frame.
    pub fn contains(&self, p: Vec2) -> bool {
        let local = (p - self.center()).rotate(-self.pose.theta);
        local.x.abs() <= self.length / 2.0 + BOUNDARY_EPS
            && local.y.abs() <= self.width / 2.0 + BOUNDARY_EPS
    }

    /// Corners in counterclockwise order starting at rear-right.
    pub fn corners(&self) -> [Vec2; 4] {
        let c = self.center();
        let f = self.pose.heading() * (self.length / 2.0);
        let l = self.pose.heading().perp() * (self.width / 2.0);
        [c - f - l, c + f - l, c + f + l, c - f + l]
    }

    pub fn area(&self) -> f64 {
        self.length * self.width
    }

    pub fn perimeter(&self) -> f64 {
        2.0 * (self.length + self.width)
    }
}

/// Integer grid cell; `i` counts along +x, `j` along +y.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CellIndex {
    pub i: i32,
    pub j: i32,
}

impl CellIndex {
    #[inline]
    pub const fn new(i: i32, j: i32) -> Self {
        Self { i, j }
    }

    /// The 8-connected neighbors with their unit-cell step vectors.
    pub fn neighbors8(self) -> impl Iterator<Item = (CellIndex, (i32, i32))> {
        const STEPS: [(i32, i32); 8] = [
            (1, 0),
            (1, 1),
            (0, 1),
            (-1, 1),
            (-1, 0),
            (-1, -1),
            (0, -1),
            (1, -1),
        ];
        STEPS
            .into_iter()
            .map(move |(di, dj)| (CellIndex::new(self.i + di, self.j + dj), (di, dj)))
    }
}

/// Placement of a regular square grid in the plane. Cell `(i, j)` covers
/// `origin + [i, i+1)·r × [j, j+1)·r`; its center sits at the half offsets.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridFrame {
    pub origin: Vec2,
    pub resolution: f64,
}

impl GridFrame {
    pub fn new(origin: Vec2, resolution: f64) -> Result<Self> {
        if !(resolution > 0.0 && resolution.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "grid resolution must be positive, got {resolution}"
            )));
        }
        Ok(Self { origin, resolution })
    }

    /// Grid anchored at the coordinate origin.
    pub fn with_resolution(resolution: f64) -> Result<Self> {
        Self::new(Vec2::ZERO, resolution)
    }

    #[inline]
    pub fn cell_center(&self, c: CellIndex) -> Vec2 {
        Vec2::new(
            self.origin.x + (c.i as f64 + 0.5) * self.resolution,
            self.origin.y + (c.j as f64 + 0.5) * self.resolution,
        )
    }

    #[inline]
    pub fn cell_of(&self, p: Vec2) -> CellIndex {
        CellIndex::new(
            ((p.x - self.origin.x) / self.resolution).floor() as i32,
            ((p.y - self.origin.y) / self.resolution).floor() as i32,
        )
    }

    /// Cells whose centers fall inside the axis-aligned range `[lo, hi]`.
    fn center_range(&self, lo: Vec2, hi: Vec2) -> (i32, i32, i32, i32) {
        let r = self.resolution;
        let i0 = ((lo.x - self.origin.x) / r - 0.5 - BOUNDARY_EPS).ceil() as i32;
        let i1 = ((hi.x - self.origin.x) / r - 0.5 + BOUNDARY_EPS).floor() as i32;
        let j0 = ((lo.y - self.origin.y) / r - 0.5 - BOUNDARY_EPS).ceil() as i32;
        let j1 = ((hi.y - self.origin.y) / r - 0.5 + BOUNDARY_EPS).floor() as i32;
        (i0, i1, j0, j1)
    }

    /// Cells whose centers lie inside the box (boundary inclusive), row-major.
    pub fn rasterize_box(&self, b: &OrientedBox) -> Vec<CellIndex> {
        let mut out = Vec::new();
        self.for_each_box_cell(b, |c| out.push(c));
        out
    }

    pub(crate) fn for_each_box_cell(&self, b: &OrientedBox, mut f: impl FnMut(CellIndex)) {
        let corners = b.corners();
        let mut lo = corners[0];
        let mut hi = corners[0];
        for c in &corners[1..] {
            lo = Vec2::new(lo.x.min(c.x), lo.y.min(c.y));
            hi = Vec2::new(hi.x.max(c.x), hi.y.max(c.y));
        }
        let (i0, i1, j0, j1) = self.center_range(lo, hi);
        for j in j0..=j1 {
            for i in i0..=i1 {
                let c = CellIndex::new(i, j);
                if b.contains(self.cell_center(c)) {
                    f(c);
                }
            }
        }
    }

    /// Cells whose centers are within `inflation` of the polygon region.
    pub fn rasterize_polygon(&self, polygon: &Polygon, inflation: f64) -> Vec<CellIndex> {
        let (lo, hi) = polygon.bounds();
        let pad = Vec2::new(inflation, inflation);
        let (i0, i1, j0, j1) = self.center_range(lo - pad, hi + pad);
        let mut out = Vec::new();
        for j in j0..=j1 {
            for i in i0..=i1 {
                let c = CellIndex::new(i, j);
                let p = self.cell_center(c);
                if polygon.contains(p) || polygon.boundary_distance(p) <= inflation + BOUNDARY_EPS {
                    out.push(c);
                }
            }
        }
        out
    }
}

/// Cells of a grid anchored at the origin whose centers lie inside `b`.
pub fn rasterize_box(b: &OrientedBox, resolution: f64) -> Result<Vec<CellIndex>> {
    Ok(GridFrame::with_resolution(resolution)?.rasterize_box(b))
}

/// Sparse set of occupied cells.
#[derive(Clone, Debug)]
pub struct OccupancyGrid {
    frame: GridFrame,
    occupied: HashSet<CellIndex>,
}

impl OccupancyGrid {
    pub fn empty(frame: GridFrame) -> Self {
        Self {
            frame,
            occupied: HashSet::new(),
        }
    }

    /// Marks every cell whose center is within `inflation` of any obstacle.
    pub fn from_obstacles(frame: GridFrame, obstacles: &[Polygon], inflation: f64) -> Result<Self> {
        if !(inflation >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "obstacle inflation must be >= 0, got {inflation}"
            )));
        }
        let occupied = obstacles
            .iter()
            .flat_map(|p| frame.rasterize_polygon(p, inflation))
            .collect();
        Ok(Self { frame, occupied })
    }

    #[inline]
    pub fn frame(&self) -> &GridFrame {
        &self.frame
    }

    #[inline]
    pub fn is_occupied(&self, c: CellIndex) -> bool {
        self.occupied.contains(&c)
    }

    pub fn occupied_count(&self) -> usize {
        self.occupied.len()
    }

    pub fn is_empty(&self) -> bool {
        self.occupied.is_empty()
    }

    pub fn cells(&self) -> impl Iterator<Item = &CellIndex> {
        self.occupied.iter()
    }

    /// True if any cell covered by the box is occupied.
    pub fn collides(&self, b: &OrientedBox) -> bool {
        if self.occupied.is_empty() {
            return false;
        }
        let mut hit = false;
        self.frame
            .for_each_box_cell(b, |c| hit |= self.occupied.contains(&c));
        hit
    }
}
