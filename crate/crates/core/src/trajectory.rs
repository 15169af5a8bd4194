//! Trace assembly from tracking logs and quality filtering against an ROI.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    normalize_angle, GridFrame, OccupancyGrid, OrientedBox, Polygon, Pose2, Vec2,
};
use crate::roi::RoiSpec;

/// One tracking result, as found in the line-delimited trajectory log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogRecord {
    pub t: f64,
    pub id: String,
    pub x: f64,
    pub y: f64,
    pub theta: f64,
    pub l: f64,
    pub w: f64,
}

impl LogRecord {
    pub fn to_box(&self) -> Result<OrientedBox> {
        OrientedBox::new(Pose2::new(self.x, self.y, self.theta), self.l, self.w).map_err(|e| {
            Error::MalformedRecord {
                id: self.id.clone(),
                reason: e.to_string(),
            }
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceSample {
    pub t: f64,
    pub bbox: OrientedBox,
}

impl TraceSample {
    #[inline]
    pub fn center(&self) -> Vec2 {
        self.bbox.center()
    }

    #[inline]
    pub fn heading(&self) -> Vec2 {
        self.bbox.pose.heading()
    }
}

/// All tracked boxes of one vehicle, in time order.
#[derive(Clone, Debug, PartialEq)]
pub struct Trace {
    vehicle_id: String,
    samples: Vec<TraceSample>,
}

impl Trace {
    pub fn new(vehicle_id: impl Into<String>, samples: Vec<TraceSample>) -> Result<Self> {
        let vehicle_id = vehicle_id.into();
        if samples.len() < 2 {
            return Err(Error::MalformedRecord {
                id: vehicle_id,
                reason: format!("a trace needs at least 2 samples, got {}", samples.len()),
            });
        }
        if let Some(w) = samples.windows(2).find(|w| !(w[1].t > w[0].t)) {
            return Err(Error::MalformedRecord {
                id: vehicle_id,
                reason: format!(
                    "timestamps not strictly increasing ({} then {})",
                    w[0].t, w[1].t
                ),
            });
        }
        Ok(Self {
            vehicle_id,
            samples,
        })
    }

    #[inline]
    pub fn id(&self) -> &str {
        &self.vehicle_id
    }

    #[inline]
    pub fn samples(&self) -> &[TraceSample] {
        &self.samples
    }

    pub fn lifetime(&self) -> f64 {
        self.samples.last().unwrap().t - self.samples[0].t
    }

    /// Path length of the box centers.
    pub fn travel_distance(&self) -> f64 {
        self.samples
            .windows(2)
            .map(|w| w[0].center().distance(w[1].center()))
            .sum()
    }

    /// Largest heading rate over windows of at least `window` seconds.
    pub fn max_heading_rate(&self, window: f64) -> f64 {
        let s = &self.samples;
        let mut worst: f64 = 0.0;
        let mut j = 0;
        for i in 0..s.len() {
            j = j.max(i + 1);
            while j < s.len() && s[j].t - s[i].t < window {
                j += 1;
            }
            // traces shorter than one window use their end points
            let k = if j < s.len() {
                j
            } else if i == 0 {
                s.len() - 1
            } else {
                break;
            };
            let dtheta = normalize_angle(s[k].bbox.pose.theta - s[i].bbox.pose.theta).abs();
            worst = worst.max(dtheta / (s[k].t - s[i].t));
        }
        worst
    }

    pub fn centers(&self) -> impl Iterator<Item = Vec2> + '_ {
        self.samples.iter().map(|s| s.center())
    }
}

/// Entry/exit information attached to a trace that passed filtering.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceMeta {
    pub entry_edge: usize,
    pub exit_edge: usize,
    /// Crossing of the center trajectory with the entry edge.
    pub start_point: Vec2,
    /// Crossing of the center trajectory with the exit edge.
    pub end_point: Vec2,
    /// Entry and exit through the same edge.
    #[serde(default)]
    pub u_turn: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceEntry {
    pub trace: Trace,
    pub meta: Option<TraceMeta>,
}

/// Traces keyed by unique vehicle id, kept in insertion order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TraceSet {
    entries: Vec<TraceEntry>,
    index: HashMap<String, usize>,
}

impl TraceSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, trace: Trace, meta: Option<TraceMeta>) -> Result<()> {
        if self.index.contains_key(trace.id()) {
            return Err(Error::MalformedRecord {
                id: trace.id().to_string(),
                reason: "duplicate vehicle id in trace set".into(),
            });
        }
        self.index
            .insert(trace.id().to_string(), self.entries.len());
        self.entries.push(TraceEntry { trace, meta });
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<&TraceEntry> {
        self.index.get(id).map(|&k| &self.entries[k])
    }

    pub fn contains(&self, id: &str) -> bool {
        self.index.contains_key(id)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, TraceEntry> {
        self.entries.iter()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.trace.id())
    }

    /// Subset with the given ids, in the order given.
    pub fn select<'a>(&self, ids: impl IntoIterator<Item = &'a str>) -> TraceSet {
        let mut out = TraceSet::new();
        for id in ids {
            if let Some(e) = self.get(id) {
                // ids are unique in self; a repeated id in the request is skipped
                let _ = out.insert(e.trace.clone(), e.meta);
            }
        }
        out
    }
}

impl FromIterator<TraceEntry> for TraceSet {
    /// Later duplicates of an id are dropped.
    fn from_iter<I: IntoIterator<Item = TraceEntry>>(iter: I) -> Self {
        let mut out = TraceSet::new();
        for e in iter {
            let _ = out.insert(e.trace, e.meta);
        }
        out
    }
}

impl<'a> IntoIterator for &'a TraceSet {
    type Item = &'a TraceEntry;
    type IntoIter = std::slice::Iter<'a, TraceEntry>;
    fn into_iter(self) -> Self::IntoIter {
        self.entries.iter()
    }
}

/// Groups log records by vehicle id into time-ordered traces.
///
/// Records of one id must arrive with strictly increasing timestamps. Ids
/// with a single record cannot form a trace and are skipped. Output is
/// ordered by vehicle id.
pub fn assemble_traces(log: impl IntoIterator<Item = LogRecord>) -> Result<TraceSet> {
    let mut by_id: BTreeMap<String, Vec<TraceSample>> = BTreeMap::new();
    for rec in log {
        let bbox = rec.to_box()?;
        let samples = by_id.entry(rec.id.clone()).or_default();
        if let Some(last) = samples.last() {
            if !(rec.t > last.t) {
                return Err(Error::MalformedRecord {
                    id: rec.id,
                    reason: format!("timestamp {} does not follow {}", rec.t, last.t),
                });
            }
        }
        samples.push(TraceSample { t: rec.t, bbox });
    }
    let mut set = TraceSet::new();
    for (id, samples) in by_id {
        if samples.len() < 2 {
            log::warn!("skipping vehicle {id}: single tracking record");
            continue;
        }
        set.insert(Trace::new(id, samples)?, None)?;
    }
    Ok(set)
}

/// Thresholds for trace quality filtering.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FilterConfig {
    /// Minimum tracked duration, seconds.
    pub min_lifetime: f64,
    /// Minimum center path length, meters.
    pub min_travel: f64,
    /// Maximum heading rate, rad/s, before a trace counts as drifting.
    pub max_heading_rate: f64,
    /// Window over which the heading rate is measured, seconds.
    pub heading_window: f64,
    /// Minimum depth the center path must reach inside the ROI, meters.
    pub min_penetration: f64,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            min_lifetime: 4.0,
            min_travel: 10.0,
            max_heading_rate: 1.2,
            heading_window: 0.5,
            min_penetration: 2.0,
        }
    }
}

impl FilterConfig {
    pub fn validate(&self) -> Result<()> {
        let checks = [
            ("min_lifetime", self.min_lifetime),
            ("min_travel", self.min_travel),
            ("max_heading_rate", self.max_heading_rate),
            ("heading_window", self.heading_window),
            ("min_penetration", self.min_penetration),
        ];
        for (name, v) in checks {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidConfig(format!(
                    "filter.{name} must be positive, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Primary reason a trace was rejected; criteria are checked in this order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RejectReason {
    ShortLifetime,
    ShortTravel,
    Drift,
    Collision,
    NoClearEntryExit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rejection {
    pub id: String,
    pub reason: RejectReason,
}

#[derive(Clone, Debug, Default)]
pub struct FilterOutcome {
    /// Surviving traces with meta attached, in input order.
    pub kept: TraceSet,
    pub rejected: Vec<Rejection>,
}

/// Entry/exit crossings of the center path, or `None` when the trace does
/// not enter and leave the ROI exactly once with enough penetration.
pub fn entry_exit_meta(
    trace: &Trace,
    polygon: &Polygon,
    min_penetration: f64,
) -> Option<TraceMeta> {
    let centers: Vec<Vec2> = trace.centers().collect();
    let mut crossings = Vec::new();
    let mut crossing_sample = Vec::new();
    for (k, w) in centers.windows(2).enumerate() {
        if w[0] == w[1] {
            continue;
        }
        for c in polygon.crossings(w[0], w[1]) {
            crossings.push(c);
            crossing_sample.push(k);
        }
        if crossings.len() > 2 {
            return None;
        }
    }
    if crossings.len() != 2 || !crossings[0].inward || crossings[1].inward {
        return None;
    }
    let inside = &centers[crossing_sample[0] + 1..=crossing_sample[1]];
    let depth = inside
        .iter()
        .map(|&p| polygon.boundary_distance(p))
        .fold(0.0, f64::max);
    if depth < min_penetration {
        return None;
    }
    Some(TraceMeta {
        entry_edge: crossings[0].edge,
        exit_edge: crossings[1].edge,
        start_point: crossings[0].point,
        end_point: crossings[1].point,
        u_turn: crossings[0].edge == crossings[1].edge,
    })
}

/// Checks one trace against every criterion, returning meta or the first failure.
pub fn evaluate_trace(
    trace: &Trace,
    roi: &RoiSpec,
    cfg: &FilterConfig,
    obstacles: &OccupancyGrid,
) -> std::result::Result<TraceMeta, RejectReason> {
    if trace.lifetime() < cfg.min_lifetime {
        return Err(RejectReason::ShortLifetime);
    }
    if trace.travel_distance() < cfg.min_travel {
        return Err(RejectReason::ShortTravel);
    }
    if trace.max_heading_rate(cfg.heading_window) > cfg.max_heading_rate {
        return Err(RejectReason::Drift);
    }
    if trace.samples().iter().any(|s| obstacles.collides(&s.bbox)) {
        return Err(RejectReason::Collision);
    }
    entry_exit_meta(trace, roi.polygon(), cfg.min_penetration).ok_or(RejectReason::NoClearEntryExit)
}

/// Keeps high-quality traces with a clear ROI entry and exit.
pub fn filter_traces(
    traces: &TraceSet,
    roi: &RoiSpec,
    cfg: &FilterConfig,
    obstacles: &OccupancyGrid,
) -> FilterOutcome {
    let verdicts: Vec<_> = traces
        .entries
        .par_iter()
        .map(|e| evaluate_trace(&e.trace, roi, cfg, obstacles))
        .collect();
    let mut out = FilterOutcome::default();
    for (e, v) in traces.iter().zip(verdicts) {
        match v {
            Ok(meta) => out
                .kept
                .insert(e.trace.clone(), Some(meta))
                .expect("ids unique in the input set"),
            Err(reason) => out.rejected.push(Rejection {
                id: e.trace.id().to_string(),
                reason,
            }),
        }
    }
    out
}

/// Nominal passenger-car width, meters.
pub const VEHICLE_WIDTH: f64 = 1.8;

/// Rasterization of static obstacles for the collision check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ObstacleConfig {
    pub resolution: f64,
    /// Obstacle growth, half a vehicle width by default.
    pub inflation: f64,
}

impl Default for ObstacleConfig {
    fn default() -> Self {
        Self {
            resolution: 0.2,
            inflation: VEHICLE_WIDTH / 2.0,
        }
    }
}

impl ObstacleConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.resolution > 0.0 && self.resolution.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "obstacles.resolution must be positive, got {}",
                self.resolution
            )));
        }
        if !(self.inflation >= 0.0 && self.inflation.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "obstacles.inflation must be non-negative, got {}",
                self.inflation
            )));
        }
        Ok(())
    }

    pub fn build(&self, obstacles: &[Polygon]) -> Result<OccupancyGrid> {
        self.validate()?;
        build_obstacle_grid(obstacles, self.resolution, self.inflation)
    }
}

/// Occupancy grid of static obstacles, inflated by `inflation` meters.
pub fn build_obstacle_grid(
    obstacles: &[Polygon],
    resolution: f64,
    inflation: f64,
) -> Result<OccupancyGrid> {
    OccupancyGrid::from_obstacles(
        GridFrame::with_resolution(resolution)?,
        obstacles,
        inflation,
    )
}
