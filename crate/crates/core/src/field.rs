//! Multi-channel traffic flow fields: per-cell trace density and mean flow
//! direction, a FIFO-bounded store per ROI, and divergence from a reference map.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::io::{BufRead, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{CellIndex, GridFrame, Polyline, Vec2};
use crate::grouping::{
    build_partition, refine_roi_edges, Channel, ChannelPartition, EntryPoint, GoalPair,
    GroupingConfig,
};
use crate::roi::{RoiEdge, RoiSpec};
use crate::trajectory::{Trace, TraceEntry, TraceSet};

/// Default field resolution, meters.
pub const DEFAULT_RESOLUTION: f64 = 0.2;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FieldConfig {
    pub resolution: f64,
    /// Traces kept per ROI before the oldest are evicted.
    pub fifo_capacity: usize,
}

impl Default for FieldConfig {
    fn default() -> Self {
        Self {
            resolution: DEFAULT_RESOLUTION,
            fifo_capacity: 200,
        }
    }
}

impl FieldConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.resolution > 0.0 && self.resolution.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "field.resolution must be positive, got {}",
                self.resolution
            )));
        }
        if self.fifo_capacity == 0 {
            return Err(Error::InvalidConfig(
                "field.fifo_capacity must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Density (distinct traces covering the cell) and unit mean direction.
/// Stored cells always have `density > 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldCell {
    pub density: u32,
    pub direction: Vec2,
}

/// One channel layer of the field.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelField {
    pub id: u32,
    pub goal: GoalPair,
    pub entry: EntryPoint,
    pub entry_edge: RoiEdge,
    pub exit_edge: RoiEdge,
    cells: BTreeMap<CellIndex, FieldCell>,
}

impl ChannelField {
    pub fn new(channel: &Channel, cells: BTreeMap<CellIndex, FieldCell>) -> Self {
        Self {
            id: channel.id,
            goal: channel.goal,
            entry: channel.entry,
            entry_edge: channel.entry_edge,
            exit_edge: channel.exit_edge,
            cells,
        }
    }

    #[inline]
    pub fn cell(&self, c: CellIndex) -> Option<&FieldCell> {
        self.cells.get(&c)
    }

    #[inline]
    pub fn density(&self, c: CellIndex) -> u32 {
        self.cells.get(&c).map_or(0, |f| f.density)
    }

    pub fn cells(&self) -> impl Iterator<Item = (&CellIndex, &FieldCell)> {
        self.cells.iter()
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn max_density(&self) -> u32 {
        self.cells.values().map(|c| c.density).max().unwrap_or(0)
    }
}

/// Multi-channel sparse grid sharing one frame.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowField {
    frame: GridFrame,
    channels: Vec<ChannelField>,
}

impl FlowField {
    pub fn new(frame: GridFrame, channels: Vec<ChannelField>) -> Self {
        Self { frame, channels }
    }

    #[inline]
    pub fn frame(&self) -> &GridFrame {
        &self.frame
    }

    #[inline]
    pub fn channels(&self) -> &[ChannelField] {
        &self.channels
    }

    pub fn channel(&self, id: u32) -> Option<&ChannelField> {
        self.channels.iter().find(|c| c.id == id)
    }

    pub fn total_cells(&self) -> usize {
        self.channels.iter().map(|c| c.len()).sum()
    }

    /// Inclusive `(min, max)` cell bounds over all channels.
    pub fn window(&self) -> Option<(CellIndex, CellIndex)> {
        let mut it = self.channels.iter().flat_map(|c| c.cells.keys());
        let first = *it.next()?;
        let (lo, hi) = it.fold((first, first), |(lo, hi), c| {
            (
                CellIndex::new(lo.i.min(c.i), lo.j.min(c.j)),
                CellIndex::new(hi.i.max(c.i), hi.j.max(c.j)),
            )
        });
        Some((lo, hi))
    }
}

/// Per-cell sum of sample headings over the union of a trace's box footprints.
/// The first heading seen in each cell is kept as a fallback direction.
pub fn trace_footprint(trace: &Trace, frame: &GridFrame) -> HashMap<CellIndex, (Vec2, Vec2)> {
    let mut cells: HashMap<CellIndex, (Vec2, Vec2)> = HashMap::new();
    for s in trace.samples() {
        let h = s.heading();
        frame.for_each_box_cell(&s.bbox, |c| {
            cells.entry(c).and_modify(|e| e.0 += h).or_insert((h, h));
        });
    }
    cells
}

/// Mean of `sum`, or `fallback` when the contributions cancel.
fn mean_direction(sum: Vec2, fallback: Vec2) -> Vec2 {
    sum.normalized().unwrap_or(fallback)
}

fn synthesize_channel(channel: &Channel, traces: &TraceSet, frame: &GridFrame) -> ChannelField {
    // (density, sum of per-trace directions, first per-trace direction)
    let mut acc: BTreeMap<CellIndex, (u32, Vec2, Vec2)> = BTreeMap::new();
    for id in &channel.members {
        let Some(e) = traces.get(id) else {
            log::warn!("channel {}: member {id} missing from trace set", channel.id);
            continue;
        };
        for (c, (sum, first)) in trace_footprint(&e.trace, frame) {
            let dir = mean_direction(sum, first);
            acc.entry(c)
                .and_modify(|a| {
                    a.0 += 1;
                    a.1 += dir;
                })
                .or_insert((1, dir, dir));
        }
    }
    let cells = acc
        .into_iter()
        .map(|(c, (density, sum, first))| {
            (
                c,
                FieldCell {
                    density,
                    direction: mean_direction(sum, first),
                },
            )
        })
        .collect();
    ChannelField::new(channel, cells)
}

/// Builds one field layer per channel. Each member trace contributes once
/// per covered cell, with its own mean heading over the samples covering it.
pub fn synthesize_field(
    partition: &ChannelPartition,
    traces: &TraceSet,
    frame: GridFrame,
) -> FlowField {
    let channels = partition
        .channels
        .par_iter()
        .map(|ch| synthesize_channel(ch, traces, &frame))
        .collect();
    FlowField::new(frame, channels)
}

/// Bounded FIFO of traces for one ROI, with partition and field rebuilt
/// from the queue after every update.
#[derive(Clone, Debug)]
pub struct RoiFlowStore {
    roi: RoiSpec,
    refined_roi: RoiSpec,
    capacity: usize,
    frame: GridFrame,
    grouping: GroupingConfig,
    queue: VecDeque<String>,
    traces: HashMap<String, TraceEntry>,
    partition: ChannelPartition,
    field: FlowField,
}

impl RoiFlowStore {
    pub fn new(
        roi: RoiSpec,
        capacity: usize,
        frame: GridFrame,
        grouping: GroupingConfig,
    ) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::InvalidConfig(
                "FIFO capacity must be at least 1".into(),
            ));
        }
        Ok(Self {
            refined_roi: roi.clone(),
            roi,
            capacity,
            frame,
            grouping,
            queue: VecDeque::new(),
            traces: HashMap::new(),
            partition: ChannelPartition::default(),
            field: FlowField::new(frame, Vec::new()),
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Queued vehicle ids, oldest first.
    pub fn queue(&self) -> impl Iterator<Item = &str> {
        self.queue.iter().map(|s| s.as_str())
    }

    pub fn len(&self) -> usize {
        self.queue.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queue.is_empty()
    }

    /// Queued traces in arrival order.
    pub fn queued_traces(&self) -> TraceSet {
        self.queue
            .iter()
            .map(|id| self.traces[id].clone())
            .collect()
    }

    pub fn field(&self) -> &FlowField {
        &self.field
    }

    pub fn partition(&self) -> &ChannelPartition {
        &self.partition
    }

    pub fn refined_roi(&self) -> &RoiSpec {
        &self.refined_roi
    }

    pub fn roi(&self) -> &RoiSpec {
        &self.roi
    }

    /// Appends new traces (a re-observed id moves to the back), evicts the
    /// oldest beyond capacity, then rebuilds partition and field.
    pub fn update_fifo(&mut self, new_traces: &TraceSet) -> Result<()> {
        for e in new_traces {
            if e.meta.is_none() {
                log::warn!("trace {} has no entry/exit meta, not queued", e.trace.id());
                continue;
            }
            let id = e.trace.id().to_string();
            if self.traces.insert(id.clone(), e.clone()).is_some() {
                self.queue.retain(|q| q != &id);
            }
            self.queue.push_back(id);
        }
        while self.queue.len() > self.capacity {
            let old = self.queue.pop_front().expect("queue longer than capacity");
            self.traces.remove(&old);
        }
        self.rebuild()
    }

    fn rebuild(&mut self) -> Result<()> {
        let queued = self.queued_traces();
        if queued.is_empty() {
            self.refined_roi = self.roi.clone();
            self.partition = ChannelPartition::default();
            self.field = FlowField::new(self.frame, Vec::new());
            return Ok(());
        }
        self.refined_roi = refine_roi_edges(&self.roi, &queued);
        self.partition = build_partition(&queued, &self.refined_roi, &self.grouping)?;
        self.field = synthesize_field(&self.partition, &queued, self.frame);
        Ok(())
    }
}

/// Thresholds for the map-update trigger.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChangeConfig {
    /// Minimum cell density to take part in the comparison.
    pub min_support: u32,
    /// Cells farther than this from every reference mismatch, meters.
    pub max_distance: f64,
    /// Cells whose direction deviates more than this from the reference mismatch, degrees.
    pub max_angle_deg: f64,
    /// Trigger when the divergence score exceeds this.
    pub trigger_score: f64,
}

impl Default for ChangeConfig {
    fn default() -> Self {
        Self {
            min_support: 3,
            max_distance: 1.5,
            max_angle_deg: 30.0,
            trigger_score: 0.2,
        }
    }
}

impl ChangeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.min_support == 0 || !(self.max_distance > 0.0) || !(self.max_angle_deg > 0.0) {
            return Err(Error::InvalidConfig(
                "change thresholds must be positive".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.trigger_score) {
            return Err(Error::InvalidConfig(format!(
                "change.trigger_score must lie in [0, 1], got {}",
                self.trigger_score
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelMismatch {
    pub channel: u32,
    pub cells: usize,
    pub distance_mismatches: usize,
    pub direction_mismatches: usize,
    pub score: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChangeReport {
    /// Density-weighted fraction of supported cells that disagree with the references.
    pub divergence_score: f64,
    pub triggered: bool,
    pub evaluated_cells: usize,
    pub mismatched_cells: usize,
    pub channels: Vec<ChannelMismatch>,
}

struct IndexedReference<'a> {
    line: &'a Polyline,
    lo: Vec2,
    hi: Vec2,
}

impl IndexedReference<'_> {
    fn bbox_distance(&self, p: Vec2) -> f64 {
        let dx = (self.lo.x - p.x).max(0.0).max(p.x - self.hi.x);
        let dy = (self.lo.y - p.y).max(0.0).max(p.y - self.hi.y);
        dx.hypot(dy)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum CellMatch {
    Agrees,
    TooFar,
    WrongDirection,
}

/// A cell agrees when some reference within `max_distance` also runs in its
/// direction. Where lanes cross, the nearest centerline alone may belong to
/// the crossing flow, so every close reference is considered.
fn match_cell(
    refs: &[IndexedReference<'_>],
    p: Vec2,
    dir: Vec2,
    max_distance: f64,
    cos_limit: f64,
) -> CellMatch {
    let mut close = false;
    for r in refs {
        if r.bbox_distance(p) > max_distance {
            continue;
        }
        let pr = r.line.project(p);
        if pr.distance > max_distance {
            continue;
        }
        close = true;
        if dir.dot(r.line.segment_direction(pr.segment)) >= cos_limit {
            return CellMatch::Agrees;
        }
    }
    if close {
        CellMatch::WrongDirection
    } else {
        CellMatch::TooFar
    }
}

/// Compares supported field cells with reference centerlines.
pub fn detect_change(
    field: &FlowField,
    references: &[Polyline],
    cfg: &ChangeConfig,
) -> Result<ChangeReport> {
    let refs: Vec<IndexedReference<'_>> = references
        .iter()
        .map(|line| {
            let (mut lo, mut hi) = (line.start(), line.start());
            for p in line.points() {
                lo = Vec2::new(lo.x.min(p.x), lo.y.min(p.y));
                hi = Vec2::new(hi.x.max(p.x), hi.y.max(p.y));
            }
            IndexedReference { line, lo, hi }
        })
        .collect();
    let cos_limit = cfg.max_angle_deg.to_radians().cos();
    let frame = field.frame();

    let per_channel: Vec<(ChannelMismatch, f64, f64)> = field
        .channels()
        .par_iter()
        .map(|ch| {
            let mut m = ChannelMismatch {
                channel: ch.id,
                cells: 0,
                distance_mismatches: 0,
                direction_mismatches: 0,
                score: 0.0,
            };
            let (mut total, mut bad) = (0.0, 0.0);
            for (&c, cell) in ch.cells() {
                if cell.density < cfg.min_support {
                    continue;
                }
                m.cells += 1;
                let w = cell.density as f64;
                total += w;
                let mismatch = match match_cell(
                    &refs,
                    frame.cell_center(c),
                    cell.direction,
                    cfg.max_distance,
                    cos_limit,
                ) {
                    CellMatch::Agrees => false,
                    CellMatch::TooFar => {
                        m.distance_mismatches += 1;
                        true
                    }
                    CellMatch::WrongDirection => {
                        m.direction_mismatches += 1;
                        true
                    }
                };
                if mismatch {
                    bad += w;
                }
            }
            m.score = if total > 0.0 { bad / total } else { 0.0 };
            (m, total, bad)
        })
        .collect();

    let total: f64 = per_channel.iter().map(|x| x.1).sum();
    if total <= 0.0 {
        return Err(Error::EmptyField);
    }
    let bad: f64 = per_channel.iter().map(|x| x.2).sum();
    let score = bad / total;
    let channels: Vec<ChannelMismatch> = per_channel.into_iter().map(|x| x.0).collect();
    Ok(ChangeReport {
        divergence_score: score,
        triggered: score > cfg.trigger_score,
        evaluated_cells: channels.iter().map(|c| c.cells).sum(),
        mismatched_cells: channels
            .iter()
            .map(|c| c.distance_mismatches + c.direction_mismatches)
            .sum(),
        channels,
    })
}

const FIELD_MAGIC: &str = "# flowpath field v1";

fn edge_tokens(e: &RoiEdge) -> String {
    format!(
        "{} {} {} {} {}",
        e.a.x, e.a.y, e.b.x, e.b.y, e.refined as u8
    )
}

/// Writes the sparse text format: a header (origin, resolution, window,
/// channel table) then `index density dx dy` per stored cell, where `index`
/// is row-major over the window.
pub fn write_field<W: Write>(mut w: W, field: &FlowField) -> Result<()> {
    let (lo, hi) = field
        .window()
        .unwrap_or((CellIndex::new(0, 0), CellIndex::new(0, 0)));
    let width = (hi.i - lo.i + 1) as i64;
    let height = (hi.j - lo.j + 1) as i64;
    writeln!(w, "{FIELD_MAGIC}")?;
    writeln!(
        w,
        "origin {} {}",
        field.frame.origin.x, field.frame.origin.y
    )?;
    writeln!(w, "resolution {}", field.frame.resolution)?;
    writeln!(w, "window {} {} {} {}", lo.i, lo.j, width, height)?;
    writeln!(w, "channels {}", field.channels.len())?;
    for ch in &field.channels {
        writeln!(
            w,
            "channel {} {} {} {} {} {} {} {} {} {}",
            ch.id,
            ch.goal.g_in,
            ch.goal.g_out,
            ch.entry.position.x,
            ch.entry.position.y,
            ch.entry.lateral_offset,
            ch.entry.member_count,
            edge_tokens(&ch.entry_edge),
            edge_tokens(&ch.exit_edge),
            ch.cells.len()
        )?;
        for (c, cell) in &ch.cells {
            let index = (c.j - lo.j) as i64 * width + (c.i - lo.i) as i64;
            writeln!(
                w,
                "{} {} {} {}",
                index, cell.density, cell.direction.x, cell.direction.y
            )?;
        }
    }
    Ok(())
}

struct Lines<R> {
    inner: std::io::Lines<R>,
    line: usize,
}

impl<R: BufRead> Lines<R> {
    fn next_tokens(&mut self) -> Result<Vec<String>> {
        loop {
            self.line += 1;
            let l = self.inner.next().ok_or_else(|| Error::Parse {
                line: self.line,
                message: "unexpected end of field file".into(),
            })??;
            let l = l.trim();
            if l.is_empty() {
                continue;
            }
            return Ok(l.split_whitespace().map(str::to_string).collect());
        }
    }

    fn err(&self, message: impl Into<String>) -> Error {
        Error::Parse {
            line: self.line,
            message: message.into(),
        }
    }

    fn keyed(&mut self, key: &str, n: usize) -> Result<Vec<String>> {
        let t = self.next_tokens()?;
        if t.first().map(String::as_str) != Some(key) || t.len() != n + 1 {
            return Err(self.err(format!("expected `{key}` with {n} values")));
        }
        Ok(t[1..].to_vec())
    }
}

fn num<T: std::str::FromStr>(lines: &Lines<impl BufRead>, s: &str) -> Result<T> {
    s.parse()
        .map_err(|_| lines.err(format!("cannot parse `{s}`")))
}

fn parse_edge(lines: &Lines<impl BufRead>, t: &[String]) -> Result<RoiEdge> {
    Ok(RoiEdge {
        a: Vec2::new(num(lines, &t[0])?, num(lines, &t[1])?),
        b: Vec2::new(num(lines, &t[2])?, num(lines, &t[3])?),
        refined: num::<u8>(lines, &t[4])? != 0,
    })
}

pub fn read_field<R: BufRead>(r: R) -> Result<FlowField> {
    let mut lines = Lines {
        inner: r.lines(),
        line: 0,
    };
    let magic = lines.next_tokens()?.join(" ");
    if magic != FIELD_MAGIC {
        return Err(lines.err("not a flow field file"));
    }
    let o = lines.keyed("origin", 2)?;
    let origin = Vec2::new(num(&lines, &o[0])?, num(&lines, &o[1])?);
    let r = lines.keyed("resolution", 1)?;
    let resolution: f64 = num(&lines, &r[0])?;
    let frame = GridFrame::new(origin, resolution)?;
    let w = lines.keyed("window", 4)?;
    let (i0, j0, width): (i32, i32, i64) = (
        num(&lines, &w[0])?,
        num(&lines, &w[1])?,
        num(&lines, &w[2])?,
    );
    if width <= 0 {
        return Err(lines.err("window width must be positive"));
    }
    let c = lines.keyed("channels", 1)?;
    let n: usize = num(&lines, &c[0])?;
    let mut channels = Vec::with_capacity(n);
    for _ in 0..n {
        let t = lines.keyed("channel", 18)?;
        let id: u32 = num(&lines, &t[0])?;
        let goal = GoalPair {
            g_in: num(&lines, &t[1])?,
            g_out: num(&lines, &t[2])?,
        };
        let entry = EntryPoint {
            position: Vec2::new(num(&lines, &t[3])?, num(&lines, &t[4])?),
            lateral_offset: num(&lines, &t[5])?,
            member_count: num(&lines, &t[6])?,
        };
        let entry_edge = parse_edge(&lines, &t[7..12])?;
        let exit_edge = parse_edge(&lines, &t[12..17])?;
        let count: usize = num(&lines, &t[17])?;
        let mut cells = BTreeMap::new();
        for _ in 0..count {
            let c = lines.next_tokens()?;
            if c.len() != 4 {
                return Err(lines.err("cell records have 4 values"));
            }
            let index: i64 = num(&lines, &c[0])?;
            let density: u32 = num(&lines, &c[1])?;
            if density == 0 {
                return Err(lines.err("stored cells must have positive density"));
            }
            let cell = CellIndex::new(i0 + (index % width) as i32, j0 + (index / width) as i32);
            let direction = Vec2::new(num(&lines, &c[2])?, num(&lines, &c[3])?);
            cells.insert(cell, FieldCell { density, direction });
        }
        channels.push(ChannelField {
            id,
            goal,
            entry,
            entry_edge,
            exit_edge,
            cells,
        });
    }
    Ok(FlowField::new(frame, channels))
}
