//! Partition of filtered traces into channels: by entry/exit goal, then by
//! lane-level entry point along the refined entry edge.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cluster::{gap_clusters, DEFAULT_GAP};
use crate::error::{Error, Result};
use crate::geometry::{circular_mean, line_intersection, Vec2};
use crate::roi::{RoiEdge, RoiSpec};
use crate::trajectory::{Trace, TraceMeta, TraceSet};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GroupingConfig {
    /// Gap along the entry edge that separates two entry lanes, meters.
    pub entry_gap: f64,
    /// Channels with fewer member traces are flagged low-confidence.
    pub min_channel_support: usize,
}

impl Default for GroupingConfig {
    fn default() -> Self {
        Self {
            entry_gap: DEFAULT_GAP,
            min_channel_support: 3,
        }
    }
}

impl GroupingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.entry_gap > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "grouping.entry_gap must be positive, got {}",
                self.entry_gap
            )));
        }
        Ok(())
    }
}

/// Entry and exit goal indices (refined ROI edge indices).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GoalPair {
    pub g_in: usize,
    pub g_out: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntryPoint {
    pub position: Vec2,
    /// Mean member offset along the entry edge, from its midpoint.
    pub lateral_offset: f64,
    pub member_count: usize,
}

/// One channel: traces sharing entry goal, exit goal and entry lane.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Channel {
    pub id: u32,
    pub goal: GoalPair,
    pub entry: EntryPoint,
    pub entry_edge: RoiEdge,
    pub exit_edge: RoiEdge,
    /// Member vehicle ids, sorted.
    pub members: Vec<String>,
    pub low_confidence: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ChannelPartition {
    pub channels: Vec<Channel>,
}

impl ChannelPartition {
    pub fn channel(&self, id: u32) -> Option<&Channel> {
        self.channels.iter().find(|c| c.id == id)
    }

    pub fn len(&self) -> usize {
        self.channels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.channels.is_empty()
    }
}

/// Box heading of the sample closest to `p`.
fn heading_near(trace: &Trace, p: Vec2) -> Vec2 {
    trace
        .samples()
        .iter()
        .min_by(|a, b| a.center().distance(p).total_cmp(&b.center().distance(p)))
        .map(|s| s.heading())
        .expect("traces are non-empty")
}

/// Rotates every crossed edge about its midpoint so that its normal follows
/// the mean inward flow direction. Exiting traffic contributes its reversed
/// heading. Edges without crossings, or with cancelling flow, are unchanged.
pub fn refine_roi_edges(roi: &RoiSpec, traces: &TraceSet) -> RoiSpec {
    let mut inward: Vec<Vec<Vec2>> = vec![Vec::new(); roi.edges().len()];
    for e in traces {
        let Some(meta) = e.meta else { continue };
        inward[meta.entry_edge].push(heading_near(&e.trace, meta.start_point));
        inward[meta.exit_edge].push(-heading_near(&e.trace, meta.end_point));
    }
    let mut out = roi.clone();
    for (k, dirs) in inward.iter().enumerate() {
        if dirs.is_empty() {
            continue;
        }
        let Ok(m) = circular_mean(dirs) else {
            log::warn!("edge {k}: crossing directions cancel, left unrefined");
            continue;
        };
        let old = roi.edge(k);
        if old.outward_normal().dot(m) >= 0.0 {
            log::warn!("edge {k}: mean crossing direction points outward, left unrefined");
            continue;
        }
        let half = old.length() / 2.0;
        let dir = Vec2::new(m.y, -m.x);
        let mid = old.midpoint();
        out.set_edge(
            k,
            RoiEdge {
                a: mid - dir * half,
                b: mid + dir * half,
                refined: true,
            },
        );
    }
    out
}

/// Trace ids grouped by `(entry edge, exit edge)`; traces without meta are skipped.
pub fn group_by_goal(traces: &TraceSet) -> BTreeMap<GoalPair, Vec<String>> {
    let mut out: BTreeMap<GoalPair, Vec<String>> = BTreeMap::new();
    for e in traces {
        if let Some(m) = e.meta {
            out.entry(GoalPair {
                g_in: m.entry_edge,
                g_out: m.exit_edge,
            })
            .or_default()
            .push(e.trace.id().to_string());
        }
    }
    for ids in out.values_mut() {
        ids.sort();
    }
    out
}

/// Offset along `edge` where the center path crosses the edge's line,
/// falling back to the projection of the recorded start point.
pub fn entry_offset(trace: &Trace, meta: &TraceMeta, edge: &RoiEdge) -> f64 {
    let reach = edge.length();
    let centers: Vec<Vec2> = trace.centers().collect();
    let mut best: Option<(f64, f64)> = None;
    for w in centers.windows(2) {
        if w[0] == w[1] {
            continue;
        }
        let Some((t, _)) = line_intersection(w[0], w[1], edge.a, edge.b) else {
            continue;
        };
        if !(0.0..1.0).contains(&t) {
            continue;
        }
        let p = w[0].lerp(w[1], t);
        let off = edge.offset_of(p);
        if off.abs() > reach {
            continue;
        }
        // inward crossing closest to the recorded entry
        if (w[1] - w[0]).dot(edge.outward_normal()) < 0.0 {
            let dist = p.distance(meta.start_point);
            if best.is_none_or(|(d, _)| dist < d) {
                best = Some((dist, off));
            }
        }
    }
    best.map(|(_, off)| off)
        .unwrap_or_else(|| edge.offset_of(meta.start_point))
}

/// Gap-clusters entry offsets of one goal group along its entry edge.
/// Returns each entry point with its member ids (sorted), ordered by offset.
pub fn cluster_entry_points(
    members: &[(String, f64)],
    entry_edge: &RoiEdge,
    gap: f64,
) -> Vec<(EntryPoint, Vec<String>)> {
    let offsets: Vec<f64> = members.iter().map(|(_, o)| *o).collect();
    gap_clusters(&offsets, gap)
        .into_iter()
        .map(|idx| {
            let mean = idx.iter().map(|&k| offsets[k]).sum::<f64>() / idx.len() as f64;
            let mut ids: Vec<String> = idx.iter().map(|&k| members[k].0.clone()).collect();
            ids.sort();
            (
                EntryPoint {
                    position: entry_edge.point_at_offset(mean),
                    lateral_offset: mean,
                    member_count: ids.len(),
                },
                ids,
            )
        })
        .collect()
}

/// Groups by goal, clusters entry points, and numbers the resulting channels.
pub fn build_partition(
    traces: &TraceSet,
    roi: &RoiSpec,
    cfg: &GroupingConfig,
) -> Result<ChannelPartition> {
    let groups = group_by_goal(traces);
    if groups.is_empty() {
        return Err(Error::EmptyInput);
    }
    let per_goal: Vec<(GoalPair, Vec<(EntryPoint, Vec<String>)>)> = groups
        .into_par_iter()
        .map(|(goal, ids)| {
            let edge = roi.edge(goal.g_in);
            let members: Vec<(String, f64)> = ids
                .into_iter()
                .map(|id| {
                    let e = traces.get(&id).expect("grouped ids come from the set");
                    let off = entry_offset(
                        &e.trace,
                        e.meta.as_ref().expect("grouped traces carry meta"),
                        edge,
                    );
                    (id, off)
                })
                .collect();
            (goal, cluster_entry_points(&members, edge, cfg.entry_gap))
        })
        .collect();

    let mut channels = Vec::new();
    for (goal, clusters) in per_goal {
        for (entry, members) in clusters {
            let id = channels.len() as u32;
            channels.push(Channel {
                id,
                goal,
                entry,
                entry_edge: *roi.edge(goal.g_in),
                exit_edge: *roi.edge(goal.g_out),
                low_confidence: members.len() < cfg.min_channel_support,
                members,
            });
        }
    }
    Ok(ChannelPartition { channels })
}
