//! End-to-end wiring of the stages with one configuration tree.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::{ChannelPaths, EvalConfig};
use crate::field::{synthesize_field, ChangeConfig, FieldConfig, FlowField};
use crate::geometry::{GridFrame, Polygon};
use crate::grouping::{build_partition, refine_roi_edges, ChannelPartition, GroupingConfig};
use crate::roi::RoiSpec;
use crate::search::{search_field, CandidatePath, SearchConfig};
use crate::smoothing::{smooth_path, SmoothConfig, SmoothedPath};
use crate::trajectory::{filter_traces, FilterConfig, FilterOutcome, ObstacleConfig, TraceSet};

/// Every stage's parameters. Missing sections take their defaults.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub filter: FilterConfig,
    pub obstacles: ObstacleConfig,
    pub grouping: GroupingConfig,
    pub field: FieldConfig,
    pub change: ChangeConfig,
    pub search: SearchConfig,
    pub smoothing: SmoothConfig,
    pub eval: EvalConfig,
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.filter.validate()?;
        self.obstacles.validate()?;
        self.grouping.validate()?;
        self.field.validate()?;
        self.change.validate()?;
        self.search.validate()?;
        self.smoothing.validate()?;
        self.eval.validate()
    }

    pub fn grid(&self) -> Result<GridFrame> {
        GridFrame::with_resolution(self.field.resolution)
    }
}

/// Filters against the ROI and the inflated obstacles.
pub fn filter_stage(
    traces: &TraceSet,
    roi: &RoiSpec,
    obstacles: &[Polygon],
    cfg: &PipelineConfig,
) -> Result<FilterOutcome> {
    cfg.filter.validate()?;
    let grid = cfg.obstacles.build(obstacles)?;
    Ok(filter_traces(traces, roi, &cfg.filter, &grid))
}

/// Refines the ROI edges from the kept traces and partitions them into channels.
pub fn partition_stage(
    kept: &TraceSet,
    roi: &RoiSpec,
    cfg: &PipelineConfig,
) -> Result<(RoiSpec, ChannelPartition)> {
    cfg.grouping.validate()?;
    if kept.is_empty() {
        return Err(Error::EmptyInput);
    }
    let refined = refine_roi_edges(roi, kept);
    let partition = build_partition(kept, &refined, &cfg.grouping)?;
    Ok((refined, partition))
}

pub fn field_stage(
    partition: &ChannelPartition,
    kept: &TraceSet,
    cfg: &PipelineConfig,
) -> Result<FlowField> {
    cfg.field.validate()?;
    Ok(synthesize_field(partition, kept, cfg.grid()?))
}

/// Smooths every candidate; failures are reported per channel.
pub fn smooth_stage(
    candidates: &[CandidatePath],
    cfg: &SmoothConfig,
) -> (Vec<SmoothedPath>, Vec<(u32, Error)>) {
    let mut ok = Vec::new();
    let mut failed = Vec::new();
    for c in candidates {
        match smooth_path(c, cfg) {
            Ok(s) => ok.push(s),
            Err(e) => failed.push((c.channel, e)),
        }
    }
    (ok, failed)
}

/// Groups smoothed paths by channel, keeping candidate order.
pub fn channel_paths(paths: &[SmoothedPath]) -> Vec<ChannelPaths> {
    let mut out: Vec<ChannelPaths> = Vec::new();
    for p in paths {
        match out.iter_mut().find(|c| c.channel == p.channel) {
            Some(c) => c.paths.push(p.polyline.clone()),
            None => out.push(ChannelPaths {
                channel: p.channel,
                paths: vec![p.polyline.clone()],
            }),
        }
    }
    out
}

/// Artifacts of one full run.
#[derive(Debug)]
pub struct PipelineRun {
    pub filter: FilterOutcome,
    pub roi: RoiSpec,
    pub partition: ChannelPartition,
    pub field: FlowField,
    pub candidates: Vec<CandidatePath>,
    pub smoothed: Vec<SmoothedPath>,
    /// Channels where search or smoothing failed.
    pub failures: Vec<(u32, Error)>,
}

/// Filter, partition, field, search and smoothing in sequence.
pub fn run_pipeline(
    traces: &TraceSet,
    roi: &RoiSpec,
    obstacles: &[Polygon],
    cfg: &PipelineConfig,
) -> Result<PipelineRun> {
    cfg.validate()?;
    let filter = filter_stage(traces, roi, obstacles, cfg)?;
    let (roi, partition) = partition_stage(&filter.kept, roi, cfg)?;
    let field = field_stage(&partition, &filter.kept, cfg)?;
    let outcome = search_field(&field, &cfg.search);
    let (smoothed, smooth_failures) = smooth_stage(&outcome.candidates, &cfg.smoothing);
    let mut failures = outcome.failures;
    failures.extend(smooth_failures);
    Ok(PipelineRun {
        filter,
        roi,
        partition,
        field,
        candidates: outcome.candidates,
        smoothed,
        failures,
    })
}
