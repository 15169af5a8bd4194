//! Displacement metrics of flow paths against reference centerlines,
//! grouped by turn type.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{normalize_angle, Polyline, Vec2};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TurnType {
    Left,
    Right,
    Straight,
}

impl TurnType {
    pub fn as_str(self) -> &'static str {
        match self {
            TurnType::Left => "left",
            TurnType::Right => "right",
            TurnType::Straight => "straight",
        }
    }
}

/// Signed heading change from start to end: left above 45°, right below −45°.
pub fn classify_turn(line: &Polyline) -> TurnType {
    let n = line.segment_count();
    let change =
        normalize_angle(line.segment_direction(n - 1).angle() - line.segment_direction(0).angle());
    if change > std::f64::consts::FRAC_PI_4 {
        TurnType::Left
    } else if change < -std::f64::consts::FRAC_PI_4 {
        TurnType::Right
    } else {
        TurnType::Straight
    }
}

/// A reference centerline originating from one entry lane.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferencePath {
    pub entry: String,
    pub turn: TurnType,
    pub polyline: Polyline,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub sample_spacing: f64,
    /// Distances at which point displacement is reported, meters.
    pub de_distances: Vec<f64>,
    /// References farther than this from a channel's entry point are not admissible.
    pub max_entry_distance: f64,
    pub heading_tolerance_deg: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            sample_spacing: 0.5,
            de_distances: vec![5.0, 35.0, 55.0],
            max_entry_distance: 5.0,
            heading_tolerance_deg: 45.0,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.sample_spacing > 0.0)
            || !(self.max_entry_distance > 0.0)
            || !(self.heading_tolerance_deg > 0.0)
        {
            return Err(Error::InvalidConfig(
                "eval parameters must be positive".into(),
            ));
        }
        if self.de_distances.iter().any(|&x| !(x >= 0.0)) {
            return Err(Error::InvalidConfig(
                "eval.de_distances must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DisplacementErrors {
    pub ade: f64,
    pub mde: f64,
    /// `(arc length, displacement)` at every flow sample.
    pub samples: Vec<(f64, f64)>,
    flow: Polyline,
    reference: Polyline,
}

impl DisplacementErrors {
    /// Displacement at arc length `x` of the flow path, `None` past its end.
    pub fn de_at(&self, x: f64) -> Option<f64> {
        (x >= 0.0 && x <= self.flow.length() + 1e-9)
            .then(|| self.reference.distance_to(self.flow.point_at(x)))
    }

    pub fn flow_length(&self) -> f64 {
        self.flow.length()
    }
}

/// Samples `flow` every `spacing` meters (and at its end) and measures each
/// sample's distance to the nearest point of `reference`. ADE is the
/// arc-length average of the sampled displacement.
pub fn displacement_errors_with(
    flow: &Polyline,
    reference: &Polyline,
    spacing: f64,
) -> DisplacementErrors {
    let samples: Vec<(f64, f64)> = flow
        .sample_arc_lengths(spacing)
        .into_iter()
        .map(|s| (s, reference.distance_to(flow.point_at(s))))
        .collect();
    let ade = if samples.len() < 2 {
        samples[0].1
    } else {
        // arc-length weighted (trapezoid) mean
        let area: f64 = samples
            .windows(2)
            .map(|w| 0.5 * (w[0].1 + w[1].1) * (w[1].0 - w[0].0))
            .sum();
        area / samples.last().unwrap().0
    };
    let mde = refined_max(flow, reference, &samples, spacing);
    DisplacementErrors {
        ade,
        mde,
        samples,
        flow: flow.clone(),
        reference: reference.clone(),
    }
}

/// Peak displacement: the sampled maximum, refined at 1 cm steps around
/// every sampled local peak since the true peak usually lies between samples.
fn refined_max(flow: &Polyline, reference: &Polyline, samples: &[(f64, f64)], spacing: f64) -> f64 {
    const STEP: f64 = 0.01;
    let mut best = samples.iter().map(|x| x.1).fold(0.0, f64::max);
    for k in 0..samples.len() {
        let left = k.checked_sub(1).map_or(f64::NEG_INFINITY, |i| samples[i].1);
        let right = samples.get(k + 1).map_or(f64::NEG_INFINITY, |x| x.1);
        if samples[k].1 < left || samples[k].1 < right {
            continue;
        }
        let lo = (samples[k].0 - spacing).max(0.0);
        let hi = (samples[k].0 + spacing).min(flow.length());
        let n = ((hi - lo) / STEP).ceil() as usize;
        for i in 0..=n {
            let s = (lo + i as f64 * STEP).min(hi);
            best = best.max(reference.distance_to(flow.point_at(s)));
        }
    }
    best
}

pub fn displacement_errors(flow: &Polyline, reference: &Polyline) -> DisplacementErrors {
    displacement_errors_with(flow, reference, EvalConfig::default().sample_spacing)
}

/// A channel's paths, best first. The first path supplies the exit heading.
#[derive(Clone, Debug)]
pub struct ChannelPaths {
    pub channel: u32,
    pub paths: Vec<Polyline>,
}

#[derive(Debug, Default)]
pub struct Alignment {
    /// Channel id → index into the reference list.
    pub pairs: BTreeMap<u32, usize>,
    pub unpaired: Vec<(u32, Error)>,
}

/// Chord direction over the final meters; a short last segment says little
/// about where a path is heading.
fn exit_heading(line: &Polyline) -> Vec2 {
    const EXIT_CHORD: f64 = 2.0;
    let from = line.point_at((line.length() - EXIT_CHORD).max(0.0));
    (line.end() - from)
        .normalized()
        .unwrap_or_else(|| line.segment_direction(line.segment_count() - 1))
}

/// Pairs each channel with the nearest reference (distance from the entry
/// point to the reference line) whose exit heading agrees with the
/// channel's best path.
pub fn align_reference(
    channels: &[ChannelPaths],
    references: &[ReferencePath],
    cfg: &EvalConfig,
) -> Alignment {
    let tol = cfg.heading_tolerance_deg.to_radians();
    let mut out = Alignment::default();
    for ch in channels {
        let Some(best) = ch.paths.first() else {
            out.unpaired.push((
                ch.channel,
                Error::NoReference {
                    channel: ch.channel,
                },
            ));
            continue;
        };
        let entry = best.start();
        let exit = exit_heading(best);
        let pick = references
            .iter()
            .enumerate()
            .filter(|(_, r)| exit_heading(&r.polyline).angle_to(exit).abs() <= tol)
            .map(|(k, r)| (r.polyline.distance_to(entry), k))
            .filter(|(d, _)| *d <= cfg.max_entry_distance)
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        match pick {
            Some((_, k)) => {
                out.pairs.insert(ch.channel, k);
            }
            None => out.unpaired.push((
                ch.channel,
                Error::NoReference {
                    channel: ch.channel,
                },
            )),
        }
    }
    out
}

/// Metrics of one candidate against its paired reference.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricRecord {
    pub channel: u32,
    pub rank: usize,
    pub reference: String,
    pub turn: TurnType,
    pub ade: f64,
    pub mde: f64,
    pub length: f64,
    /// `(x, DE@x)` for each configured distance; `None` when the path is shorter.
    pub de: Vec<(f64, Option<f64>)>,
}

/// Evaluates every path of every paired channel.
pub fn evaluate(
    channels: &[ChannelPaths],
    references: &[ReferencePath],
    cfg: &EvalConfig,
) -> (Vec<MetricRecord>, Vec<(u32, Error)>) {
    let alignment = align_reference(channels, references, cfg);
    let mut records = Vec::new();
    for ch in channels {
        let Some(&k) = alignment.pairs.get(&ch.channel) else {
            continue;
        };
        let r = &references[k];
        for (rank, path) in ch.paths.iter().enumerate() {
            let e = displacement_errors_with(path, &r.polyline, cfg.sample_spacing);
            records.push(MetricRecord {
                channel: ch.channel,
                rank,
                reference: r.entry.clone(),
                turn: r.turn,
                ade: e.ade,
                mde: e.mde,
                length: e.flow_length(),
                de: cfg.de_distances.iter().map(|&x| (x, e.de_at(x))).collect(),
            });
        }
    }
    (records, alignment.unpaired)
}

/// Mean and sample standard deviation; the deviation needs two values.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub count: usize,
    pub avg: Option<f64>,
    pub std: Option<f64>,
}

impl Stat {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        let avg = (n > 0).then(|| values.iter().sum::<f64>() / n as f64);
        let std = avg.filter(|_| n >= 2).map(|m| {
            let ss: f64 = values.iter().map(|v| (v - m) * (v - m)).sum();
            (ss / (n - 1) as f64).sqrt()
        });
        Self { count: n, avg, std }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TurnRow {
    pub turn: TurnType,
    pub candidates: usize,
    pub ade: Stat,
    pub mde: Stat,
    pub de: Vec<(f64, Stat)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub rows: Vec<TurnRow>,
}

/// Aggregates per-candidate records by turn type, every candidate weighted equally.
pub fn build_report(records: &[MetricRecord], cfg: &EvalConfig) -> MetricsReport {
    let mut by_turn: BTreeMap<TurnType, Vec<&MetricRecord>> = BTreeMap::new();
    for r in records {
        by_turn.entry(r.turn).or_default().push(r);
    }
    let rows = by_turn
        .into_iter()
        .map(|(turn, rs)| {
            let ade: Vec<f64> = rs.iter().map(|r| r.ade).collect();
            let mde: Vec<f64> = rs.iter().map(|r| r.mde).collect();
            let de = cfg
                .de_distances
                .iter()
                .map(|&x| {
                    let vals: Vec<f64> = rs
                        .iter()
                        .filter_map(|r| r.de.iter().find(|(d, _)| *d == x).and_then(|(_, v)| *v))
                        .collect();
                    (x, Stat::of(&vals))
                })
                .collect();
            TurnRow {
                turn,
                candidates: rs.len(),
                ade: Stat::of(&ade),
                mde: Stat::of(&mde),
                de,
            }
        })
        .collect();
    MetricsReport { rows }
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.3}"))
}

/// Fixed-width table: one row per turn type, avg/std pairs per metric.
pub fn render_table(report: &MetricsReport) -> String {
    let mut out = String::new();
    let mut header = format!("{:<10}{:>4}", "turn", "n");
    let de_cols: Vec<f64> = report
        .rows
        .first()
        .map(|r| r.de.iter().map(|d| d.0).collect())
        .unwrap_or_default();
    let mut names = vec!["ADE".to_string(), "MDE".to_string()];
    names.extend(de_cols.iter().map(|x| format!("DE@{x}")));
    for n in &names {
        let _ = write!(header, "{:>10}{:>8}", format!("{n} avg"), "std");
    }
    out.push_str(header.trim_end());
    out.push('\n');
    for r in &report.rows {
        let mut line = format!("{:<10}{:>4}", r.turn.as_str(), r.candidates);
        for s in [r.ade, r.mde].iter().chain(r.de.iter().map(|d| &d.1)) {
            let _ = write!(line, "{:>10}{:>8}", cell(s.avg), cell(s.std));
        }
        out.push_str(&line);
        out.push('\n');
    }
    out
}
