//! Per-channel path search on a flow field: a grid Dijkstra initial guess,
//! station sampling along it, lateral clustering of field support at each
//! station, dynamic programming over the resulting lattice, and
//! non-maximum suppression of near-duplicate candidates.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap, HashMap, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cluster::DEFAULT_GAP;
use crate::error::{Error, Result};
use crate::field::{ChannelField, FlowField};
use crate::geometry::{CellIndex, FrenetFrame, GridFrame, Polyline, Vec2};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchConfig {
    pub station_spacing: f64,
    pub density_weight: f64,
    pub direction_weight: f64,
    pub lateral_jump_weight: f64,
    pub nms_lateral_threshold: f64,
    pub nms_fraction: f64,
    pub min_cell_density: u32,
    /// Half-width of the longitudinal slice collected around each station, meters.
    pub station_band: f64,
    /// Peaks in a station's lateral profile closer than this are one cluster, meters.
    pub cluster_gap: f64,
    /// A valley splits two peaks when it drops below this fraction of the lower peak.
    pub valley_ratio: f64,
    /// Labels kept per lattice node.
    pub beam_width: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            station_spacing: 3.0,
            density_weight: 1.0,
            direction_weight: 2.0,
            lateral_jump_weight: 0.5,
            nms_lateral_threshold: 2.0,
            nms_fraction: 0.2,
            min_cell_density: 1,
            station_band: 0.5,
            cluster_gap: DEFAULT_GAP,
            valley_ratio: 0.5,
            beam_width: 5,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if !(self.station_spacing > 0.0) {
            return bad(format!(
                "search.station_spacing must be positive, got {}",
                self.station_spacing
            ));
        }
        if self.density_weight < 0.0
            || self.direction_weight < 0.0
            || self.lateral_jump_weight < 0.0
        {
            return bad("search weights must be non-negative".into());
        }
        if self.density_weight == 0.0 && self.direction_weight == 0.0 {
            return bad(
                "search.density_weight and search.direction_weight cannot both be zero".into(),
            );
        }
        if !(self.nms_lateral_threshold > 0.0) {
            return bad("search.nms_lateral_threshold must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.nms_fraction) {
            return bad(format!(
                "search.nms_fraction must lie in [0, 1], got {}",
                self.nms_fraction
            ));
        }
        if self.min_cell_density == 0 {
            return bad("search.min_cell_density must be at least 1".into());
        }
        if !(self.station_band > 0.0)
            || !(self.cluster_gap > 0.0)
            || !(0.0..=1.0).contains(&self.valley_ratio)
        {
            return bad("search clustering parameters out of range".into());
        }
        if self.beam_width == 0 {
            return bad("search.beam_width must be at least 1".into());
        }
        Ok(())
    }

    /// Per-cell cost of moving along `step` through a cell with the given support.
    #[inline]
    fn cell_cost(&self, density: u32, direction: Vec2, step: Vec2) -> f64 {
        self.density_weight / (1.0 + density as f64)
            + self.direction_weight * (1.0 - step.dot(direction))
    }
}

#[derive(Clone, Copy, PartialEq)]
struct QueueItem {
    cost: f64,
    cell: CellIndex,
}

impl Eq for QueueItem {}

impl Ord for QueueItem {
    fn cmp(&self, o: &Self) -> Ordering {
        // min-heap on cost, then on cell index for determinism
        o.cost
            .total_cmp(&self.cost)
            .then_with(|| o.cell.cmp(&self.cell))
    }
}

impl PartialOrd for QueueItem {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

fn nearest_supported(
    channel: &ChannelField,
    grid: &GridFrame,
    p: Vec2,
    min_density: u32,
) -> Option<CellIndex> {
    let start = grid.cell_of(p);
    if channel.density(start) >= min_density {
        return Some(start);
    }
    channel
        .cells()
        .filter(|(_, c)| c.density >= min_density)
        .map(|(&k, _)| (grid.cell_center(k).distance(p), k))
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
        .map(|(_, k)| k)
}

/// Minimum-cost 8-connected grid path from the entry point to a supported
/// cell beyond the exit edge whose flow leaves the ROI. The returned
/// polyline starts exactly at the entry point and is simplified to within
/// one cell of the grid path.
pub fn initial_guess_search(
    channel: &ChannelField,
    grid: &GridFrame,
    cfg: &SearchConfig,
) -> Result<Polyline> {
    let no_path = || Error::NoPath {
        channel: channel.id,
    };
    let min = cfg.min_cell_density;
    let entry = channel.entry.position;
    let start = nearest_supported(channel, grid, entry, min).ok_or_else(no_path)?;
    let exit = channel.exit_edge;
    let outward = exit.outward_normal();
    let half = 0.5 * exit.length();
    let is_target = |c: CellIndex| {
        let p = grid.cell_center(c);
        exit.outside_distance(p) > 0.0
            && exit.offset_of(p).abs() <= half + grid.resolution
            && channel
                .cell(c)
                .is_some_and(|f| f.direction.dot(outward) > 0.0)
    };

    let mut dist: HashMap<CellIndex, f64> = HashMap::new();
    let mut prev: HashMap<CellIndex, CellIndex> = HashMap::new();
    let mut heap = BinaryHeap::new();
    dist.insert(start, 0.0);
    heap.push(QueueItem {
        cost: 0.0,
        cell: start,
    });
    let mut goal = None;
    while let Some(QueueItem { cost, cell }) = heap.pop() {
        if cost > dist[&cell] {
            continue;
        }
        if cell != start && is_target(cell) {
            goal = Some(cell);
            break;
        }
        for (n, (di, dj)) in cell.neighbors8() {
            let Some(f) = channel.cell(n) else { continue };
            if f.density < min {
                continue;
            }
            let step = Vec2::new(di as f64, dj as f64);
            let len = step.norm() * grid.resolution;
            let c = cost + len * cfg.cell_cost(f.density, f.direction, step / step.norm());
            if dist.get(&n).is_none_or(|&d| c < d) {
                dist.insert(n, c);
                prev.insert(n, cell);
                heap.push(QueueItem { cost: c, cell: n });
            }
        }
    }
    let goal = goal.ok_or_else(no_path)?;
    let mut cells = vec![goal];
    while let Some(&p) = prev.get(cells.last().unwrap()) {
        cells.push(p);
    }
    cells.reverse();
    let points = std::iter::once(entry).chain(cells[1..].iter().map(|&c| grid.cell_center(c)));
    let line = Polyline::from_points_dedup(points).map_err(|_| no_path())?;
    Ok(line.simplify(grid.resolution))
}

/// Station arc lengths `0, h, 2h, …` plus the end of `line`.
pub fn sample_stations(line: &Polyline, spacing: f64) -> Result<Vec<f64>> {
    if line.length() < spacing {
        return Err(Error::TooShort {
            length: line.length(),
            required: spacing,
        });
    }
    Ok(line.sample_arc_lengths(spacing))
}

/// A supported field cell in frenet coordinates of the initial guess.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProjectedCell {
    pub s: f64,
    pub d: f64,
    pub density: u32,
    pub direction: Vec2,
}

/// Projects every cell with at least `min_density` support. Cells beyond the
/// ends of the reference get `s` outside `[0, L]`.
pub fn project_cells(
    channel: &ChannelField,
    grid: &GridFrame,
    frame: &FrenetFrame,
    min_density: u32,
) -> Vec<ProjectedCell> {
    channel
        .cells()
        .filter(|(_, f)| f.density >= min_density)
        .filter_map(|(&c, f)| {
            let (s, d) = frame.project_extended(grid.cell_center(c))?;
            Some(ProjectedCell {
                s,
                d,
                density: f.density,
                direction: f.direction,
            })
        })
        .collect()
}

/// One lateral mode of field support at a station.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LateralCluster {
    /// Density-weighted mean lateral offset, meters.
    pub offset: f64,
    /// Peak cell density in the cluster.
    pub support: u32,
    /// Summed density.
    pub weight: f64,
    /// Density-weighted mean flow direction.
    pub direction: Vec2,
}

fn make_cluster(cells: &[&ProjectedCell], fallback: Vec2) -> LateralCluster {
    let weight: f64 = cells.iter().map(|c| c.density as f64).sum();
    let offset = cells.iter().map(|c| c.d * c.density as f64).sum::<f64>() / weight;
    let dir_sum = cells
        .iter()
        .fold(Vec2::ZERO, |acc, c| acc + c.direction * c.density as f64);
    LateralCluster {
        offset,
        support: cells.iter().map(|c| c.density).max().unwrap_or(0),
        weight,
        direction: dir_sum.normalized().unwrap_or(fallback),
    }
}

/// Splits the lateral support profile in the band around `station` into
/// modes: runs separated by more than `cluster_gap` of empty space, further
/// split at density valleys between peaks at least `cluster_gap` apart.
pub fn lateral_clusters(
    cells: &[ProjectedCell],
    station: f64,
    tangent: Vec2,
    resolution: f64,
    cfg: &SearchConfig,
) -> Result<Vec<LateralCluster>> {
    let band: Vec<&ProjectedCell> = cells
        .iter()
        .filter(|c| (c.s - station).abs() <= cfg.station_band && c.density >= cfg.min_cell_density)
        .collect();
    if band.is_empty() {
        return Err(Error::EmptyStation { station });
    }
    let mut bins: BTreeMap<i64, Vec<&ProjectedCell>> = BTreeMap::new();
    for c in band {
        bins.entry((c.d / resolution).round() as i64)
            .or_default()
            .push(c);
    }
    let gap_bins = (cfg.cluster_gap / resolution).round() as i64;

    // contiguous runs of bins
    let mut runs: Vec<(i64, i64)> = Vec::new();
    for &b in bins.keys() {
        match runs.last_mut() {
            Some(r) if b - r.1 <= gap_bins => r.1 = b,
            _ => runs.push((b, b)),
        }
    }

    let mut clusters = Vec::new();
    for (lo, hi) in runs {
        let raw: Vec<f64> = (lo..=hi)
            .map(|b| {
                bins.get(&b)
                    .map_or(0.0, |v| v.iter().map(|c| c.density as f64).sum())
            })
            .collect();
        let n = raw.len();
        let profile: Vec<f64> = (0..n)
            .map(|k| {
                let a = k.saturating_sub(1);
                let b = (k + 1).min(n - 1);
                raw[a..=b].iter().sum::<f64>() / (b - a + 1) as f64
            })
            .collect();
        let peaks: Vec<usize> = (0..n)
            .filter(|&k| {
                let left = if k == 0 { 0.0 } else { profile[k - 1] };
                let right = if k + 1 == n { 0.0 } else { profile[k + 1] };
                profile[k] > left && profile[k] >= right
            })
            .collect();

        let mut cuts = Vec::new();
        if let Some((&first, rest)) = peaks.split_first() {
            let mut current = first;
            for &p in rest {
                let (valley_at, valley) = (current..=p)
                    .map(|k| (k, profile[k]))
                    .min_by(|a, b| a.1.total_cmp(&b.1))
                    .unwrap();
                let lower = profile[current].min(profile[p]);
                let far = (p - current) as f64 * resolution >= cfg.cluster_gap;
                if far && valley < cfg.valley_ratio * lower {
                    cuts.push(valley_at);
                    current = p;
                } else if profile[p] > profile[current] {
                    current = p;
                }
            }
        }

        let mut start = 0;
        for end in cuts.into_iter().chain(std::iter::once(n - 1)) {
            let members: Vec<&ProjectedCell> = (start..=end)
                .filter_map(|k| bins.get(&(lo + k as i64)))
                .flatten()
                .copied()
                .collect();
            if !members.is_empty() {
                clusters.push(make_cluster(&members, tangent));
            }
            start = end + 1;
        }
    }
    clusters.sort_by(|a, b| a.offset.total_cmp(&b.offset));
    Ok(clusters)
}

/// Stations along the initial guess with their lateral clusters. Station 0
/// holds the entry point only.
#[derive(Clone, Debug)]
pub struct StationLattice {
    pub frame: FrenetFrame,
    pub stations: Vec<f64>,
    pub clusters: Vec<Vec<LateralCluster>>,
}

impl StationLattice {
    pub fn point(&self, station: usize, cluster: usize) -> Vec2 {
        self.frame.to_cartesian(
            self.stations[station],
            self.clusters[station][cluster].offset,
        )
    }
}

/// Builds the lattice over `l_init`. Stations without support are dropped.
pub fn build_lattice(
    channel: &ChannelField,
    grid: &GridFrame,
    l_init: Polyline,
    cfg: &SearchConfig,
) -> Result<StationLattice> {
    let stations = sample_stations(&l_init, cfg.station_spacing)?;
    let frame = FrenetFrame::new(l_init)?;
    let cells = project_cells(channel, grid, &frame, cfg.min_cell_density);

    let entry_cell = channel.cell(grid.cell_of(frame.reference().start()));
    let entry = LateralCluster {
        offset: 0.0,
        support: entry_cell.map_or(0, |c| c.density),
        weight: entry_cell.map_or(0.0, |c| c.density as f64),
        direction: entry_cell.map_or(frame.tangent(0.0), |c| c.direction),
    };
    let mut kept = vec![0.0];
    let mut clusters = vec![vec![entry]];
    for &s in &stations[1..] {
        match lateral_clusters(&cells, s, frame.tangent(s), grid.resolution, cfg) {
            Ok(c) => {
                kept.push(s);
                clusters.push(c);
            }
            Err(e) => log::warn!("channel {}: station at s = {s:.2} dropped: {e}", channel.id),
        }
    }
    if kept.len() < 2 {
        return Err(Error::NoPath {
            channel: channel.id,
        });
    }
    Ok(StationLattice {
        frame,
        stations: kept,
        clusters,
    })
}

/// Node cost: thin support and flow that crosses the reference both cost.
pub fn node_cost(
    lattice: &StationLattice,
    station: usize,
    cluster: usize,
    cfg: &SearchConfig,
) -> f64 {
    let c = &lattice.clusters[station][cluster];
    let tangent = lattice.frame.tangent(lattice.stations[station]);
    cfg.cell_cost(c.support, c.direction, tangent)
}

/// Cost of the straight segment between two lattice nodes, sampled through
/// the field at half-cell steps; infinite if any sample lies on unsupported
/// ground.
pub fn edge_cost(
    lattice: &StationLattice,
    channel: &ChannelField,
    grid: &GridFrame,
    station: usize,
    from: usize,
    to: usize,
    cfg: &SearchConfig,
) -> f64 {
    let p = lattice.point(station, from);
    let q = lattice.point(station + 1, to);
    let len = p.distance(q);
    let Some(dir) = (q - p).normalized() else {
        return f64::INFINITY;
    };
    let n = ((len / (0.5 * grid.resolution)).ceil() as usize).max(1);
    let mut sum = 0.0;
    for k in 0..=n {
        let x = p.lerp(q, k as f64 / n as f64);
        match channel.cell(grid.cell_of(x)) {
            Some(f) if f.density >= cfg.min_cell_density => {
                sum += cfg.cell_cost(f.density, f.direction, dir)
            }
            _ => return f64::INFINITY,
        }
    }
    let jump =
        (lattice.clusters[station + 1][to].offset - lattice.clusters[station][from].offset).abs();
    len * sum / (n + 1) as f64 + cfg.lateral_jump_weight * jump
}

/// Node and edge costs of a lattice, with each node's lateral offset for
/// tie-breaking. `edges[i][a][b]` joins node `a` at station `i` to node `b`
/// at station `i + 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct LatticeCosts {
    pub nodes: Vec<Vec<f64>>,
    pub edges: Vec<Vec<Vec<f64>>>,
    pub offsets: Vec<Vec<f64>>,
}

impl LatticeCosts {
    pub fn evaluate(
        lattice: &StationLattice,
        channel: &ChannelField,
        grid: &GridFrame,
        cfg: &SearchConfig,
    ) -> Self {
        let nodes = (0..lattice.stations.len())
            .map(|i| {
                (0..lattice.clusters[i].len())
                    .map(|c| node_cost(lattice, i, c, cfg))
                    .collect()
            })
            .collect();
        let edges = (0..lattice.stations.len() - 1)
            .map(|i| {
                (0..lattice.clusters[i].len())
                    .map(|a| {
                        (0..lattice.clusters[i + 1].len())
                            .map(|b| edge_cost(lattice, channel, grid, i, a, b, cfg))
                            .collect()
                    })
                    .collect()
            })
            .collect();
        let offsets = lattice
            .clusters
            .iter()
            .map(|cs| cs.iter().map(|c| c.offset).collect())
            .collect();
        Self {
            nodes,
            edges,
            offsets,
        }
    }

    /// Total cost of a chain, accumulated forward as `(cost + edge) + node`.
    pub fn chain_cost(&self, chain: &[usize]) -> f64 {
        let mut cost = self.nodes[0][chain[0]];
        for i in 1..chain.len() {
            cost = cost + self.edges[i - 1][chain[i - 1]][chain[i]] + self.nodes[i][chain[i]];
        }
        cost
    }

    fn tie_key(&self, chain: &[usize]) -> Vec<f64> {
        chain
            .iter()
            .enumerate()
            .map(|(i, &c)| self.offsets[i][c].abs())
            .collect()
    }

    fn rank(&self, a: &(Vec<usize>, f64), b: &(Vec<usize>, f64)) -> Ordering {
        a.1.total_cmp(&b.1).then_with(|| {
            let (ka, kb) = (self.tie_key(&a.0), self.tie_key(&b.0));
            ka.iter()
                .zip(&kb)
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(Ordering::Equal)
                .then_with(|| a.0.cmp(&b.0))
        })
    }
}

#[derive(Clone, Copy, Debug)]
struct Label {
    cost: f64,
    pred: usize,
    rank: usize,
}

/// Ranked chains through the lattice: the `beam` best labels at every
/// terminal node plus, for every node, the best chain through it. The first
/// entry is the exact optimum.
pub fn dp_chains(costs: &LatticeCosts, beam: usize) -> Vec<(Vec<usize>, f64)> {
    let m = costs.nodes.len();
    if m == 0 {
        return Vec::new();
    }
    let mut labels: Vec<Vec<Vec<Label>>> = Vec::with_capacity(m);
    labels.push(
        costs.nodes[0]
            .iter()
            .map(|&c| {
                if c.is_finite() {
                    vec![Label {
                        cost: c,
                        pred: 0,
                        rank: 0,
                    }]
                } else {
                    Vec::new()
                }
            })
            .collect(),
    );
    for i in 1..m {
        let prev = &labels[i - 1];
        let layer = (0..costs.nodes[i].len())
            .map(|b| {
                let mut cand: Vec<Label> = Vec::new();
                for (a, ls) in prev.iter().enumerate() {
                    let e = costs.edges[i - 1][a][b];
                    for (r, l) in ls.iter().enumerate() {
                        let c = l.cost + e + costs.nodes[i][b];
                        if c.is_finite() {
                            cand.push(Label {
                                cost: c,
                                pred: a,
                                rank: r,
                            });
                        }
                    }
                }
                cand.sort_by(|x, y| {
                    x.cost
                        .total_cmp(&y.cost)
                        .then_with(|| {
                            costs.offsets[i - 1][x.pred]
                                .abs()
                                .total_cmp(&costs.offsets[i - 1][y.pred].abs())
                        })
                        .then_with(|| (x.pred, x.rank).cmp(&(y.pred, y.rank)))
                });
                cand.truncate(beam);
                cand
            })
            .collect();
        labels.push(layer);
    }

    let backtrack = |station: usize, node: usize, rank: usize| -> Vec<usize> {
        let mut chain = vec![node];
        let (mut i, mut c, mut r) = (station, node, rank);
        while i > 0 {
            let l = labels[i][c][r];
            chain.push(l.pred);
            c = l.pred;
            r = l.rank;
            i -= 1;
        }
        chain.reverse();
        chain
    };

    let mut seen: HashSet<Vec<usize>> = HashSet::new();
    let mut out = Vec::new();
    let mut push = |chain: Vec<usize>, out: &mut Vec<(Vec<usize>, f64)>| {
        if seen.insert(chain.clone()) {
            let c = costs.chain_cost(&chain);
            if c.is_finite() {
                out.push((chain, c));
            }
        }
    };
    for (b, ls) in labels[m - 1].iter().enumerate() {
        for r in 0..ls.len() {
            push(backtrack(m - 1, b, r), &mut out);
        }
    }

    // best completion from each node onward
    let mut to_go: Vec<Vec<(f64, Option<usize>)>> = costs
        .nodes
        .iter()
        .map(|n| vec![(0.0, None); n.len()])
        .collect();
    for i in (0..m - 1).rev() {
        for a in 0..costs.nodes[i].len() {
            let mut best = (f64::INFINITY, None);
            for b in 0..costs.nodes[i + 1].len() {
                let c = costs.edges[i][a][b] + costs.nodes[i + 1][b] + to_go[i + 1][b].0;
                let better = c < best.0
                    || (c == best.0
                        && best.1.is_some_and(|k: usize| {
                            costs.offsets[i + 1][b].abs() < costs.offsets[i + 1][k].abs()
                        }));
                if better {
                    best = (c, Some(b));
                }
            }
            to_go[i][a] = best;
        }
    }
    for i in 0..m {
        for c in 0..costs.nodes[i].len() {
            if labels[i][c].is_empty() || !to_go[i][c].0.is_finite() {
                continue;
            }
            let mut chain = backtrack(i, c, 0);
            let mut k = c;
            for j in i..m - 1 {
                k = to_go[j][k].1.expect("finite completion has a successor");
                chain.push(k);
            }
            push(chain, &mut out);
        }
    }
    out.sort_by(|a, b| costs.rank(a, b));
    out
}

/// A searched path for one channel.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CandidatePath {
    pub channel: u32,
    pub cost: f64,
    pub stations: Vec<f64>,
    /// Lateral offset from the initial guess at each station.
    pub offsets: Vec<f64>,
    pub polyline: Polyline,
}

/// All ranked candidates of a lattice, before suppression.
pub fn dp_search(
    lattice: &StationLattice,
    channel: &ChannelField,
    grid: &GridFrame,
    cfg: &SearchConfig,
) -> Result<Vec<CandidatePath>> {
    let costs = LatticeCosts::evaluate(lattice, channel, grid, cfg);
    let chains = dp_chains(&costs, cfg.beam_width);
    if chains.is_empty() {
        return Err(Error::NoPath {
            channel: channel.id,
        });
    }
    chains
        .into_iter()
        .map(|(chain, cost)| {
            let points = chain.iter().enumerate().map(|(i, &c)| lattice.point(i, c));
            Ok(CandidatePath {
                channel: channel.id,
                cost,
                stations: lattice.stations.clone(),
                offsets: chain
                    .iter()
                    .enumerate()
                    .map(|(i, &c)| lattice.clusters[i][c].offset)
                    .collect(),
                polyline: Polyline::from_points_dedup(points)?,
            })
        })
        .collect()
}

/// Fraction of stations at which `c` is farther than `threshold` laterally
/// from every path in `kept`.
pub fn distinct_fraction(c: &CandidatePath, kept: &[CandidatePath], threshold: f64) -> f64 {
    if c.offsets.is_empty() {
        return 0.0;
    }
    let far = (0..c.offsets.len())
        .filter(|&k| {
            kept.iter()
                .all(|p| (c.offsets[k] - p.offsets[k]).abs() > threshold)
        })
        .count();
    far as f64 / c.offsets.len() as f64
}

/// Keeps, in ascending cost order, candidates that differ from every kept
/// path at more than `nms_fraction` of the stations. The cheapest is always kept.
pub fn non_maximum_suppress(
    mut candidates: Vec<CandidatePath>,
    cfg: &SearchConfig,
) -> Vec<CandidatePath> {
    candidates.sort_by(|a, b| a.cost.total_cmp(&b.cost));
    let mut kept: Vec<CandidatePath> = Vec::new();
    for c in candidates {
        if kept.is_empty()
            || distinct_fraction(&c, &kept, cfg.nms_lateral_threshold) > cfg.nms_fraction
        {
            kept.push(c);
        }
    }
    kept
}

/// Initial guess, lattice, DP and suppression for one channel.
pub fn search_channel(
    channel: &ChannelField,
    grid: &GridFrame,
    cfg: &SearchConfig,
) -> Result<Vec<CandidatePath>> {
    let l_init = initial_guess_search(channel, grid, cfg)?;
    let lattice = build_lattice(channel, grid, l_init, cfg)?;
    let candidates = dp_search(&lattice, channel, grid, cfg)?;
    Ok(non_maximum_suppress(candidates, cfg))
}

/// Outcome of searching every channel of a field.
#[derive(Debug, Default)]
pub struct SearchOutcome {
    /// Kept candidates, ordered by channel then cost.
    pub candidates: Vec<CandidatePath>,
    pub failures: Vec<(u32, Error)>,
}

pub fn search_field(field: &FlowField, cfg: &SearchConfig) -> SearchOutcome {
    let results: Vec<(u32, Result<Vec<CandidatePath>>)> = field
        .channels()
        .par_iter()
        .map(|ch| (ch.id, search_channel(ch, field.frame(), cfg)))
        .collect();
    let mut out = SearchOutcome::default();
    for (id, r) in results {
        match r {
            Ok(c) => out.candidates.extend(c),
            Err(e) => out.failures.push((id, e)),
        }
    }
    out
}
