//! Seeded synthetic intersection traffic with ground truth: lane-level
//! movements on circular-arc turn geometry, correlated lateral tracking
//! noise, filter-defect traces, re-routed traces and bimodal turns.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::{ReferencePath, TurnType};
use crate::geometry::{normalize_angle, Polygon, Polyline, Vec2};
use crate::roi::RoiSpec;
use crate::trajectory::{LogRecord, RejectReason, VEHICLE_WIDTH};

pub const VEHICLE_LENGTH: f64 = 4.5;

/// Upstream/downstream extension of reference centerlines beyond the traces, meters.
const REFERENCE_EXTENSION: f64 = 10.0;
const POLE_SIZE: f64 = 0.6;
/// Pole row distance beyond the outermost lane edge, meters.
const POLE_CLEARANCE: f64 = 2.0;
const FRAGMENT_DURATION: f64 = 2.5;
const DRIFT_JUMP: f64 = 1.25;
const DRIFT_DURATION: f64 = 0.3;
const MAX_TURN_RADIUS: f64 = 25.0;
/// Heading-rate ceiling for clean motion, well below the drift threshold.
const COMFORT_YAW_RATE: f64 = 0.8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Movement {
    pub from_arm: usize,
    pub turn: TurnType,
}

impl Movement {
    /// Arm index the movement leaves through.
    pub fn to_arm(&self) -> usize {
        match self.turn {
            TurnType::Left => (self.from_arm + 3) % 4,
            TurnType::Right => (self.from_arm + 1) % 4,
            TurnType::Straight => (self.from_arm + 2) % 4,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseSpec {
    /// Stationary standard deviation of the lateral offset, meters.
    pub lateral_sigma: f64,
    pub heading_sigma: f64,
    /// AR(1) coefficient of the lateral offset per sample.
    pub correlation: f64,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self {
            lateral_sigma: 0.2,
            heading_sigma: 0.02,
            correlation: 0.95,
        }
    }
}

/// Per-trace probabilities of the filter defects; at most one per trace.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DefectRates {
    pub fragment: f64,
    pub drift: f64,
    pub collide: f64,
}

/// Half the traces of one left-turn lane swing inward through the ROI.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BimodalSpec {
    pub from_arm: usize,
    pub lane: usize,
    /// Peak separation between the two modes, meters.
    pub amplitude: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioSpec {
    pub seed: u64,
    pub arms: usize,
    pub lanes: usize,
    pub lane_width: f64,
    pub movements: Vec<Movement>,
    pub traces_per_movement: usize,
    pub noise: NoiseSpec,
    pub defects: DefectRates,
    pub reroute_fraction: f64,
    /// Rightward shift of re-routed traces, meters.
    pub reroute_offset: f64,
    pub bimodal: Option<BimodalSpec>,
    /// Cruise speed, m/s. Traces on tight paths slow down to keep a comfortable yaw rate.
    pub speed: f64,
    pub sample_rate: f64,
    /// ROI half-size beyond the lanes, meters.
    pub roi_margin: f64,
    /// Trace extent beyond the ROI on either side, meters.
    pub approach_length: f64,
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        Self::four_arm(0, 2, 15)
    }
}

impl ScenarioSpec {
    /// Four arms with every left, straight and right movement.
    pub fn four_arm(seed: u64, lanes: usize, traces_per_movement: usize) -> Self {
        let movements = (0..4)
            .flat_map(|a| {
                [TurnType::Left, TurnType::Straight, TurnType::Right]
                    .into_iter()
                    .map(move |turn| Movement { from_arm: a, turn })
            })
            .collect();
        Self {
            seed,
            arms: 4,
            lanes,
            lane_width: 3.5,
            movements,
            traces_per_movement,
            noise: NoiseSpec::default(),
            defects: DefectRates::default(),
            reroute_fraction: 0.0,
            reroute_offset: 5.0,
            bimodal: None,
            speed: 6.0,
            sample_rate: 10.0,
            roi_margin: 8.0,
            approach_length: 20.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(format!("scenario: {m}")));
        let p = [
            self.defects.fragment,
            self.defects.drift,
            self.defects.collide,
            self.reroute_fraction,
        ];
        if p.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return bad("probabilities must lie in [0, 1]");
        }
        if self.defects.fragment + self.defects.drift + self.defects.collide > 1.0 {
            return bad("defect rates must sum to at most 1");
        }
        if !(3..=4).contains(&self.arms) || self.lanes == 0 || self.traces_per_movement == 0 {
            return bad("need 3 or 4 arms, at least one lane and one trace per movement");
        }
        if !(self.lane_width > 0.0 && self.speed > 0.0 && self.sample_rate > 0.0) {
            return bad("lane width, speed and sample rate must be positive");
        }
        if !(self.roi_margin > 1.0 && self.approach_length > 0.0) {
            return bad("ROI margin must exceed 1 m and approach length be positive");
        }
        if self.noise.lateral_sigma < 0.0
            || self.noise.heading_sigma < 0.0
            || !(0.0..1.0).contains(&self.noise.correlation)
        {
            return bad("noise parameters out of range");
        }
        for m in &self.movements {
            if m.from_arm >= self.arms || m.to_arm() >= self.arms {
                return bad("movement references a missing arm");
            }
        }
        if let Some(b) = &self.bimodal {
            if b.lane >= self.lanes
                || !self.movements.contains(&Movement {
                    from_arm: b.from_arm,
                    turn: TurnType::Left,
                })
            {
                return bad("bimodal movement must be a generated left turn");
            }
        }
        Ok(())
    }

    /// ROI half-size.
    pub fn half_size(&self) -> f64 {
        self.lanes as f64 * self.lane_width + self.roi_margin
    }

    fn lane_offset(&self, lane: usize) -> f64 {
        (lane as f64 + 0.5) * self.lane_width
    }
}

/// Outward unit direction of arm `k`.
pub fn arm_direction(k: usize) -> Vec2 {
    Vec2::from_angle(k as f64 * FRAC_PI_2)
}

fn right_of(v: Vec2) -> Vec2 {
    Vec2::new(v.y, -v.x)
}

/// Square ROI whose edge `k` faces arm `k`.
pub fn scenario_roi(spec: &ScenarioSpec) -> Result<RoiSpec> {
    let h = spec.half_size();
    let polygon = Polygon::new(vec![
        Vec2::new(h, -h),
        Vec2::new(h, h),
        Vec2::new(-h, h),
        Vec2::new(-h, -h),
    ])?;
    Ok(RoiSpec::new(polygon))
}

/// Square poles along both curbs of every arm, outside the ROI.
pub fn roadside_poles(spec: &ScenarioSpec) -> Vec<Polygon> {
    let h = spec.half_size();
    let lateral = spec.lanes as f64 * spec.lane_width + POLE_CLEARANCE;
    let mut poles = Vec::new();
    for k in 0..spec.arms {
        let u = arm_direction(k);
        let n = u.perp();
        let mut r = h + 2.0;
        while r <= h + spec.approach_length - 2.0 {
            for side in [-1.0, 1.0] {
                let c = u * r + n * (side * lateral);
                let e = POLE_SIZE / 2.0;
                let pts =
                    [(-e, -e), (e, -e), (e, e), (-e, e)].map(|(dx, dy)| c + Vec2::new(dx, dy));
                poles.push(Polygon::new(pts.to_vec()).expect("pole square is valid"));
            }
            r += 3.0;
        }
    }
    poles
}

/// Lane-level centerline of a movement, extending `extent` beyond the ROI
/// on both sides. Turns are circular fillets between the lane lines.
pub fn movement_centerline(
    spec: &ScenarioSpec,
    m: Movement,
    lane: usize,
    extent: f64,
) -> Result<Polyline> {
    let h = spec.half_size();
    let o = spec.lane_offset(lane);
    let u_in = arm_direction(m.from_arm);
    let v = -u_in;
    let u_out = arm_direction(m.to_arm());
    let c_in = right_of(v) * o;
    let c_out = right_of(u_out) * o;
    // incoming line c_in + v t crosses the entry edge at t_entry
    let t_entry = c_in.dot(u_in) - h;
    let tau_exit = h - c_out.dot(u_out);
    let start = c_in + v * (t_entry - extent);
    let end = c_out + u_out * (tau_exit + extent);
    if m.turn == TurnType::Straight {
        return Polyline::new(vec![start, end]);
    }
    // lane lines meet at x = c_in + v t_x = c_out + u_out tau_x
    let t_x = (c_out - c_in).dot(v);
    let tau_x = (c_in - c_out).dot(u_out);
    let x = c_in + v * t_x;
    let radius = ((t_x - t_entry).min(tau_exit - tau_x) - 1.0).min(MAX_TURN_RADIUS);
    if !(radius > 0.0) {
        return Err(Error::InvalidGeometry(format!(
            "no room for a turn of lane {lane} from arm {}",
            m.from_arm
        )));
    }
    let p1 = x - v * radius;
    let left = m.turn == TurnType::Left;
    let center = if left {
        p1 + v.perp() * radius
    } else {
        p1 - v.perp() * radius
    };
    let a0 = (p1 - center).angle();
    let sweep = if left { FRAC_PI_2 } else { -FRAC_PI_2 };
    let steps = ((radius * FRAC_PI_2) / 0.25).ceil() as usize;
    let mut pts = vec![start];
    pts.extend(
        (0..=steps)
            .map(|k| center + Vec2::from_angle(a0 + sweep * k as f64 / steps as f64) * radius),
    );
    pts.push(end);
    Polyline::from_points_dedup(pts)
}

/// Arc lengths where a centerline enters and leaves the square ROI.
fn roi_span(line: &Polyline, roi: &RoiSpec) -> (f64, f64) {
    let mut hits = Vec::new();
    for k in 0..line.segment_count() {
        let (a, b) = (line.points()[k], line.points()[k + 1]);
        for c in roi.polygon().crossings(a, b) {
            hits.push(line.arc_lengths()[k] + c.t * a.distance(b));
        }
    }
    let first = hits.first().copied().unwrap_or(0.0);
    let last = hits.last().copied().unwrap_or(line.length());
    (first, last)
}

/// Inward swing of the second bimodal mode at arc length `s`.
fn bimodal_offset(s: f64, span: (f64, f64), amplitude: f64) -> f64 {
    if s <= span.0 || s >= span.1 {
        return 0.0;
    }
    amplitude * (PI * (s - span.0) / (span.1 - span.0)).sin().powi(2)
}

/// Left normal from a centred chord, continuous across polyline vertices so
/// that large offsets do not jump at every vertex.
fn smooth_normal(line: &Polyline, s: f64) -> Vec2 {
    const HALF_CHORD: f64 = 0.5;
    let a = line.point_at((s - HALF_CHORD).max(0.0));
    let b = line.point_at((s + HALF_CHORD).min(line.length()));
    (b - a)
        .normalized()
        .unwrap_or_else(|| line.tangent_at(s))
        .perp()
}

/// Deterministic lateral offset profile of one trace around its lane centerline.
#[derive(Clone, Copy, Debug)]
struct Profile {
    shift: f64,
    swing: Option<((f64, f64), f64)>,
}

impl Profile {
    fn at(&self, s: f64) -> f64 {
        self.shift
            + self
                .swing
                .map_or(0.0, |(span, a)| bimodal_offset(s, span, a))
    }

    fn point(&self, line: &Polyline, s: f64) -> Vec2 {
        line.point_at(s) + smooth_normal(line, s) * self.at(s)
    }

    fn heading(&self, line: &Polyline, s: f64) -> f64 {
        let h = 0.05;
        (self.point(line, s + h) - self.point(line, s - h)).angle()
    }

    /// Largest path curvature over `[s0, s1]`, by finite heading differences.
    fn max_curvature(&self, line: &Polyline, s0: f64, s1: f64) -> f64 {
        let step = 0.25;
        let mut kappa: f64 = 0.0;
        let mut prev = self.point(line, s0);
        let mut prev_heading: Option<f64> = None;
        let mut s = s0 + step;
        while s <= s1 {
            let p = self.point(line, s);
            let ds = p.distance(prev);
            if ds > 1e-9 {
                let h = (p - prev).angle();
                if let Some(h0) = prev_heading {
                    kappa = kappa.max(normalize_angle(h - h0).abs() / ds);
                }
                prev_heading = Some(h);
            }
            prev = p;
            s += step;
        }
        kappa
    }

    fn is_zero(&self) -> bool {
        self.shift == 0.0 && self.swing.is_none()
    }
}

/// Ground truth of one generated trace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceTruth {
    pub id: String,
    pub movement: Movement,
    pub to_arm: usize,
    pub lane: usize,
    /// Filter criterion this trace was built to violate.
    pub defect: Option<RejectReason>,
    pub rerouted: bool,
    /// 0 for the lane centerline, 1 for the swung bimodal mode.
    pub mode: u8,
}

/// A lane-level reference centerline with its labels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LaneReference {
    pub movement: Movement,
    pub lane: usize,
    pub mode: u8,
    pub tag: String,
    pub centerline: Polyline,
}

impl LaneReference {
    pub fn to_reference_path(&self) -> ReferencePath {
        ReferencePath {
            entry: self.tag.clone(),
            turn: self.movement.turn,
            polyline: self.centerline.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub traces: Vec<TraceTruth>,
    pub references: Vec<LaneReference>,
    pub roi: RoiSpec,
    pub obstacles: Vec<Polygon>,
}

impl GroundTruth {
    /// Expected channels as `(entry edge, exit edge, lane)`, one per movement lane with clean traces.
    pub fn channel_topology(&self) -> Vec<(usize, usize, usize)> {
        let mut t: Vec<(usize, usize, usize)> = self
            .traces
            .iter()
            .filter(|t| t.defect.is_none())
            .map(|t| (t.movement.from_arm, t.to_arm, t.lane))
            .collect();
        t.sort_unstable();
        t.dedup();
        t
    }

    pub fn trace(&self, id: &str) -> Option<&TraceTruth> {
        self.traces.iter().find(|t| t.id == id)
    }

    /// Reference of a movement lane and mode.
    pub fn reference(&self, movement: Movement, lane: usize, mode: u8) -> Option<&LaneReference> {
        self.references
            .iter()
            .find(|r| r.movement == movement && r.lane == lane && r.mode == mode)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    /// Log records of every trace, sorted by time then vehicle id.
    pub log: Vec<LogRecord>,
    pub truth: GroundTruth,
}

fn reference_tag(m: Movement, lane: usize, mode: u8) -> String {
    let base = format!("a{}l{}-{}", m.from_arm, lane, m.turn.as_str());
    if mode == 0 {
        base
    } else {
        format!("{base}-m{mode}")
    }
}

fn draw_defect(rng: &mut ChaCha8Rng, rates: &DefectRates, turn: TurnType) -> Option<RejectReason> {
    let u: f64 = rng.random();
    if u < rates.fragment {
        Some(RejectReason::ShortLifetime)
    } else if u < rates.fragment + rates.drift {
        Some(RejectReason::Drift)
    } else if u < rates.fragment + rates.drift + rates.collide {
        // a rightward shift would tighten a right turn past the heading-rate limit
        (turn != TurnType::Right).then_some(RejectReason::Collision)
    } else {
        None
    }
}

/// Generates the log and its ground truth. Same spec, same bytes.
pub fn generate(spec: &ScenarioSpec) -> Result<Scenario> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let roi = scenario_roi(spec)?;
    let obstacles = if spec.defects.collide > 0.0 {
        roadside_poles(spec)
    } else {
        Vec::new()
    };
    let pole_lateral = spec.lanes as f64 * spec.lane_width + POLE_CLEARANCE;
    let sigma = spec.noise.lateral_sigma;
    let innovation = Normal::new(0.0, sigma * (1.0 - spec.noise.correlation.powi(2)).sqrt())
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let stationary = Normal::new(0.0, sigma).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let heading_noise = Normal::new(0.0, spec.noise.heading_sigma)
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let dt = 1.0 / spec.sample_rate;
    let extent = spec.approach_length + REFERENCE_EXTENSION;

    let mut log = Vec::new();
    let mut truths = Vec::new();
    let mut references = Vec::new();
    let mut next_id = 1usize;

    for &m in &spec.movements {
        for lane in 0..spec.lanes {
            let line = movement_centerline(spec, m, lane, extent)?;
            let span = roi_span(&line, &roi);
            let swing = spec
                .bimodal
                .as_ref()
                .filter(|b| b.from_arm == m.from_arm && b.lane == lane && m.turn == TurnType::Left)
                .map(|b| (span, b.amplitude));
            references.push(LaneReference {
                movement: m,
                lane,
                mode: 0,
                tag: reference_tag(m, lane, 0),
                centerline: line.clone(),
            });
            if let Some(sw) = swing {
                let prof = Profile {
                    shift: 0.0,
                    swing: Some(sw),
                };
                let pts = line
                    .sample_arc_lengths(0.5)
                    .into_iter()
                    .map(|s| prof.point(&line, s));
                references.push(LaneReference {
                    movement: m,
                    lane,
                    mode: 1,
                    tag: reference_tag(m, lane, 1),
                    centerline: Polyline::from_points_dedup(pts)?,
                });
            }

            let (s_begin, s_end) = (REFERENCE_EXTENSION, line.length() - REFERENCE_EXTENSION);
            for k in 0..spec.traces_per_movement {
                let id = format!("v{next_id:04}");
                next_id += 1;
                let defect = draw_defect(&mut rng, &spec.defects, m.turn);
                let rerouted = rng.random::<f64>() < spec.reroute_fraction;
                let mode = u8::from(swing.is_some() && k % 2 == 1);
                let jitter = rng.random_range(0.9..1.1);
                let t0 = (truths.len() as f64) * 0.7 + rng.random_range(0.0..0.5);

                let mut profile = Profile {
                    shift: 0.0,
                    swing: if mode == 1 { swing } else { None },
                };
                if rerouted {
                    profile.shift -= spec.reroute_offset;
                }
                if defect == Some(RejectReason::Collision) {
                    profile.shift -= pole_lateral - spec.lane_offset(lane);
                }

                // slow down where the path is tight, as drivers do
                let kappa = profile.max_curvature(&line, s_begin, s_end);
                let speed = spec.speed.min(COMFORT_YAW_RATE / kappa.max(1e-9) / 1.1) * jitter;

                let mut e = stationary.sample(&mut rng);
                let mut records = Vec::new();
                let mut s = s_begin;
                let mut t = t0;
                while s <= s_end {
                    let lateral = e.clamp(-3.0 * sigma, 3.0 * sigma);
                    let center = profile.point(&line, s) + smooth_normal(&line, s) * lateral;
                    let heading = if profile.is_zero() {
                        line.heading_at(s)
                    } else {
                        profile.heading(&line, s)
                    };
                    records.push(LogRecord {
                        t,
                        id: id.clone(),
                        x: center.x,
                        y: center.y,
                        theta: heading + heading_noise.sample(&mut rng),
                        l: VEHICLE_LENGTH,
                        w: VEHICLE_WIDTH,
                    });
                    e = spec.noise.correlation * e + innovation.sample(&mut rng);
                    s += speed * dt;
                    t += dt;
                }

                match defect {
                    Some(RejectReason::ShortLifetime) => {
                        let keep = (FRAGMENT_DURATION / dt).floor() as usize;
                        let first = rng.random_range(0..records.len() - keep);
                        records = records[first..first + keep].to_vec();
                    }
                    Some(RejectReason::Drift) => {
                        // heading glitch at the sample nearest the ROI center
                        let mid = (0..records.len())
                            .min_by(|&a, &b| {
                                let ra = Vec2::new(records[a].x, records[a].y).norm();
                                let rb = Vec2::new(records[b].x, records[b].y).norm();
                                ra.total_cmp(&rb)
                            })
                            .unwrap();
                        let n = (DRIFT_DURATION / dt).round() as usize;
                        for r in records.iter_mut().skip(mid).take(n) {
                            r.theta += DRIFT_JUMP;
                        }
                    }
                    _ => {}
                }
                log.extend(records);
                truths.push(TraceTruth {
                    id,
                    movement: m,
                    to_arm: m.to_arm(),
                    lane,
                    defect,
                    rerouted,
                    mode,
                });
            }
        }
    }
    log.sort_by(|a, b| a.t.total_cmp(&b.t).then_with(|| a.id.cmp(&b.id)));
    Ok(Scenario {
        log,
        truth: GroundTruth {
            traces: truths,
            references,
            roi,
            obstacles,
        },
    })
}
