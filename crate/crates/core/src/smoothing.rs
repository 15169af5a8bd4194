//! Corridor smoothing of searched paths as a box-constrained convex QP over
//! per-sample lateral offsets.
//!
//! With samples `p_k`, unit normals `n_k` and offsets `x_k`, the smoothed
//! points are `q_k = p_k + x_k n_k` and the objective is
//! `w_s Σ |q_{k-1} - 2 q_k + q_{k+1}|² + w_f Σ x_k²` subject to
//! `|x_k| <= max_lateral_deviation` and `x_0 = x_{n-1} = 0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Polyline, Vec2};
use crate::search::CandidatePath;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SmoothConfig {
    pub max_lateral_deviation: f64,
    pub smoothness_weight: f64,
    pub fidelity_weight: f64,
    pub sample_spacing: f64,
    /// KKT tolerance of the active-set solver.
    pub tolerance: f64,
}

impl Default for SmoothConfig {
    fn default() -> Self {
        Self {
            max_lateral_deviation: 0.75,
            smoothness_weight: 100.0,
            fidelity_weight: 1.0,
            sample_spacing: 0.5,
            tolerance: 1e-6,
        }
    }
}

impl SmoothConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.max_lateral_deviation > 0.0)
            || !(self.sample_spacing > 0.0)
            || !(self.tolerance > 0.0)
        {
            return Err(Error::InvalidConfig(
                "smooth.max_lateral_deviation, smooth.sample_spacing and smooth.tolerance must be positive".into(),
            ));
        }
        if self.smoothness_weight < 0.0 || self.fidelity_weight < 0.0 {
            return Err(Error::InvalidConfig(
                "smoothing weights must be non-negative".into(),
            ));
        }
        if self.smoothness_weight == 0.0 && self.fidelity_weight == 0.0 {
            return Err(Error::InvalidConfig(
                "smoothing weights cannot both be zero".into(),
            ));
        }
        Ok(())
    }
}

/// Symmetric matrix with bandwidth 2, stored as its lower diagonals.
#[derive(Clone, Debug, PartialEq)]
pub struct Band2 {
    /// `diag[i][k]` is entry `(i, i - k)` for `k` in `0..=2`.
    diag: Vec<[f64; 3]>,
}

impl Band2 {
    pub fn zeros(n: usize) -> Self {
        Self {
            diag: vec![[0.0; 3]; n],
        }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
        match hi - lo {
            k @ 0..=2 => self.diag[hi][k],
            _ => 0.0,
        }
    }

    fn add(&mut self, i: usize, j: usize, v: f64) {
        let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
        self.diag[hi][hi - lo] += v;
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let lo = i.saturating_sub(2);
                let hi = (i + 2).min(n - 1);
                (lo..=hi).map(|j| self.get(i, j) * x[j]).sum()
            })
            .collect()
    }

    /// Submatrix on sorted `idx`; stays within bandwidth 2.
    fn restrict(&self, idx: &[usize]) -> Band2 {
        let mut out = Band2::zeros(idx.len());
        for a in 0..idx.len() {
            for k in 0..=2.min(a) {
                out.diag[a][k] = self.get(idx[a], idx[a - k]);
            }
        }
        out
    }

    /// Solves `self · x = b` by banded Cholesky. `None` if not positive definite.
    pub fn solve(&self, b: &[f64]) -> Option<Vec<f64>> {
        let n = self.len();
        let mut l = vec![[0.0f64; 3]; n];
        for i in 0..n {
            for k in (0..=2.min(i)).rev() {
                let j = i - k;
                let mut s = self.diag[i][k];
                // Σ_m L(i, m) L(j, m) over m < j within both bands
                for m in i.saturating_sub(2)..j {
                    s -= l[i][i - m] * l[j][j - m];
                }
                if k == 0 {
                    if !(s > 0.0) {
                        return None;
                    }
                    l[i][0] = s.sqrt();
                } else {
                    l[i][k] = s / l[j][0];
                }
            }
        }
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut s = b[i];
            for k in 1..=2.min(i) {
                s -= l[i][k] * y[i - k];
            }
            y[i] = s / l[i][0];
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in 1..=2 {
                if i + k < n {
                    s -= l[i + k][k] * x[i + k];
                }
            }
            x[i] = s / l[i][0];
        }
        Some(x)
    }
}

/// The smoothing QP over the interior offsets `x_1 … x_{n-2}`.
#[derive(Clone, Debug)]
pub struct SmoothingProblem {
    points: Vec<Vec2>,
    normals: Vec<Vec2>,
    bound: f64,
    w_s: f64,
    w_f: f64,
}

impl SmoothingProblem {
    /// Samples `line` every `cfg.sample_spacing` (plus its end, absorbing a
    /// final gap shorter than half the spacing) and attaches vertex normals.
    pub fn new(line: &Polyline, cfg: &SmoothConfig) -> Result<Self> {
        let required = 3.0 * cfg.sample_spacing;
        if line.length() < required {
            return Err(Error::TooShort {
                length: line.length(),
                required,
            });
        }
        let mut points: Vec<Vec2> = line
            .sample_arc_lengths(cfg.sample_spacing)
            .into_iter()
            .map(|s| line.point_at(s))
            .collect();
        points[0] = line.start();
        *points.last_mut().unwrap() = line.end();
        // a sliver before the pinned end would turn sharply under any offset
        let n = points.len();
        if n > 4 && points[n - 2].distance(points[n - 1]) < 0.5 * cfg.sample_spacing {
            points.remove(n - 2);
        }
        let n = points.len();
        let normals = (0..n)
            .map(|k| {
                let (a, b) = (points[k.saturating_sub(1)], points[(k + 1).min(n - 1)]);
                (b - a)
                    .normalized()
                    .map_or(Vec2::new(0.0, 1.0), |t| t.perp())
            })
            .collect();
        Ok(Self {
            points,
            normals,
            bound: cfg.max_lateral_deviation,
            w_s: cfg.smoothness_weight,
            w_f: cfg.fidelity_weight,
        })
    }

    /// Number of samples, endpoints included.
    pub fn samples(&self) -> usize {
        self.points.len()
    }

    /// Number of free offsets.
    pub fn dim(&self) -> usize {
        self.points.len() - 2
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    fn full(&self, x: &[f64]) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.samples());
        v.push(0.0);
        v.extend_from_slice(x);
        v.push(0.0);
        v
    }

    /// Offset-applied sample positions.
    pub fn positions(&self, x: &[f64]) -> Vec<Vec2> {
        let full = self.full(x);
        self.points
            .iter()
            .zip(&self.normals)
            .zip(&full)
            .map(|((&p, &n), &d)| p + n * d)
            .collect()
    }

    fn second_differences(&self, x: &[f64]) -> Vec<Vec2> {
        let q = self.positions(x);
        q.windows(3).map(|w| w[0] - w[1] * 2.0 + w[2]).collect()
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        let smooth: f64 = self
            .second_differences(x)
            .iter()
            .map(|r| r.norm_squared())
            .sum();
        let fid: f64 = x.iter().map(|v| v * v).sum();
        self.w_s * smooth + self.w_f * fid
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let r = self.second_differences(x);
        let n = self.samples();
        let mut g = vec![0.0; n];
        // r_k (k = 1..n-2 in sample indexing) touches samples k-1, k, k+1
        for (m, rk) in r.iter().enumerate() {
            let k = m + 1;
            g[k - 1] += 2.0 * self.w_s * rk.dot(self.normals[k - 1]);
            g[k] += 2.0 * self.w_s * rk.dot(self.normals[k]) * -2.0;
            g[k + 1] += 2.0 * self.w_s * rk.dot(self.normals[k + 1]);
        }
        (1..n - 1)
            .map(|k| g[k] + 2.0 * self.w_f * x[k - 1])
            .collect()
    }

    /// `(H, g)` with `objective(x) = ½ xᵀHx + gᵀx + const`.
    pub fn quadratic(&self) -> (Band2, Vec<f64>) {
        let n = self.samples();
        let m = self.dim();
        let mut h = Band2::zeros(m);
        let mut g = vec![0.0; m];
        for k in 1..n - 1 {
            let b = self.points[k - 1] - self.points[k] * 2.0 + self.points[k + 1];
            let terms = [(k - 1, 1.0), (k, -2.0), (k + 1, 1.0)];
            for &(i, ci) in &terms {
                if i == 0 || i == n - 1 {
                    continue;
                }
                let ai = self.normals[i] * ci;
                g[i - 1] += 2.0 * self.w_s * ai.dot(b);
                for &(j, cj) in &terms {
                    if j == 0 || j == n - 1 || j > i {
                        continue;
                    }
                    h.add(i - 1, j - 1, 2.0 * self.w_s * ai.dot(self.normals[j] * cj));
                }
            }
        }
        for i in 0..m {
            h.add(i, i, 2.0 * self.w_f);
        }
        (h, g)
    }

    /// Largest violation of the box-constrained KKT conditions at `x`.
    pub fn kkt_residual(&self, x: &[f64]) -> f64 {
        let g = self.gradient(x);
        let b = self.bound;
        g.iter()
            .zip(x)
            .map(|(&gi, &xi)| {
                let infeasible = (xi.abs() - b).max(0.0);
                let stat = if xi >= b - 1e-12 {
                    gi.max(0.0) // at the upper bound the gradient may only push outward
                } else if xi <= -b + 1e-12 {
                    (-gi).max(0.0)
                } else {
                    gi.abs()
                };
                infeasible.max(stat)
            })
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Bound {
    Free,
    Lower,
    Upper,
}

/// Primal active-set method for `min ½xᵀHx + gᵀx` s.t. `|x_i| <= bound`,
/// starting from the feasible point `x = 0`.
pub fn solve_box_qp(
    h: &Band2,
    g: &[f64],
    bound: f64,
    tol: f64,
    max_iter: usize,
) -> Result<Vec<f64>> {
    let m = g.len();
    let mut x = vec![0.0; m];
    let mut state = vec![Bound::Free; m];
    let grad = |x: &[f64]| -> Vec<f64> { h.mul_vec(x).iter().zip(g).map(|(a, b)| a + b).collect() };
    let failure = |iterations: usize, x: &[f64]| {
        let gr = grad(x);
        Error::SolverFailure {
            iterations,
            residual: gr.iter().map(|v| v.abs()).fold(0.0, f64::max),
        }
    };

    for iter in 0..max_iter {
        let free: Vec<usize> = (0..m).filter(|&i| state[i] == Bound::Free).collect();
        let mut y = x.clone();
        if !free.is_empty() {
            let rhs: Vec<f64> = free
                .iter()
                .map(|&i| {
                    let fixed: f64 = (i.saturating_sub(2)..=(i + 2).min(m - 1))
                        .filter(|&j| state[j] != Bound::Free)
                        .map(|j| h.get(i, j) * x[j])
                        .sum();
                    -(g[i] + fixed)
                })
                .collect();
            let sol = h
                .restrict(&free)
                .solve(&rhs)
                .ok_or_else(|| failure(iter, &x))?;
            for (&i, v) in free.iter().zip(sol) {
                y[i] = v;
            }
        }

        // longest feasible step towards y
        let mut alpha = 1.0;
        let mut blocking = None;
        for &i in &free {
            let p = y[i] - x[i];
            let limit = if p > 0.0 {
                (bound - x[i]) / p
            } else if p < 0.0 {
                (-bound - x[i]) / p
            } else {
                continue;
            };
            if limit < alpha {
                alpha = limit.max(0.0);
                blocking = Some((i, if p > 0.0 { Bound::Upper } else { Bound::Lower }));
            }
        }
        for &i in &free {
            x[i] += alpha * (y[i] - x[i]);
        }
        if let Some((i, b)) = blocking {
            state[i] = b;
            x[i] = if b == Bound::Upper { bound } else { -bound };
            continue;
        }

        // at the subspace minimizer: release the worst wrong-signed multiplier
        let gr = grad(&x);
        let worst = (0..m)
            .filter_map(|i| match state[i] {
                Bound::Upper if gr[i] > tol => Some((i, gr[i])),
                Bound::Lower if gr[i] < -tol => Some((i, -gr[i])),
                _ => None,
            })
            .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)));
        match worst {
            Some((i, _)) => state[i] = Bound::Free,
            None => return Ok(x),
        }
    }
    Err(failure(max_iter, &x))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoothedPath {
    pub channel: u32,
    pub polyline: Polyline,
    /// Offsets along the input normals, endpoints included.
    pub offsets: Vec<f64>,
    pub max_curvature: f64,
    pub max_deviation: f64,
    pub objective: f64,
}

/// Smooths a bare polyline.
pub fn smooth_polyline(
    line: &Polyline,
    cfg: &SmoothConfig,
) -> Result<(SmoothingProblem, Vec<f64>)> {
    let problem = SmoothingProblem::new(line, cfg)?;
    let (h, g) = problem.quadratic();
    let x = solve_box_qp(
        &h,
        &g,
        problem.bound(),
        cfg.tolerance,
        10 * problem.samples(),
    )?;
    Ok((problem, x))
}

pub fn smooth_path(path: &CandidatePath, cfg: &SmoothConfig) -> Result<SmoothedPath> {
    let (problem, x) = smooth_polyline(&path.polyline, cfg)?;
    let polyline = Polyline::from_points_dedup(problem.positions(&x))?;
    Ok(SmoothedPath {
        channel: path.channel,
        max_curvature: polyline.curvatures().into_iter().fold(0.0, f64::max),
        max_deviation: x.iter().map(|v| v.abs()).fold(0.0, f64::max),
        objective: problem.objective(&x),
        offsets: problem.full(&x),
        polyline,
    })
}
