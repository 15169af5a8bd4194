use std::f64::consts::PI;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Resultant norm below which a set of directions has no defined mean.
pub const DEGENERATE_RESULTANT: f64 = 1e-9;

/// A point or vector in the local metric plane.
///
/// Serialized as a two-element array `[x, y]`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl From<[f64; 2]> for Vec2 {
    fn from(a: [f64; 2]) -> Self {
        Vec2::new(a[0], a[1])
    }
}

impl From<Vec2> for [f64; 2] {
    fn from(v: Vec2) -> Self {
        [v.x, v.y]
    }
}

impl From<(f64, f64)> for Vec2 {
    fn from((x, y): (f64, f64)) -> Self {
        Vec2::new(x, y)
    }
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    #[inline]
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    /// Unit vector pointing at `angle` radians from +x.
    #[inline]
    pub fn from_angle(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self::new(c, s)
    }

    #[inline]
    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the 3D cross product; positive when `o` is left of `self`.
    #[inline]
    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    #[inline]
    pub fn norm_squared(self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    #[inline]
    pub fn distance(self, o: Vec2) -> f64 {
        (self - o).norm()
    }

    /// Unit vector in the same direction, or `None` for a (near) zero vector.
    pub fn normalized(self) -> Option<Vec2> {
        let n = self.norm();
        (n > DEGENERATE_RESULTANT).then(|| self / n)
    }

    /// Counterclockwise perpendicular.
    #[inline]
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    #[inline]
    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }

    #[inline]
    pub fn rotate(self, angle: f64) -> Vec2 {
        let (s, c) = angle.sin_cos();
        Vec2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    #[inline]
    pub fn lerp(self, o: Vec2, t: f64) -> Vec2 {
        self + (o - self) * t
    }

    /// Cosine of the angle between two non-zero vectors.
    pub fn cos_angle(self, o: Vec2) -> f64 {
        let n = self.norm() * o.norm();
        if n <= 0.0 {
            return 1.0;
        }
        (self.dot(o) / n).clamp(-1.0, 1.0)
    }

    /// Unsigned angle between two vectors, in `[0, π]`.
    pub fn angle_to(self, o: Vec2) -> f64 {
        self.cos_angle(o).acos()
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    #[inline]
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl AddAssign for Vec2 {
    #[inline]
    fn add_assign(&mut self, o: Vec2) {
        self.x += o.x;
        self.y += o.y;
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    #[inline]
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl SubAssign for Vec2 {
    #[inline]
    fn sub_assign(&mut self, o: Vec2) {
        self.x -= o.x;
        self.y -= o.y;
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    #[inline]
    fn mul(self, k: f64) -> Vec2 {
        Vec2::new(self.x * k, self.y * k)
    }
}

impl Div<f64> for Vec2 {
    type Output = Vec2;
    #[inline]
    fn div(self, k: f64) -> Vec2 {
        Vec2::new(self.x / k, self.y / k)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    #[inline]
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// Wraps an angle into `(-π, π]`.
pub fn normalize_angle(angle: f64) -> f64 {
    let r = angle.rem_euclid(2.0 * PI);
    if r > PI {
        r - 2.0 * PI
    } else {
        r
    }
}

/// Vector-sum circular mean of a set of directions.
///
/// Inputs are expected to be unit vectors; the result is the normalized
/// resultant. Fails when the resultant vanishes (perfectly opposing flows).
pub fn circular_mean(directions: &[Vec2]) -> Result<Vec2> {
    let sum = directions.iter().fold(Vec2::ZERO, |acc, &d| acc + d);
    let n = sum.norm();
    if n <= DEGENERATE_RESULTANT {
        return Err(Error::DegenerateDirection(n));
    }
    Ok(sum / n)
}

/// Planar pose: position and heading.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pose2 {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Pose2 {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Self {
            x,
            y,
            theta: normalize_angle(theta),
        }
    }

    #[inline]
    pub fn position(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }

    #[inline]
    pub fn heading(&self) -> Vec2 {
        Vec2::from_angle(self.theta)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalize_angle_range() {
        assert_eq!(normalize_angle(PI), PI);
        assert!((normalize_angle(-PI) - PI).abs() < 1e-12);
        assert!((normalize_angle(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-12);
        assert!((normalize_angle(7.0) - (7.0 - 2.0 * PI)).abs() < 1e-12);
        for k in -20..20 {
            let a = normalize_angle(k as f64 * 0.77);
            assert!(a > -PI && a <= PI);
        }
    }

    #[test]
    fn circular_mean_identity_and_symmetry() {
        let m = circular_mean(&[Vec2::new(1.0, 0.0), Vec2::new(1.0, 0.0)]).unwrap();
        assert_eq!(m, Vec2::new(1.0, 0.0));
        let m = circular_mean(&[Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0)]).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((m.x - h).abs() < 1e-12 && (m.y - h).abs() < 1e-12);
    }

    #[test]
    fn circular_mean_across_wrap() {
        let a = Vec2::from_angle(PI - 0.1);
        let b = Vec2::from_angle(-PI + 0.1);
        let m = circular_mean(&[a, b]).unwrap();
        assert!((m.angle().abs() - PI).abs() < 1e-9);
    }

    #[test]
    fn circular_mean_opposing_is_degenerate() {
        let r = circular_mean(&[Vec2::new(1.0, 0.0), Vec2::new(-1.0, 0.0)]);
        assert!(matches!(r, Err(Error::DegenerateDirection(_))));
        assert!(matches!(
            circular_mean(&[]),
            Err(Error::DegenerateDirection(_))
        ));
    }

    #[test]
    fn circular_mean_perturbed_headings() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let base = 30f64.to_radians();
        let dirs: Vec<Vec2> = (0..100)
            .map(|_| Vec2::from_angle(base + rng.random_range(-10f64..10.0).to_radians()))
            .collect();
        // explicit vector-sum oracle
        let (sx, sy) = dirs
            .iter()
            .fold((0.0, 0.0), |(sx, sy), d| (sx + d.x, sy + d.y));
        let oracle = sy.atan2(sx);
        let m = circular_mean(&dirs).unwrap();
        assert!((m.angle() - oracle).abs() < 2f64.to_radians());
        assert!((m.angle() - base).abs() < 2f64.to_radians());
    }

    #[test]
    fn pose_normalizes_heading() {
        let p = Pose2::new(1.0, 2.0, 3.0 * PI);
        assert!((p.theta - PI).abs() < 1e-12);
    }
}
