//! 3-D primitives, the circumsphere construction, and the inclination
//! predicates that bound the admissible ground slope.
//!
//! Angles are radians throughout; `z` is vertical.

use std::f64::consts::{FRAC_PI_4, FRAC_PI_6, TAU};
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Result, WobbleError};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

pub type Point3 = Vec3;

impl Vec3 {
    pub const ZERO: Vec3 = Vec3::new(0.0, 0.0, 0.0);
    pub const X: Vec3 = Vec3::new(1.0, 0.0, 0.0);
    pub const Y: Vec3 = Vec3::new(0.0, 1.0, 0.0);
    pub const Z: Vec3 = Vec3::new(0.0, 0.0, 1.0);

    #[inline]
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    #[inline]
    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    #[inline]
    pub fn cross(self, o: Vec3) -> Vec3 {
        Vec3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    #[inline]
    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.norm_sq().sqrt()
    }

    #[inline]
    pub fn dist(self, o: Vec3) -> f64 {
        (self - o).norm()
    }

    pub fn normalized(self) -> Vec3 {
        self / self.norm()
    }

    #[inline]
    pub fn horizontal_norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    /// Azimuth of the horizontal projection, in `(-π, π]`.
    #[inline]
    pub fn azimuth(self) -> f64 {
        self.y.atan2(self.x)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    #[inline]
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Vec3 {
    #[inline]
    fn add_assign(&mut self, o: Vec3) {
        *self = *self + o;
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    #[inline]
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    #[inline]
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Mul<Vec3> for f64 {
    type Output = Vec3;
    #[inline]
    fn mul(self, v: Vec3) -> Vec3 {
        v * self
    }
}

impl Div<f64> for Vec3 {
    type Output = Vec3;
    #[inline]
    fn div(self, s: f64) -> Vec3 {
        Vec3::new(self.x / s, self.y / s, self.z / s)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    #[inline]
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

/// Sphere through four contact points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphereS {
    pub center: Point3,
    pub radius: f64,
}

impl SphereS {
    /// Point at azimuth `phi` and latitude `lat` about the center.
    #[inline]
    pub fn point(&self, phi: f64, lat: f64) -> Point3 {
        let (sl, cl) = lat.sin_cos();
        let (sp, cp) = phi.sin_cos();
        self.center + Vec3::new(cl * cp, cl * sp, sl) * self.radius
    }

    pub fn azimuth_of(&self, p: Point3) -> f64 {
        (p - self.center).azimuth()
    }

    pub fn latitude_of(&self, p: Point3) -> f64 {
        let d = p - self.center;
        d.z.atan2(d.horizontal_norm())
    }
}

/// Slope thresholds of the two motions and of their building blocks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Thresholds {
    /// Below this slope the sphere/ground curve has no double point.
    pub theta_gamma_simple: f64,
    /// At or below this slope the chord march is unblocked and monotone.
    pub theta_motion_a: f64,
    /// Below this slope three mutually orthogonal chords cannot all be
    /// nearly horizontal; `arctan(1/√2) = arcsin(1/√3)`.
    pub theta_motion_b: f64,
    /// Below this slope a vertical half circle centered on a foot meets the
    /// ground exactly once.
    pub theta_halfcircle: f64,
}

impl Thresholds {
    pub fn get() -> Thresholds {
        Thresholds {
            theta_gamma_simple: FRAC_PI_6,
            theta_motion_a: 14.47_f64.to_radians(),
            theta_motion_b: (1.0 / 2f64.sqrt()).atan(),
            theta_halfcircle: FRAC_PI_4,
        }
    }

    /// The four constants in degrees, in declaration order.
    pub fn degrees(&self) -> [(&'static str, f64); 4] {
        [
            ("theta_gamma_simple", self.theta_gamma_simple.to_degrees()),
            ("theta_motion_A", self.theta_motion_a.to_degrees()),
            ("theta_motion_B", self.theta_motion_b.to_degrees()),
            ("theta_halfcircle", self.theta_halfcircle.to_degrees()),
        ]
    }
}

pub fn thresholds_report() -> Thresholds {
    Thresholds::get()
}

/// Inclination of the chord `pq` to the horizontal, in `[0, π/2]`.
pub fn inclination(p: Point3, q: Point3) -> Result<f64> {
    let d = q - p;
    let n = d.norm();
    if n == 0.0 || !n.is_finite() {
        return Err(WobbleError::Domain(format!(
            "inclination of coincident or non-finite points {p:?}, {q:?}"
        )));
    }
    Ok(unit_inclination(d / n))
}

#[inline]
pub(crate) fn unit_inclination(u: Vec3) -> f64 {
    u.z.abs().min(1.0).asin()
}

/// Relative volume below which four points count as coplanar.
pub const COPLANAR_EPS: f64 = 1e-9;

/// Unique sphere through four non-coplanar points.
///
/// The center solves the three bisector-plane equations
/// `2 (pᵢ − p₁)·O = |pᵢ|² − |p₁|²`, written relative to `p₁` and solved by
/// Cramer's rule. Returns [`WobbleError::Degenerate`] when the tetrahedron
/// volume is below `1e-9 · s³`, `s` being the longest edge from `p₁`.
pub fn sphere_through(p1: Point3, p2: Point3, p3: Point3, p4: Point3) -> Result<SphereS> {
    let a = p2 - p1;
    let b = p3 - p1;
    let c = p4 - p1;
    let scale = a.norm().max(b.norm()).max(c.norm());
    let triple = a.dot(b.cross(c));
    let volume = triple.abs() / 6.0;
    let threshold = COPLANAR_EPS * scale.powi(3);
    if !(volume > threshold) {
        return Err(WobbleError::Degenerate { volume, threshold });
    }
    let num = b.cross(c) * a.norm_sq() + c.cross(a) * b.norm_sq() + a.cross(b) * c.norm_sq();
    let offset = num / (2.0 * triple);
    let center = p1 + offset;
    let radius =
        (offset.norm() + center.dist(p2) + center.dist(p3) + center.dist(p4)) / 4.0;
    Ok(SphereS { center, radius })
}

/// Rotate `p` by `angle` about the oriented axis from `axis_a` to `axis_b`
/// (right-hand rule).
pub fn rotate_about_axis(p: Point3, axis_a: Point3, axis_b: Point3, angle: f64) -> Result<Point3> {
    let d = axis_b - axis_a;
    let n = d.norm();
    if !(n > 0.0) || !n.is_finite() {
        return Err(WobbleError::Domain(format!(
            "degenerate rotation axis {axis_a:?} -> {axis_b:?}"
        )));
    }
    Ok(rotate_unit(p, axis_a, d / n, angle))
}

/// Rodrigues rotation about the line through `origin` with unit direction `k`.
#[inline]
pub(crate) fn rotate_unit(p: Point3, origin: Point3, k: Vec3, angle: f64) -> Point3 {
    if angle == 0.0 {
        return p;
    }
    let v = p - origin;
    let (s, c) = angle.sin_cos();
    origin + v * c + k.cross(v) * s + k * (k.dot(v) * (1.0 - c))
}

const ORTHO_TOL: f64 = 1e-9;

/// Residual of `sin²θ_u + sin²θ_v + sin²θ_w = 1` for an orthonormal triple,
/// `θ` being each vector's inclination.
///
/// The identity forces `max θ ≥ arcsin(1/√3) = arctan(1/√2)`: three
/// mutually orthogonal directions cannot all be flatter than 35.264°.
pub fn orthotriple_inclination_identity(u: Vec3, v: Vec3, w: Vec3) -> Result<f64> {
    for (name, x) in [("u", u), ("v", v), ("w", w)] {
        let e = (x.norm() - 1.0).abs();
        if !(e <= ORTHO_TOL) {
            return Err(WobbleError::Domain(format!(
                "vector {name} is not unit length (|{name}| - 1 = {e:e})"
            )));
        }
    }
    for (name, d) in [("u·v", u.dot(v)), ("u·w", u.dot(w)), ("v·w", v.dot(w))] {
        if !(d.abs() <= ORTHO_TOL) {
            return Err(WobbleError::Domain(format!(
                "triple is not orthogonal: {name} = {d:e}"
            )));
        }
    }
    let s: f64 = [u, v, w]
        .iter()
        .map(|x| unit_inclination(*x).sin().powi(2))
        .sum();
    Ok((s - 1.0).abs())
}

/// Largest inclination in a triple.
pub fn max_inclination(u: Vec3, v: Vec3, w: Vec3) -> f64 {
    unit_inclination(u)
        .max(unit_inclination(v))
        .max(unit_inclination(w))
}

/// Ratios `(α, β)` locating the crossing `P` of chords 1–3 and 2–4 of the
/// unit circle: `P = (1−α)p₁ + αp₃ = (1−β)p₂ + βp₄`.
pub fn diagonal_intersection_ratios(angles: [f64; 4]) -> Result<(f64, f64)> {
    let rel: Vec<f64> = angles
        .iter()
        .map(|a| (a - angles[0]).rem_euclid(TAU))
        .collect();
    if !(rel[1] > 0.0 && rel[1] < rel[2] && rel[2] < rel[3] && rel[3] < TAU) {
        return Err(WobbleError::Domain(format!(
            "foot angles {:?} are not in strictly increasing cyclic order; diagonals do not cross",
            angles.map(f64::to_degrees)
        )));
    }
    let p: Vec<[f64; 2]> = angles.iter().map(|a| [a.cos(), a.sin()]).collect();
    // α (p3 − p1) − β (p4 − p2) = p2 − p1
    let d13 = [p[2][0] - p[0][0], p[2][1] - p[0][1]];
    let d24 = [p[3][0] - p[1][0], p[3][1] - p[1][1]];
    let rhs = [p[1][0] - p[0][0], p[1][1] - p[0][1]];
    let det = -d13[0] * d24[1] + d13[1] * d24[0];
    let alpha = (-rhs[0] * d24[1] + rhs[1] * d24[0]) / det;
    let beta = (d13[0] * rhs[1] - d13[1] * rhs[0]) / det;
    Ok((alpha, beta))
}

/// Azimuth difference `to − from` unwrapped into `[0, 2π)`.
#[inline]
pub fn ccw_delta(from: f64, to: f64) -> f64 {
    (to - from).rem_euclid(TAU)
}
