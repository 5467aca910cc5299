//! Rigid table placement: settling three feet on the ground, signed foot
//! heights, square closure and the drop rotation about the 2–3 edge.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, SQRT_2};

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Condition, Result, WobbleError};
use crate::geometry::{rotate_unit, Point3, Thresholds, Vec3};
use crate::root::{crosses, try_bisect, PARAM_TOL};
use crate::terrain::Terrain;
use crate::warnings::{Policy, Warnings};

/// Contact tolerance relative to the table scale.
pub const CONTACT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TableShape {
    Square { side: f64 },
    /// Feet on a circle of radius `radius` at the given azimuths (radians).
    Circle { radius: f64, angles: [f64; 4] },
    /// Arbitrary horizontal foot positions, counterclockwise.
    Quad { points: [[f64; 2]; 4] },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TableSpec {
    pub shape: TableShape,
    pub leg_length: f64,
}

impl TableSpec {
    pub fn square(side: f64) -> Self {
        TableSpec {
            shape: TableShape::Square { side },
            leg_length: 0.7 * side,
        }
    }

    pub fn circle(radius: f64, angles: [f64; 4]) -> Self {
        TableSpec {
            shape: TableShape::Circle { radius, angles },
            leg_length: 0.7 * radius,
        }
    }

    pub fn quad(points: [[f64; 2]; 4]) -> Self {
        let mut t = TableSpec {
            shape: TableShape::Quad { points },
            leg_length: 0.0,
        };
        t.leg_length = 0.7 * t.scale();
        t
    }

    /// Regular half-hexagon: four consecutive vertices of a hexagon.
    pub fn half_hexagon(radius: f64) -> Self {
        TableSpec::circle(radius, [0.0, 60.0, 120.0, 180.0].map(f64::to_radians))
    }

    pub fn with_leg_length(mut self, leg_length: f64) -> Self {
        self.leg_length = leg_length;
        self
    }

    pub fn validate(&self) -> Result<()> {
        match self.shape {
            TableShape::Square { side } if !(side > 0.0 && side.is_finite()) => {
                return Err(WobbleError::Validation(format!("square side must be positive, got {side}")))
            }
            TableShape::Circle { radius, angles } => {
                if !(radius > 0.0 && radius.is_finite()) {
                    return Err(WobbleError::Validation(format!("circle radius must be positive, got {radius}")));
                }
                crate::geometry::diagonal_intersection_ratios(angles)
                    .map_err(|e| WobbleError::Validation(e.to_string()))?;
            }
            _ => {}
        }
        if !(self.leg_length >= 0.0) {
            return Err(WobbleError::Validation("leg length must be non-negative".into()));
        }
        let f = self.raw_feet();
        let cross = |a: [f64; 2], b: [f64; 2], c: [f64; 2]| {
            (b[0] - a[0]) * (c[1] - b[1]) - (b[1] - a[1]) * (c[0] - b[0])
        };
        for i in 0..4 {
            if !(cross(f[i], f[(i + 1) % 4], f[(i + 2) % 4]) > 0.0) {
                return Err(WobbleError::Validation(
                    "table feet must form a convex counterclockwise quadrilateral".into(),
                ));
            }
        }
        Ok(())
    }

    fn raw_feet(&self) -> [[f64; 2]; 4] {
        match self.shape {
            TableShape::Square { side } => {
                let h = side / 2.0;
                [[-h, -h], [h, -h], [h, h], [-h, h]]
            }
            TableShape::Circle { radius, angles } => angles.map(|a| [radius * a.cos(), radius * a.sin()]),
            TableShape::Quad { points } => points,
        }
    }

    /// Foot positions in the table frame: centroid at the origin and
    /// `p₂ − p₁` along `+u`.
    pub fn local_feet(&self) -> [[f64; 2]; 4] {
        let f = self.raw_feet();
        let cx = f.iter().map(|p| p[0]).sum::<f64>() / 4.0;
        let cy = f.iter().map(|p| p[1]).sum::<f64>() / 4.0;
        let ang = (f[1][1] - f[0][1]).atan2(f[1][0] - f[0][0]);
        let (s, c) = (-ang).sin_cos();
        f.map(|p| {
            let (x, y) = (p[0] - cx, p[1] - cy);
            [c * x - s * y, s * x + c * y]
        })
    }

    /// Characteristic length: `√2` times the RMS foot distance from the
    /// centroid, equal to the side for a square.
    pub fn scale(&self) -> f64 {
        match self.shape {
            TableShape::Square { side } => side,
            _ => {
                let f = self.local_feet();
                (f.iter().map(|p| p[0] * p[0] + p[1] * p[1]).sum::<f64>() / 4.0 * 2.0).sqrt()
            }
        }
    }

    /// Pairwise horizontal foot distances.
    pub fn reference_distances(&self) -> [[f64; 4]; 4] {
        let f = self.raw_feet();
        let mut d = [[0.0; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                d[i][j] = (f[i][0] - f[j][0]).hypot(f[i][1] - f[j][1]);
            }
        }
        d
    }

    /// Circle description of the table, if its feet are concyclic.
    /// A square maps to radius `L/√2` at 45°, 135°, 225°, 315°.
    pub fn as_circle(&self) -> Option<(f64, [f64; 4])> {
        match self.shape {
            TableShape::Square { side } => Some((side / SQRT_2, [45.0, 135.0, 225.0, 315.0].map(f64::to_radians))),
            TableShape::Circle { radius, angles } => Some((radius, angles)),
            TableShape::Quad { .. } => None,
        }
    }

    pub fn is_square(&self) -> bool {
        matches!(self.shape, TableShape::Square { .. })
    }

    /// Distance of foot 4 from the circle through feet 1–3.
    pub fn concyclicity_defect(&self) -> f64 {
        let f = self.raw_feet();
        let (ax, ay) = (f[0][0], f[0][1]);
        let (bx, by) = (f[1][0], f[1][1]);
        let (cx, cy) = (f[2][0], f[2][1]);
        let d = 2.0 * (ax * (by - cy) + bx * (cy - ay) + cx * (ay - by));
        let a2 = ax * ax + ay * ay;
        let b2 = bx * bx + by * by;
        let c2 = cx * cx + cy * cy;
        let ux = (a2 * (by - cy) + b2 * (cy - ay) + c2 * (ay - by)) / d;
        let uy = (a2 * (cx - bx) + b2 * (ax - cx) + c2 * (bx - ax)) / d;
        let r = (ax - ux).hypot(ay - uy);
        ((f[3][0] - ux).hypot(f[3][1] - uy) - r).abs()
    }
}

/// Four foot tips, labeled counterclockwise seen from above.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FootSet {
    pub p: [Point3; 4],
}

impl FootSet {
    pub fn new(p1: Point3, p2: Point3, p3: Point3, p4: Point3) -> Self {
        FootSet { p: [p1, p2, p3, p4] }
    }

    /// Largest deviation of a pairwise distance from the table's reference.
    pub fn rigidity_error(&self, table: &TableSpec) -> f64 {
        let d = table.reference_distances();
        let mut e: f64 = 0.0;
        for i in 0..4 {
            for j in i + 1..4 {
                e = e.max((self.p[i].dist(self.p[j]) - d[i][j]).abs());
            }
        }
        e
    }

    /// `((p₂−p₁) × (p₃−p₂))·ẑ`, positive for counterclockwise labeling.
    pub fn orientation(&self) -> f64 {
        (self.p[1] - self.p[0]).cross(self.p[2] - self.p[1]).z
    }

    /// Upward unit normal of the plane through feet 1, 2, 4.
    pub fn normal(&self) -> Vec3 {
        let n = (self.p[1] - self.p[0]).cross(self.p[3] - self.p[0]).normalized();
        if n.z < 0.0 {
            -n
        } else {
            n
        }
    }

    /// Relabel cyclically so that new foot `i` is old foot `i + shift`.
    pub fn relabeled(&self, shift: usize) -> FootSet {
        FootSet {
            p: std::array::from_fn(|i| self.p[(i + shift) % 4]),
        }
    }

    /// Horizontal azimuth of the edge `p₁ → p₂`.
    pub fn edge_azimuth(&self) -> f64 {
        (self.p[1] - self.p[0]).azimuth()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContactState {
    /// Foot height minus ground height beneath it.
    pub h: [f64; 4],
    pub contact: [bool; 4],
}

impl ContactState {
    pub fn max_abs(&self) -> f64 {
        self.h.iter().fold(0.0, |m, h| m.max(h.abs()))
    }

    pub fn max_abs_first_three(&self) -> f64 {
        self.h[..3].iter().fold(0.0, |m, h| m.max(h.abs()))
    }
}

/// Signed heights of the feet above the ground; `scale` sets the contact
/// tolerance `1e-9·scale`.
pub fn signed_heights(feet: &FootSet, terrain: &Terrain, scale: f64) -> Result<ContactState> {
    let mut h = [0.0; 4];
    for (i, p) in feet.p.iter().enumerate() {
        h[i] = p.z - terrain.eval(p.x, p.y)?;
    }
    Ok(ContactState {
        h,
        contact: h.map(|v| v.abs() < CONTACT_TOL * scale),
    })
}

fn placed(local: &[[f64; 2]; 4], center: [f64; 2], yaw: f64, q: [f64; 3]) -> [Point3; 4] {
    let [z0, pitch, roll] = q;
    let (sy, cy) = yaw.sin_cos();
    let (sp, cp) = pitch.sin_cos();
    let e1 = Vec3::new(cy * cp, sy * cp, sp);
    let h = Vec3::new(-sy, cy, 0.0);
    let k = e1.cross(h);
    let (sr, cr) = roll.sin_cos();
    let e2 = h * cr + k * sr;
    let c = Vec3::new(center[0], center[1], z0);
    local.map(|[u, v]| c + e1 * u + e2 * v)
}

const SETTLE_MAX_ITER: usize = 100;

/// Place the table so that feet 1, 2, 3 touch the ground.
///
/// Gauge: the horizontal projection of the foot centroid is `center_xy`
/// and the horizontal direction of `p₂ − p₁` has azimuth `yaw`. Height,
/// pitch and roll are solved by damped Newton iteration starting from a
/// horizontal table at the mean ground height under the feet.
pub fn settle_three_feet(table: &TableSpec, terrain: &Terrain, center_xy: [f64; 2], yaw: f64) -> Result<FootSet> {
    table.validate()?;
    let scale = table.scale();
    let local = table.local_feet();
    let residual = |q: [f64; 3]| -> Result<[f64; 3]> {
        let p = placed(&local, center_xy, yaw, q);
        let mut r = [0.0; 3];
        for i in 0..3 {
            r[i] = p[i].z - terrain.eval(p[i].x, p[i].y)?;
        }
        Ok(r)
    };
    let norm = |r: &[f64; 3]| r.iter().fold(0.0f64, |m, v| m.max(v.abs()));

    let flat = placed(&local, center_xy, yaw, [0.0; 3]);
    let mut z_mean = 0.0;
    for p in &flat {
        z_mean += terrain.eval(p.x, p.y)? / 4.0;
    }
    let mut q = [z_mean, 0.0, 0.0];
    let mut r = residual(q)?;
    let target = 1e-13 * scale;
    for _ in 0..SETTLE_MAX_ITER {
        if norm(&r) <= target {
            break;
        }
        let mut jac = Matrix3::zeros();
        for c in 0..3 {
            let step = if c == 0 { 1e-7 * scale } else { 1e-7 };
            let mut qp = q;
            let mut qm = q;
            qp[c] += step;
            qm[c] -= step;
            let (rp, rm) = (residual(qp)?, residual(qm)?);
            for row in 0..3 {
                jac[(row, c)] = (rp[row] - rm[row]) / (2.0 * step);
            }
        }
        let Some(dq) = jac.lu().solve(&Vector3::new(-r[0], -r[1], -r[2])) else {
            return Err(WobbleError::NumericalFailure {
                detail: "singular settle Jacobian".into(),
                residual: norm(&r),
            });
        };
        let mut damping = 1.0;
        let mut improved = false;
        for _ in 0..40 {
            let cand = [q[0] + damping * dq[0], q[1] + damping * dq[1], q[2] + damping * dq[2]];
            let rc = residual(cand)?;
            if norm(&rc) < norm(&r) {
                q = cand;
                r = rc;
                improved = true;
                break;
            }
            damping *= 0.5;
        }
        if !improved {
            break;
        }
    }
    let res = norm(&r);
    if res > CONTACT_TOL * scale || !(q[1].abs() < FRAC_PI_2 && q[2].abs() < FRAC_PI_2) {
        return Err(WobbleError::NumericalFailure {
            detail: format!("settle did not converge in {SETTLE_MAX_ITER} steps"),
            residual: res,
        });
    }
    Ok(FootSet {
        p: placed(&local, center_xy, yaw, q),
    })
}

/// Fourth corner of the square with consecutive corners `p1, p2, p3`.
pub fn complete_fourth_foot(p1: Point3, p2: Point3, p3: Point3) -> Result<Point3> {
    let a = p2 - p1;
    let b = p3 - p2;
    let (la, lb) = (a.norm(), b.norm());
    let side = 0.5 * (la + lb);
    let tol = 1e-6 * side;
    if !(side > 0.0) || (la - lb).abs() > tol || a.dot(b).abs() > tol * side || p1.dist(p3) == 0.0 {
        return Err(WobbleError::Domain(format!(
            "feet do not form two orthogonal equal edges: |p1p2| = {la}, |p2p3| = {lb}, cos = {}",
            a.dot(b) / (la * lb)
        )));
    }
    Ok(p1 + p3 - p2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DropRotation {
    /// Image of foot 4, on the ground.
    pub three_prime: Point3,
    /// Image of foot 1 under the same rotation.
    pub four_prime: Point3,
    pub angle: f64,
    pub warnings: Warnings,
}

const DROP_SCAN_STEP: f64 = PI / 360.0;

/// Rotate the table about the axis through feet 2 and 3, in the direction
/// that lowers foot 4, by the smallest angle that puts foot 4 on the ground.
pub fn drop_rotate_three_prime(feet: &FootSet, terrain: &Terrain, policy: Policy) -> Result<DropRotation> {
    let [p1, p2, p3, p4] = feet.p;
    let side = p2.dist(p3);
    let mut warnings = Warnings::empty();
    let limit = Thresholds::get().theta_motion_b;
    if terrain.slope_bound() >= limit {
        policy.violation(&mut warnings, Warnings::SLOPE_OVERRIDE, || {
            WobbleError::condition(
                Condition::OrthogonalTriple,
                format!("terrain slope {:.4}° for the drop rotation", terrain.slope_bound().to_degrees()),
            )
        })?;
    }
    let h4 = terrain.height_above(p4)?;
    let tol = CONTACT_TOL * side;
    if h4 < -tol {
        return Err(WobbleError::Domain(format!(
            "drop rotation needs foot 4 above the ground, got h4 = {h4:e}"
        )));
    }
    if h4 <= tol {
        return Ok(DropRotation {
            three_prime: p4,
            four_prime: p1,
            angle: 0.0,
            warnings,
        });
    }
    let mut k = (p3 - p2).normalized();
    if k.cross(p4 - p2).z > 0.0 {
        k = -k;
    }
    let height = |t: f64| -> Result<f64> { terrain.height_above(rotate_unit(p4, p2, k, t)) };
    let mut prev = (0.0, h4);
    let mut bracket = None;
    let mut t = DROP_SCAN_STEP;
    while t <= PI + 1e-12 {
        let h = height(t)?;
        if crosses(prev.1, h) {
            bracket = Some((prev, (t, h)));
            break;
        }
        prev = (t, h);
        t += DROP_SCAN_STEP;
    }
    let Some(((a, ha), (b, hb))) = bracket else {
        return Err(WobbleError::GeometryViolation(
            "foot 4 never reaches the ground while rotating about edge 2-3".into(),
        ));
    };
    let angle = try_bisect(height, a, b, ha, hb, PARAM_TOL)?;
    let three_prime = rotate_unit(p4, p2, k, angle);
    let four_prime = rotate_unit(p1, p2, k, angle);
    let h_four = terrain.height_above(four_prime)?;
    if h_four > tol {
        policy.violation(&mut warnings, Warnings::CONTACT, || {
            WobbleError::GeometryViolation(format!(
                "image of foot 1 after the drop rotation is above the ground (h = {h_four:e})"
            ))
        })?;
    }
    Ok(DropRotation {
        three_prime,
        four_prime,
        angle,
        warnings,
    })
}

/// Settle, relabeling by one foot when the free foot would sit below the
/// ground, so that the returned placement has `h₄ ≥ 0`.
///
/// Returns the feet, their contact state and whether labels were shifted
/// (the shifted placement is the settle at `yaw + 90°`).
pub fn settle_with_free_foot_up(
    table: &TableSpec,
    terrain: &Terrain,
    center_xy: [f64; 2],
    yaw: f64,
) -> Result<(FootSet, ContactState, bool)> {
    let scale = table.scale();
    let feet = settle_three_feet(table, terrain, center_xy, yaw)?;
    let state = signed_heights(&feet, terrain, scale)?;
    if state.h[3] >= -CONTACT_TOL * scale || !table.is_square() {
        return Ok((feet, state, false));
    }
    let feet2 = settle_three_feet(table, terrain, center_xy, yaw + 2.0 * FRAC_PI_4)?;
    let state2 = signed_heights(&feet2, terrain, scale)?;
    if state2.h[3] < -CONTACT_TOL * scale {
        return Err(WobbleError::GeometryViolation(format!(
            "free foot below ground in both labelings (h4 = {:e}, {:e})",
            state.h[3], state2.h[3]
        )));
    }
    Ok((feet2, state2, true))
}
