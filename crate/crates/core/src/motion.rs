//! The two continuous table motions that carry the sign change of the free
//! foot, and the refinement of that sign change to an equilibrium.
//!
//! Motion A marches feet 1 and 2 along Γ. Motion B turns the table about
//! foot 2 and then slides edge 1–2 along the vertical section through
//! feet 2 and 3. Both start from a settled table with `h₄ ≥ 0` and end in
//! the drop-rotated placement where `h₄ ≤ 0`.

use std::io::Write;

use serde::Serialize;

use crate::contact::{
    complete_fourth_foot, drop_rotate_three_prime, settle_with_free_foot_up, signed_heights, ContactState,
    DropRotation, FootSet, TableSpec, CONTACT_TOL,
};
use crate::error::{Condition, Result, WobbleError};
use crate::gamma::{chord_advance, circle_surface_intersection, gamma_point_at_azimuth, GammaContext, GammaStats};
use crate::geometry::{ccw_delta, sphere_through, Point3, SphereS, Thresholds, Vec3};
use crate::root::{crosses, sign_change_indices, try_bisect, PARAM_TOL};
use crate::terrain::Terrain;
use crate::warnings::{Policy, Warnings};

/// Default motion step, degrees.
pub const DEFAULT_STEP_DEG: f64 = 0.25;

/// Largest allowed change of `h₄` between adjacent samples, relative to `L`.
pub const JUMP_LIMIT: f64 = 0.2;

/// Leg points sampled by the clearance check.
pub const LEG_SAMPLES: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MotionKind {
    /// March along the sphere/ground curve.
    Gamma,
    /// Rotate about foot 2, then translate along the section curve.
    RotateTranslate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Settled,
    March,
    Rotate,
    Translate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MotionSample {
    /// Motion parameter, radians. For motion A the azimuth of foot 1 about
    /// the sphere center relative to its start; for motion B the turn angle
    /// in the rotation stage, continued by `Δψ + s/L` while translating.
    pub param: f64,
    pub stage: Stage,
    pub feet: FootSet,
    pub state: ContactState,
    /// Azimuths of feet 1 and 2 about the sphere center (motion A).
    pub azimuths: Option<[f64; 2]>,
    /// Latitude of foot 1 about the sphere center (motion A).
    pub latitude: Option<f64>,
    /// Counterclockwise turn of edge 1–2 from its initial direction.
    pub rotation: f64,
    pub warnings: Warnings,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
enum Setup {
    Trivial,
    March { sphere: SphereS, phi0: f64, span: f64, step: f64 },
    RotateTranslate { p2: Point3, p3: Point3, psi0: f64, turn: f64, s3: f64 },
}

#[derive(Debug, Clone, Serialize)]
pub struct MotionTrace {
    pub kind: MotionKind,
    pub table: TableSpec,
    pub center: [f64; 2],
    pub yaw: f64,
    pub step: f64,
    pub policy_enforced: bool,
    /// Labels were shifted by one foot to get `h₄ ≥ 0` at the start.
    pub shifted: bool,
    pub initial: FootSet,
    pub drop: Option<DropRotation>,
    pub sphere: Option<SphereS>,
    pub samples: Vec<MotionSample>,
    pub warnings: Warnings,
    setup: Setup,
}

impl MotionTrace {
    pub fn side(&self) -> f64 {
        self.table.scale()
    }

    pub fn is_trivial(&self) -> bool {
        matches!(self.setup, Setup::Trivial)
    }

    /// Ratio `R / L` of the constructed sphere.
    pub fn sphere_ratio(&self) -> Option<f64> {
        self.sphere.map(|s| s.radius / self.side())
    }

    /// Curve invariants over the marching feet 1 and 2, recomputed from
    /// the terrain.
    pub fn gamma_stats(&self, terrain: &Terrain) -> Result<GammaStats> {
        let mut s = GammaStats::empty();
        let Some(sphere) = self.sphere else { return Ok(s) };
        let l = self.side();
        let theta_m = terrain.slope_bound();
        let mut prev: Option<[f64; 2]> = None;
        for sample in &self.samples {
            let Some(az) = sample.azimuths else { continue };
            for p in &sample.feet.p[..2] {
                s.max_sphere_residual = s
                    .max_sphere_residual
                    .max((p.dist(sphere.center) - sphere.radius).abs() / sphere.radius);
                s.max_surface_residual = s.max_surface_residual.max(terrain.height_above(*p)?.abs() / l);
                let lat = sphere.latitude_of(*p).abs();
                s.max_latitude = s.max_latitude.max(lat);
                if theta_m > 0.0 {
                    s.max_latitude_ratio = s.max_latitude_ratio.max(lat / (2.0 * theta_m));
                }
                s.points += 1;
            }
            if let Some(pa) = prev {
                if !(az[0] > pa[0] && az[1] > pa[1]) {
                    s.monotone = false;
                }
            }
            prev = Some(az);
        }
        Ok(s)
    }
}

fn contact_tol(l: f64) -> f64 {
    CONTACT_TOL * l
}

fn require_square(table: &TableSpec) -> Result<()> {
    table.validate()?;
    if !table.is_square() {
        return Err(WobbleError::Domain("the continuous motions need a square table".into()));
    }
    Ok(())
}

fn trivial_trace(
    kind: MotionKind,
    table: &TableSpec,
    center: [f64; 2],
    yaw: f64,
    step: f64,
    policy: Policy,
    shifted: bool,
    feet: FootSet,
    state: ContactState,
    warnings: Warnings,
) -> MotionTrace {
    MotionTrace {
        kind,
        table: *table,
        center,
        yaw,
        step,
        policy_enforced: policy.enforce,
        shifted,
        initial: feet,
        drop: None,
        sphere: None,
        samples: vec![MotionSample {
            param: 0.0,
            stage: Stage::Settled,
            feet,
            state,
            azimuths: None,
            latitude: None,
            rotation: 0.0,
            warnings,
        }],
        warnings,
        setup: Setup::Trivial,
    }
}

fn unwrap_angle(a: f64, reference: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    let mut d = (a - reference).rem_euclid(TAU);
    if d > PI {
        d -= TAU;
    }
    reference + d
}

fn check_step(step: f64) -> Result<()> {
    if !(step > 0.0 && step <= 5f64.to_radians()) {
        return Err(WobbleError::Validation(format!(
            "motion step must lie in (0°, 5°], got {:.4}°",
            step.to_degrees()
        )));
    }
    Ok(())
}

/// Per-sample invariant checks; violations abort in strict mode.
fn check_sample(prev: Option<&MotionSample>, s: &mut MotionSample, table: &TableSpec, policy: Policy) -> Result<()> {
    let l = table.scale();
    let tol = contact_tol(l);
    let mut w = s.warnings;
    let h3 = s.state.max_abs_first_three();
    if !(h3 < tol) {
        policy.violation(&mut w, Warnings::CONTACT, || {
            WobbleError::GeometryViolation(format!("a supporting foot is off the ground by {h3:e}"))
        })?;
    }
    let rig = s.feet.rigidity_error(table);
    if !(rig < tol) {
        policy.violation(&mut w, Warnings::RIGIDITY, || {
            WobbleError::GeometryViolation(format!("foot distances deviate from the table by {rig:e}"))
        })?;
    }
    if let Some(p) = prev {
        if !(s.param > p.param) {
            policy.violation(&mut w, Warnings::NON_MONOTONE, || {
                WobbleError::GeometryViolation("motion parameter does not increase".into())
            })?;
        }
        let jump = (s.state.h[3] - p.state.h[3]).abs();
        if !(jump < JUMP_LIMIT * l) {
            policy.violation(&mut w, Warnings::JUMP, || {
                WobbleError::GeometryViolation(format!("free-foot height jumps by {jump:e} between samples"))
            })?;
        }
        if let (Some(a), Some(b)) = (p.azimuths, s.azimuths) {
            if !(b[0] > a[0] && b[1] > a[1]) {
                policy.violation(&mut w, Warnings::NON_MONOTONE, || {
                    WobbleError::condition(Condition::UnblockedMarch, "curve azimuths of feet 1 and 2 do not increase")
                })?;
            }
        }
    }
    s.warnings = w;
    Ok(())
}

/// Final placement must put feet 1, 2 on the initial feet 2, 3 with the
/// free foot at or below the ground.
fn check_end(trace: &mut MotionTrace, policy: Policy) -> Result<()> {
    let l = trace.side();
    let tol = contact_tol(l);
    let last = *trace.samples.last().expect("non-empty trace");
    let d = last.feet.p[0]
        .dist(trace.initial.p[1])
        .max(last.feet.p[1].dist(trace.initial.p[2]));
    let mut w = trace.warnings;
    if !(d < tol) {
        policy.violation(&mut w, Warnings::CONTACT, || {
            WobbleError::GeometryViolation(format!("motion ends {d:e} away from the initial feet 2 and 3"))
        })?;
    }
    if last.state.h[3] > tol {
        let h = last.state.h[3];
        policy.violation(&mut w, Warnings::CONTACT, || {
            WobbleError::GeometryViolation(format!("free foot ends above the ground (h4 = {h:e})"))
        })?;
    }
    trace.warnings = w;
    Ok(())
}

struct March<'a> {
    ctx: GammaContext<'a>,
    phi0: f64,
    step: f64,
    yaw0: f64,
}

impl March<'_> {
    fn solve(&self, param: f64, hint: f64) -> Result<MotionSample> {
        let l = self.ctx.side;
        let (g1, mut w) = gamma_point_at_azimuth(&self.ctx, self.phi0 + param)?;
        let (g2, w2) = chord_advance(&self.ctx, &g1, hint, self.step)?;
        let u = g2.point - g1.point;
        let (p3, w3) = circle_surface_intersection(g2.point, u, l, self.ctx.terrain, 1.0, self.ctx.policy)?;
        w |= w2 | w3;
        let p4 = complete_fourth_foot(g1.point, g2.point, p3)?;
        let feet = FootSet::new(g1.point, g2.point, p3, p4);
        let state = signed_heights(&feet, self.ctx.terrain, l)?;
        Ok(MotionSample {
            param,
            stage: Stage::March,
            feet,
            state,
            azimuths: Some([g1.azimuth, g2.azimuth]),
            latitude: Some(g1.latitude),
            rotation: unwrap_angle(u.azimuth(), self.yaw0) - self.yaw0,
            warnings: w,
        })
    }
}

/// Motion A: march along the curve Γ.
///
/// Requires a square table and a slope bound of at most 14.47°
/// (recorded as a warning instead under [`Policy::OVERRIDE`]).
pub fn run_motion_a(
    table: &TableSpec,
    terrain: &Terrain,
    center_xy: [f64; 2],
    yaw: f64,
    step: f64,
    policy: Policy,
) -> Result<MotionTrace> {
    require_square(table)?;
    check_step(step)?;
    let l = table.scale();
    let mut warnings = Warnings::empty();
    let theta_m = terrain.slope_bound();
    if theta_m > Thresholds::get().theta_motion_a {
        policy.violation(&mut warnings, Warnings::SLOPE_OVERRIDE, || {
            WobbleError::condition(
                Condition::UnblockedMarch,
                format!("terrain slope {:.4}°", theta_m.to_degrees()),
            )
        })?;
    }
    let (feet, state, shifted) = settle_with_free_foot_up(table, terrain, center_xy, yaw)?;
    let trivial = |w| trivial_trace(MotionKind::Gamma, table, center_xy, yaw, step, policy, shifted, feet, state, w);
    if state.h[3] <= contact_tol(l) {
        return Ok(trivial(warnings));
    }
    let drop = drop_rotate_three_prime(&feet, terrain, policy)?;
    warnings |= drop.warnings;
    let [p1, p2, p3, _] = feet.p;
    let sphere = match sphere_through(p1, p2, p3, drop.three_prime) {
        Ok(s) => s,
        Err(WobbleError::Degenerate { .. }) if state.max_abs() < contact_tol(l) => return Ok(trivial(warnings)),
        Err(e) => return Err(e),
    };
    let ratio = sphere.radius / l;
    if !(ratio > std::f64::consts::FRAC_1_SQRT_2 && ratio < 3f64.sqrt() / 2.0) {
        warnings |= Warnings::RADIUS;
    }
    let (ctx, w) = GammaContext::new(sphere, terrain, l, policy)?;
    warnings |= w;
    let phi0 = sphere.azimuth_of(p1);
    let span = ccw_delta(phi0, sphere.azimuth_of(p2));
    let n = (span / step).ceil().max(1.0) as usize;
    let h = span / n as f64;
    let yaw0 = (p2 - p1).azimuth();
    let march = March {
        ctx,
        phi0,
        step: h,
        yaw0,
    };
    let mut samples: Vec<MotionSample> = Vec::with_capacity(n + 1);
    let mut hint = phi0 + span;
    for k in 0..=n {
        let param = k as f64 * h;
        let mut s = march.solve(param, hint).map_err(|e| e.at_sample(k))?;
        check_sample(samples.last(), &mut s, table, policy).map_err(|e| e.at_sample(k))?;
        hint = s.azimuths.unwrap()[1] + h;
        warnings |= s.warnings;
        samples.push(s);
    }
    let mut trace = MotionTrace {
        kind: MotionKind::Gamma,
        table: *table,
        center: center_xy,
        yaw,
        step,
        policy_enforced: policy.enforce,
        shifted,
        initial: feet,
        drop: Some(drop),
        sphere: Some(sphere),
        samples,
        warnings,
        setup: Setup::March {
            sphere,
            phi0,
            span,
            step: h,
        },
    };
    check_end(&mut trace, policy)?;
    Ok(trace)
}

/// Samples used to isolate the trailing foot on the section curve.
const SECTION_SAMPLES: usize = 48;

struct RotateTranslate<'a> {
    terrain: &'a Terrain,
    l: f64,
    policy: Policy,
    p2: Point3,
    psi0: f64,
    turn: f64,
    e: Vec3,
    s3: f64,
    yaw0: f64,
}

impl RotateTranslate<'_> {
    fn section(&self, s: f64) -> Result<Point3> {
        let x = self.p2.x + s * self.e.x;
        let y = self.p2.y + s * self.e.y;
        Ok(Vec3::new(x, y, self.terrain.eval(x, y)?))
    }

    fn complete(&self, q1: Point3, q2: Point3, mut w: Warnings) -> Result<(FootSet, ContactState, Warnings)> {
        let (q3, w3) = circle_surface_intersection(q2, q2 - q1, self.l, self.terrain, 1.0, self.policy)?;
        w |= w3;
        let q4 = complete_fourth_foot(q1, q2, q3)?;
        let feet = FootSet::new(q1, q2, q3, q4);
        let state = signed_heights(&feet, self.terrain, self.l)?;
        Ok((feet, state, w))
    }

    fn solve(&self, param: f64) -> Result<MotionSample> {
        if param <= self.turn {
            let psi = self.psi0 + param;
            let dir = Vec3::new(psi.cos(), psi.sin(), 0.0);
            let (q1, w) = circle_surface_intersection(self.p2, dir.cross(Vec3::Z), self.l, self.terrain, 1.0, self.policy)?;
            let (feet, state, w) = self.complete(q1, self.p2, w)?;
            return Ok(MotionSample {
                param,
                stage: Stage::Rotate,
                feet,
                state,
                azimuths: None,
                latitude: None,
                rotation: param,
                warnings: w,
            });
        }
        let s = ((param - self.turn) * self.l).min(self.s3);
        let q2 = self.section(s)?;
        let gap = |s1: f64| -> Result<f64> { Ok(self.section(s1)?.dist(q2) - self.l) };
        // chords of length L have horizontal extent in [L cos Θ, L]
        let (lo, hi) = (s - 1.25 * self.l, s - 0.5 * self.l);
        let xs: Vec<f64> = (0..=SECTION_SAMPLES)
            .map(|k| lo + (hi - lo) * k as f64 / SECTION_SAMPLES as f64)
            .collect();
        let mut vals = Vec::with_capacity(xs.len());
        for &x in &xs {
            vals.push(gap(x)?);
        }
        let changes = sign_change_indices(&vals);
        let mut w = Warnings::empty();
        let k = match changes.as_slice() {
            [] => {
                return Err(WobbleError::BlockedMotion(format!(
                    "no section-curve chord of length L ends at s = {s:.6}"
                )))
            }
            [k] => *k,
            [.., k] => {
                self.policy.violation(&mut w, Warnings::MULTIPLE_ROOTS, || {
                    WobbleError::condition(Condition::OrthogonalTriple, "several section-curve chords of length L")
                })?;
                *k
            }
        };
        let s1 = try_bisect(gap, xs[k], xs[k + 1], vals[k], vals[k + 1], PARAM_TOL)?;
        let q1 = self.section(s1)?;
        let (feet, state, w) = self.complete(q1, q2, w)?;
        Ok(MotionSample {
            param,
            stage: Stage::Translate,
            feet,
            state,
            azimuths: None,
            latitude: None,
            rotation: unwrap_angle((q2 - q1).azimuth(), self.yaw0 + self.turn) - self.yaw0,
            warnings: w,
        })
    }
}

/// Motion B: rotate about foot 2 keeping feet 1 and 3 on the ground, then
/// slide edge 1–2 along the vertical section through feet 2 and 3.
///
/// Requires a square table and a slope bound below 35.264°.
pub fn run_motion_b(
    table: &TableSpec,
    terrain: &Terrain,
    center_xy: [f64; 2],
    yaw: f64,
    step: f64,
    policy: Policy,
) -> Result<MotionTrace> {
    require_square(table)?;
    check_step(step)?;
    let l = table.scale();
    let mut warnings = Warnings::empty();
    let theta_m = terrain.slope_bound();
    if theta_m >= Thresholds::get().theta_motion_b {
        policy.violation(&mut warnings, Warnings::SLOPE_OVERRIDE, || {
            WobbleError::condition(
                Condition::OrthogonalTriple,
                format!("terrain slope {:.4}°", theta_m.to_degrees()),
            )
        })?;
    }
    let (feet, state, shifted) = settle_with_free_foot_up(table, terrain, center_xy, yaw)?;
    if state.h[3] <= contact_tol(l) {
        return Ok(trivial_trace(
            MotionKind::RotateTranslate,
            table,
            center_xy,
            yaw,
            step,
            policy,
            shifted,
            feet,
            state,
            warnings,
        ));
    }
    let drop = drop_rotate_three_prime(&feet, terrain, policy)?;
    warnings |= drop.warnings;
    let [p1, p2, p3, _] = feet.p;
    let psi0 = (p1 - p2).azimuth();
    let turn = ccw_delta(psi0, (p2 - p3).azimuth());
    let d = p3 - p2;
    let s3 = d.horizontal_norm();
    let e = Vec3::new(d.x / s3, d.y / s3, 0.0);
    let motion = RotateTranslate {
        terrain,
        l,
        policy,
        p2,
        psi0,
        turn,
        e,
        s3,
        yaw0: (p2 - p1).azimuth(),
    };
    let n1 = (turn / step).ceil().max(1.0) as usize;
    let n2 = (s3 / l / step).ceil().max(1.0) as usize;
    let mut params: Vec<f64> = (0..=n1).map(|k| turn * k as f64 / n1 as f64).collect();
    params.extend((1..=n2).map(|k| turn + s3 / l * k as f64 / n2 as f64));
    let mut samples: Vec<MotionSample> = Vec::with_capacity(params.len());
    for (k, &param) in params.iter().enumerate() {
        let mut s = motion.solve(param).map_err(|e| e.at_sample(k))?;
        check_sample(samples.last(), &mut s, table, policy).map_err(|e| e.at_sample(k))?;
        warnings |= s.warnings;
        samples.push(s);
    }
    let mut trace = MotionTrace {
        kind: MotionKind::RotateTranslate,
        table: *table,
        center: center_xy,
        yaw,
        step,
        policy_enforced: policy.enforce,
        shifted,
        initial: feet,
        drop: Some(drop),
        sphere: None,
        samples,
        warnings,
        setup: Setup::RotateTranslate { p2, p3, psi0, turn, s3 },
    };
    check_end(&mut trace, policy)?;
    Ok(trace)
}

/// Independent check of a candidate equilibrium.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EquilibriumCheck {
    pub max_abs_h: f64,
    pub heights_ok: bool,
    pub rigidity_error: f64,
    pub rigid: bool,
    /// Smallest height of a sampled leg point above the ground.
    pub min_leg_clearance: f64,
    pub legs_clear: bool,
}

impl EquilibriumCheck {
    pub fn passed(&self) -> bool {
        self.heights_ok && self.rigid && self.legs_clear
    }
}

/// Contact, rigidity and leg clearance of a placement.
///
/// Legs run from each foot along the upward normal of the foot plane for
/// `leg_length`; [`LEG_SAMPLES`] points per leg must lie strictly above
/// the ground.
pub fn verify_equilibrium(feet: &FootSet, table: &TableSpec, terrain: &Terrain) -> EquilibriumCheck {
    let l = table.scale();
    let tol = contact_tol(l);
    let max_abs_h = match signed_heights(feet, terrain, l) {
        Ok(s) => s.max_abs(),
        Err(_) => f64::INFINITY,
    };
    let rigidity_error = feet.rigidity_error(table);
    let n = feet.normal();
    let mut clearance = f64::INFINITY;
    if table.leg_length > 0.0 {
        for p in &feet.p {
            for k in 1..=LEG_SAMPLES {
                let q = *p + n * (table.leg_length * k as f64 / LEG_SAMPLES as f64);
                let c = terrain.height_above(q).unwrap_or(f64::NEG_INFINITY);
                clearance = clearance.min(c);
            }
        }
    }
    EquilibriumCheck {
        max_abs_h,
        heights_ok: max_abs_h < tol,
        rigidity_error,
        rigid: rigidity_error < tol,
        min_leg_clearance: clearance,
        legs_clear: clearance > 0.0,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EquilibriumResult {
    pub found: bool,
    pub parameter: Option<f64>,
    pub feet: Option<FootSet>,
    pub max_abs_h: f64,
    /// Motion A: azimuth of foot 1 about the sphere center traversed to the
    /// equilibrium. Motion B: the table's own turn.
    pub sweep: f64,
    /// Counterclockwise turn of the table's edge 1–2.
    pub table_rotation: f64,
    pub legs_clear: bool,
    pub check: Option<EquilibriumCheck>,
    /// Parameter intervals where the free foot changes sign or touches.
    pub intervals: Vec<[f64; 2]>,
    pub min_abs_h4: f64,
    pub warnings: Warnings,
}

fn sign_class(h: f64, tol: f64) -> i8 {
    if h.abs() <= tol {
        0
    } else if h > 0.0 {
        1
    } else {
        -1
    }
}

/// Sign changes and touches of `h₄` along the trace, in parameter order.
pub fn sign_change_intervals(trace: &MotionTrace) -> Vec<[f64; 2]> {
    let tol = contact_tol(trace.side());
    let s = &trace.samples;
    let mut out = Vec::new();
    let mut k = 0;
    while k < s.len() {
        let c = sign_class(s[k].state.h[3], tol);
        if c == 0 {
            let start = k;
            while k + 1 < s.len() && sign_class(s[k + 1].state.h[3], tol) == 0 {
                k += 1;
            }
            out.push([s[start].param, s[k].param]);
        } else if k + 1 < s.len() && c * sign_class(s[k + 1].state.h[3], tol) == -1 {
            out.push([s[k].param, s[k + 1].param]);
        }
        k += 1;
    }
    out
}

const REFINE_MAX_ITER: usize = 200;

/// Refinement keeps bisecting below the contact tolerance down to this.
const REFINE_TARGET: f64 = 1e-13;

/// Locate the first sign change of `h₄` and refine it by re-solving the
/// motion at bisected parameters to `|h₄| < 1e-9·L`.
pub fn find_equilibrium(trace: &MotionTrace, terrain: &Terrain) -> Result<EquilibriumResult> {
    let l = trace.side();
    let tol = contact_tol(l);
    let policy = if trace.policy_enforced { Policy::STRICT } else { Policy::OVERRIDE };
    let intervals = sign_change_intervals(trace);
    let min_abs_h4 = trace
        .samples
        .iter()
        .fold(f64::INFINITY, |m, s| m.min(s.state.h[3].abs()));
    let mut warnings = trace.warnings;
    let not_found = |warnings| EquilibriumResult {
        found: false,
        parameter: None,
        feet: None,
        max_abs_h: min_abs_h4,
        sweep: 0.0,
        table_rotation: 0.0,
        legs_clear: false,
        check: None,
        intervals: intervals.clone(),
        min_abs_h4,
        warnings,
    };
    let Some(&[a, b]) = intervals.first() else { return Ok(not_found(warnings)) };
    let ia = trace.samples.iter().position(|s| s.param == a).expect("interval from samples");

    let best = if a == b {
        trace.samples[ia]
    } else {
        let left = trace.samples[ia];
        let right = trace.samples[ia + 1];
        let solve: Box<dyn Fn(f64) -> Result<MotionSample>> = match trace.setup {
            Setup::Trivial => unreachable!("a single-sample trace has no sign-change pair"),
            Setup::March { sphere, phi0, step, .. } => {
                let (ctx, _) = GammaContext::new(sphere, terrain, l, policy)?;
                let march = March {
                    ctx,
                    phi0,
                    step,
                    yaw0: (trace.initial.p[1] - trace.initial.p[0]).azimuth(),
                };
                let hint0 = left.azimuths.unwrap()[1] - left.param;
                Box::new(move |t| march.solve(t, hint0 + t))
            }
            Setup::RotateTranslate { p2, p3, psi0, turn, s3 } => {
                let d = p3 - p2;
                let motion = RotateTranslate {
                    terrain,
                    l,
                    policy,
                    p2,
                    psi0,
                    turn,
                    e: Vec3::new(d.x / s3, d.y / s3, 0.0),
                    s3,
                    yaw0: (trace.initial.p[1] - trace.initial.p[0]).azimuth(),
                };
                Box::new(move |t| motion.solve(t))
            }
        };
        let (mut lo, mut hi) = (left, right);
        let mut best = if left.state.h[3].abs() < right.state.h[3].abs() { left } else { right };
        for _ in 0..REFINE_MAX_ITER {
            if best.state.h[3].abs() < REFINE_TARGET * l || hi.param - lo.param <= f64::EPSILON * hi.param.abs().max(1.0) {
                break;
            }
            let m = solve(0.5 * (lo.param + hi.param))?;
            if m.state.h[3].abs() < best.state.h[3].abs() {
                best = m;
            }
            if crosses(lo.state.h[3], m.state.h[3]) {
                hi = m;
            } else {
                lo = m;
            }
        }
        best
    };
    warnings |= best.warnings;
    let check = verify_equilibrium(&best.feet, &trace.table, terrain);
    let found = check.max_abs_h < tol;
    let sweep = match trace.kind {
        MotionKind::Gamma => best.param,
        MotionKind::RotateTranslate => best.rotation,
    };
    Ok(EquilibriumResult {
        found,
        parameter: Some(best.param),
        feet: Some(best.feet),
        max_abs_h: check.max_abs_h,
        sweep,
        table_rotation: best.rotation,
        legs_clear: check.legs_clear,
        check: Some(check),
        intervals,
        min_abs_h4,
        warnings,
    })
}

/// Header of [`write_trace_csv`].
pub const TRACE_HEADER: &str =
    "param_deg,x1,y1,z1,x2,y2,z2,x3,y3,z3,x4,y4,z4,h4,sphere_R_over_L,lat_deg,rot_deg,warnings";

/// One row per sample; empty cells where a column does not apply.
pub fn write_trace_csv<W: Write>(trace: &MotionTrace, mut out: W) -> std::io::Result<()> {
    writeln!(out, "{TRACE_HEADER}")?;
    let ratio = trace.sphere_ratio().map(|r| r.to_string()).unwrap_or_default();
    for s in &trace.samples {
        write!(out, "{}", s.param.to_degrees())?;
        for p in &s.feet.p {
            write!(out, ",{},{},{}", p.x, p.y, p.z)?;
        }
        let lat = s.latitude.map(|l| l.to_degrees().to_string()).unwrap_or_default();
        writeln!(
            out,
            ",{},{},{},{},{}",
            s.state.h[3],
            ratio,
            lat,
            s.rotation.to_degrees(),
            s.warnings.joined()
        )?;
    }
    Ok(())
}
