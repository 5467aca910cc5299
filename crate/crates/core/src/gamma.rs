//! The curve Γ where the sphere through feet 1, 2, 3 and 3′ meets the
//! ground, parametrized by azimuth about the sphere center.
//!
//! While the slope stays below 30° every vertical half plane through the
//! center meets Γ exactly once, so each point is a 1-D root in latitude.
//! Uniqueness is checked at runtime by counting sign changes at 1°
//! resolution before bisecting.

use std::f64::consts::{FRAC_PI_2, TAU};

use serde::Serialize;

use crate::error::{Condition, Result, WobbleError};
use crate::exec::Exec;
use crate::geometry::{Point3, SphereS, Thresholds, Vec3};
use crate::root::{crosses, cyclic_sign_change_indices, sign_change_indices, try_bisect, PARAM_TOL};
use crate::terrain::Terrain;
use crate::warnings::{Policy, Warnings};

const DEG: f64 = std::f64::consts::PI / 180.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GammaPoint {
    pub point: Point3,
    /// Azimuth about the sphere center, radians (not reduced mod 2π).
    pub azimuth: f64,
    pub latitude: f64,
}

/// Shared inputs of every curve computation.
#[derive(Debug, Clone, Copy)]
pub struct GammaContext<'a> {
    pub sphere: SphereS,
    pub terrain: &'a Terrain,
    /// Table side `L`.
    pub side: f64,
    pub theta_m: f64,
    pub policy: Policy,
}

impl<'a> GammaContext<'a> {
    /// Checks the simple-curve slope condition (below 30°).
    pub fn new(sphere: SphereS, terrain: &'a Terrain, side: f64, policy: Policy) -> Result<(Self, Warnings)> {
        let theta_m = terrain.slope_bound();
        let mut w = Warnings::empty();
        if theta_m >= Thresholds::get().theta_gamma_simple {
            policy.violation(&mut w, Warnings::SLOPE_OVERRIDE, || {
                WobbleError::condition(
                    Condition::GammaSimple,
                    format!("terrain slope {:.4}°", theta_m.to_degrees()),
                )
            })?;
        }
        Ok((
            GammaContext {
                sphere,
                terrain,
                side,
                theta_m,
                policy,
            },
            w,
        ))
    }

    #[inline]
    fn gap(&self, phi: f64, lat: f64) -> Result<f64> {
        self.terrain.height_above(self.sphere.point(phi, lat))
    }

    /// Latitude root without the multiplicity scan (used inside outer
    /// bisections, where uniqueness was established at the sample points).
    fn latitude_fast(&self, phi: f64) -> Result<f64> {
        let (a, b) = (-FRAC_PI_2, FRAC_PI_2);
        let (fa, fb) = (self.gap(phi, a)?, self.gap(phi, b)?);
        if !crosses(fa, fb) {
            return Err(WobbleError::GeometryViolation(format!(
                "sphere does not straddle the ground at azimuth {:.4}°",
                phi.to_degrees()
            )));
        }
        try_bisect(|l| self.gap(phi, l), a, b, fa, fb, PARAM_TOL)
    }

    fn point_fast(&self, phi: f64) -> Result<GammaPoint> {
        let latitude = self.latitude_fast(phi)?;
        Ok(GammaPoint {
            point: self.sphere.point(phi, latitude),
            azimuth: phi,
            latitude,
        })
    }
}

/// The unique point of Γ in the half plane at azimuth `phi`.
pub fn gamma_point_at_azimuth(ctx: &GammaContext<'_>, phi: f64) -> Result<(GammaPoint, Warnings)> {
    let mut w = Warnings::empty();
    let lats: Vec<f64> = (0..=180).map(|k| -FRAC_PI_2 + k as f64 * DEG).collect();
    let mut gaps = Vec::with_capacity(lats.len());
    for &l in &lats {
        gaps.push(ctx.gap(phi, l)?);
    }
    let changes = sign_change_indices(&gaps);
    let k = match changes.len() {
        0 => {
            return Err(WobbleError::GeometryViolation(format!(
                "sphere does not straddle the ground at azimuth {:.4}°",
                phi.to_degrees()
            )))
        }
        1 => changes[0],
        n => {
            ctx.policy.violation(&mut w, Warnings::MULTIPLE_ROOTS, || {
                WobbleError::condition(
                    Condition::GammaSimple,
                    format!("{n} ground crossings in the half plane at azimuth {:.4}°", phi.to_degrees()),
                )
            })?;
            *changes
                .iter()
                .min_by(|&&a, &&b| lats[a].abs().total_cmp(&lats[b].abs()))
                .unwrap()
        }
    };
    let latitude = try_bisect(|l| ctx.gap(phi, l), lats[k], lats[k + 1], gaps[k], gaps[k + 1], PARAM_TOL)?;
    if ctx.theta_m > 0.0 && latitude.abs() >= 2.0 * ctx.theta_m {
        ctx.policy.violation(&mut w, Warnings::LATITUDE, || {
            WobbleError::condition(
                Condition::LatitudeBound,
                format!(
                    "latitude {:.4}° at azimuth {:.4}° exceeds twice the slope bound {:.4}°",
                    latitude.to_degrees(),
                    phi.to_degrees(),
                    ctx.theta_m.to_degrees()
                ),
            )
        })?;
    }
    Ok((
        GammaPoint {
            point: ctx.sphere.point(phi, latitude),
            azimuth: phi,
            latitude,
        },
        w,
    ))
}

/// Uniform-azimuth polyline of Γ over a full turn.
#[derive(Debug, Clone, Serialize)]
pub struct GammaCurve {
    pub sphere: SphereS,
    pub points: Vec<GammaPoint>,
    pub warnings: Warnings,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct GammaStats {
    pub max_sphere_residual: f64,
    pub max_surface_residual: f64,
    /// Largest `|λ| / 2Θ_M`.
    pub max_latitude_ratio: f64,
    pub max_latitude: f64,
    pub monotone: bool,
    pub max_spacing_ratio: f64,
    pub points: usize,
}

impl GammaStats {
    pub fn merge(&self, o: &GammaStats) -> GammaStats {
        GammaStats {
            max_sphere_residual: self.max_sphere_residual.max(o.max_sphere_residual),
            max_surface_residual: self.max_surface_residual.max(o.max_surface_residual),
            max_latitude_ratio: self.max_latitude_ratio.max(o.max_latitude_ratio),
            max_latitude: self.max_latitude.max(o.max_latitude),
            monotone: self.monotone && o.monotone,
            max_spacing_ratio: self.max_spacing_ratio.max(o.max_spacing_ratio),
            points: self.points + o.points,
        }
    }

    pub fn empty() -> GammaStats {
        GammaStats {
            monotone: true,
            ..Default::default()
        }
    }
}

/// Upper bound on the spacing of adjacent samples `step` apart in azimuth.
///
/// Horizontal spacing is at most `2R sin(step/2) / √(1 − (tanΘ tan2Θ)²)`
/// and the vertical part adds at most a factor `sec Θ`.
pub fn spacing_bound(radius: f64, step: f64, theta_m: f64) -> f64 {
    let k = (theta_m.tan() * (2.0 * theta_m).tan()).min(0.999);
    2.0 * radius * (step / 2.0).sin() / theta_m.cos() / (1.0 - k * k).sqrt() * (1.0 + 1e-3)
}

impl GammaCurve {
    /// Recompute every curve invariant from the terrain.
    pub fn stats(&self, terrain: &Terrain, side: f64, theta_m: f64) -> Result<GammaStats> {
        let mut s = GammaStats::empty();
        let r = self.sphere.radius;
        for (i, g) in self.points.iter().enumerate() {
            s.max_sphere_residual = s
                .max_sphere_residual
                .max((g.point.dist(self.sphere.center) - r).abs() / r);
            s.max_surface_residual = s
                .max_surface_residual
                .max(terrain.height_above(g.point)?.abs() / side);
            s.max_latitude = s.max_latitude.max(g.latitude.abs());
            if theta_m > 0.0 {
                s.max_latitude_ratio = s.max_latitude_ratio.max(g.latitude.abs() / (2.0 * theta_m));
            }
            if i > 0 {
                let prev = &self.points[i - 1];
                if !(g.azimuth > prev.azimuth) {
                    s.monotone = false;
                }
                let bound = spacing_bound(r, g.azimuth - prev.azimuth, theta_m);
                s.max_spacing_ratio = s.max_spacing_ratio.max(g.point.dist(prev.point) / bound);
            }
        }
        s.points = self.points.len();
        Ok(s)
    }
}

/// Trace Γ over a full turn starting at azimuth `phi0`.
///
/// `step` must give at least 100 samples per chord of length `L`:
/// `step ≤ 2·arcsin(L / 200R)`. The step is shrunk so that the last sample
/// lands exactly on `phi0 + 2π`.
pub fn trace_gamma(ctx: &GammaContext<'_>, phi0: f64, step: f64, exec: Exec) -> Result<GammaCurve> {
    let max_step = 2.0 * (ctx.side / (200.0 * ctx.sphere.radius)).min(1.0).asin();
    if !(step > 0.0 && step <= max_step) {
        return Err(WobbleError::Validation(format!(
            "curve step {:.4}° must lie in (0, {:.4}°]",
            step.to_degrees(),
            max_step.to_degrees()
        )));
    }
    let n = (TAU / step).ceil() as usize;
    let h = TAU / n as f64;
    let solved = exec.map_range(n + 1, |k| gamma_point_at_azimuth(ctx, phi0 + k as f64 * h));
    let mut points = Vec::with_capacity(n + 1);
    let mut warnings = Warnings::empty();
    for r in solved {
        let (p, w) = r?;
        warnings |= w;
        points.push(p);
    }
    let curve = GammaCurve {
        sphere: ctx.sphere,
        points,
        warnings,
    };
    let stats = curve.stats(ctx.terrain, ctx.side, ctx.theta_m)?;
    if stats.max_spacing_ratio > 1.0 {
        return Err(WobbleError::GeometryViolation(format!(
            "adjacent curve samples too far apart (ratio {:.6} to the bound)",
            stats.max_spacing_ratio
        )));
    }
    Ok(curve)
}

/// Samples used to isolate the chord root inside its bracket.
const CHORD_BRACKET_SAMPLES: usize = 8;

/// Next point of Γ at straight-line distance `L` from `from`, with a larger
/// azimuth.
///
/// The root is isolated in `[hint − 2·step, hint + 2·step]`; continuity
/// with the previous position selects the branch.
pub fn chord_advance(
    ctx: &GammaContext<'_>,
    from: &GammaPoint,
    hint: f64,
    step: f64,
) -> Result<(GammaPoint, Warnings)> {
    let mut w = Warnings::empty();
    if ctx.theta_m > Thresholds::get().theta_motion_a {
        ctx.policy.violation(&mut w, Warnings::SLOPE_OVERRIDE, || {
            WobbleError::condition(
                Condition::UnblockedMarch,
                format!("terrain slope {:.4}°", ctx.theta_m.to_degrees()),
            )
        })?;
    }
    let len = ctx.side;
    let dist = |phi: f64| -> Result<f64> { Ok(ctx.point_fast(phi)?.point.dist(from.point) - len) };
    let lo = hint - 2.0 * step;
    let hi = hint + 2.0 * step;
    let phis: Vec<f64> = (0..=CHORD_BRACKET_SAMPLES)
        .map(|k| lo + (hi - lo) * k as f64 / CHORD_BRACKET_SAMPLES as f64)
        .collect();
    let mut vals = Vec::with_capacity(phis.len());
    for &p in &phis {
        vals.push(dist(p)?);
    }
    let changes = sign_change_indices(&vals);
    let k = match changes.len() {
        0 => {
            return Err(WobbleError::BlockedMotion(format!(
                "no point of the curve at chord distance L within [{:.4}°, {:.4}°] (unblocked-march condition, slope limit 14.47°)",
                lo.to_degrees(),
                hi.to_degrees()
            )))
        }
        1 => changes[0],
        n => {
            ctx.policy.violation(&mut w, Warnings::MULTIPLE_ROOTS, || {
                WobbleError::condition(Condition::UnblockedMarch, format!("{n} chord solutions near the hint"))
            })?;
            *changes
                .iter()
                .min_by(|&&a, &&b| (phis[a] - hint).abs().total_cmp(&(phis[b] - hint).abs()))
                .unwrap()
        }
    };
    let phi2 = try_bisect(dist, phis[k], phis[k + 1], vals[k], vals[k + 1], PARAM_TOL)?;
    let (p, w2) = gamma_point_at_azimuth(ctx, phi2)?;
    w |= w2;
    if !(phi2 > from.azimuth) {
        ctx.policy.violation(&mut w, Warnings::NON_MONOTONE, || {
            WobbleError::condition(Condition::UnblockedMarch, "chord end does not lie ahead of its start")
        })?;
    }
    Ok((p, w))
}

/// Intersection of the circle of radius `radius` about `center`, in the
/// plane orthogonal to `axis_dir`, with the ground.
///
/// Exactly two crossings exist below 35.264°, one on each side of the
/// vertical plane containing the axis. `orientation > 0` selects the side
/// to the left of the axis seen from above (counterclockwise foot order).
pub fn circle_surface_intersection(
    center: Point3,
    axis_dir: Vec3,
    radius: f64,
    terrain: &Terrain,
    orientation: f64,
    policy: Policy,
) -> Result<(Point3, Warnings)> {
    let mut w = Warnings::empty();
    if terrain.slope_bound() >= Thresholds::get().theta_motion_b {
        policy.violation(&mut w, Warnings::SLOPE_OVERRIDE, || {
            WobbleError::condition(
                Condition::OrthogonalTriple,
                format!("terrain slope {:.4}°", terrain.slope_bound().to_degrees()),
            )
        })?;
    }
    let u = axis_dir.normalized();
    let left = Vec3::Z.cross(u);
    if !(left.norm() > 1e-12) {
        return Err(WobbleError::Domain("vertical foot-circle axis".into()));
    }
    let side = left.normalized() * orientation.signum();
    let up = u.cross(left.normalized());
    let up = if up.z < 0.0 { -up } else { up };
    let at = |t: f64| center + (side * t.cos() + up * t.sin()) * radius;
    let gap = |t: f64| terrain.height_above(at(t));

    let mut full = Vec::with_capacity(360);
    for k in 0..360 {
        full.push(gap(k as f64 * DEG)?);
    }
    let n = cyclic_sign_change_indices(&full).len();
    if n < 2 {
        return Err(WobbleError::GeometryViolation(
            "foot circle does not cross the ground".into(),
        ));
    }
    if n > 2 {
        policy.violation(&mut w, Warnings::MULTIPLE_ROOTS, || {
            WobbleError::condition(
                Condition::OrthogonalTriple,
                format!("foot circle crosses the ground {n} times, expected 2"),
            )
        })?;
    }
    let ts: Vec<f64> = (-90..=90).map(|k| k as f64 * DEG).collect();
    let mut half = Vec::with_capacity(ts.len());
    for &t in &ts {
        half.push(gap(t)?);
    }
    let changes = sign_change_indices(&half);
    let Some(&k) = changes.iter().min_by(|&&a, &&b| ts[a].abs().total_cmp(&ts[b].abs())) else {
        return Err(WobbleError::GeometryViolation(
            "no ground crossing on the selected side of the foot circle".into(),
        ));
    };
    if changes.len() > 1 {
        policy.violation(&mut w, Warnings::MULTIPLE_ROOTS, || {
            WobbleError::condition(Condition::OrthogonalTriple, "several crossings on one side of the foot circle")
        })?;
    }
    let t = try_bisect(gap, ts[k], ts[k + 1], half[k], half[k + 1], PARAM_TOL)?;
    Ok((at(t), w))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::terrain::{Bump, Extent};
    use approx::assert_abs_diff_eq;

    fn flat() -> Terrain {
        Terrain::flat(Extent::square(4.0)).unwrap()
    }

    #[test]
    fn flat_ground_equator() {
        let t = flat();
        let s = SphereS { center: Vec3::ZERO, radius: 1.0 };
        let (ctx, _) = GammaContext::new(s, &t, 1.0, Policy::STRICT).unwrap();
        // flat terrain has Θ_M = 0 so the latitude bound is skipped
        let (g, _) = gamma_point_at_azimuth(&ctx, 0.0).unwrap();
        assert_abs_diff_eq!(g.point.x, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(g.point.z, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn steep_terrain_refused() {
        let t = Terrain::plane(31f64.to_radians().tan(), 0.0, 0.0, Extent::square(4.0)).unwrap();
        let s = SphereS { center: Vec3::ZERO, radius: 1.0 };
        let e = GammaContext::new(s, &t, 1.0, Policy::STRICT).unwrap_err();
        assert!(matches!(e, WobbleError::ConditionViolation { condition: Condition::GammaSimple, .. }));
        assert!(GammaContext::new(s, &t, 1.0, Policy::OVERRIDE).is_ok());
    }

    #[test]
    fn circle_gives_exact_chord_increment() {
        // flat ground through the center: Γ is the equator of radius R
        let t = flat();
        let r = 0.8;
        let s = SphereS { center: Vec3::ZERO, radius: r };
        let (ctx, _) = GammaContext::new(s, &t, 1.0, Policy::STRICT).unwrap();
        let (start, _) = gamma_point_at_azimuth(&ctx, 0.3).unwrap();
        let inc = 2.0 * (1.0 / (2.0 * r)).asin();
        let (next, _) = chord_advance(&ctx, &start, 0.3 + inc + 0.001, 0.25f64.to_radians()).unwrap();
        assert_abs_diff_eq!(next.azimuth - 0.3, inc, epsilon = 1e-9);
        assert_abs_diff_eq!(next.point.dist(start.point), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn chord_without_bracket_is_blocked() {
        let t = flat();
        let s = SphereS { center: Vec3::ZERO, radius: 0.8 };
        let (ctx, _) = GammaContext::new(s, &t, 1.0, Policy::STRICT).unwrap();
        let (start, _) = gamma_point_at_azimuth(&ctx, 0.0).unwrap();
        let e = chord_advance(&ctx, &start, 0.2, 0.25f64.to_radians()).unwrap_err();
        assert!(matches!(e, WobbleError::BlockedMotion(_)));
    }

    #[test]
    fn flat_circle_intersection_is_horizontal() {
        let t = flat();
        let (p, w) = circle_surface_intersection(Vec3::ZERO, Vec3::X, 1.0, &t, 1.0, Policy::STRICT).unwrap();
        assert!(w.is_empty());
        assert_abs_diff_eq!(p.y, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.z, 0.0, epsilon = 1e-12);
        let (q, _) = circle_surface_intersection(Vec3::ZERO, Vec3::X, 1.0, &t, -1.0, Policy::STRICT).unwrap();
        assert_abs_diff_eq!(q.y, -1.0, epsilon = 1e-12);
    }

    #[test]
    fn full_trace_is_periodic_on_tilted_plane() {
        let g = 8f64.to_radians().tan();
        let t = Terrain::plane(g, 0.0, 0.0, Extent::square(4.0)).unwrap();
        let s = SphereS { center: Vec3::new(0.1, 0.0, g * 0.1), radius: 0.75 };
        let (ctx, _) = GammaContext::new(s, &t, 1.0, Policy::STRICT).unwrap();
        let c = trace_gamma(&ctx, 0.0, 0.25f64.to_radians(), Exec::default()).unwrap();
        let first = c.points.first().unwrap().point;
        let last = c.points.last().unwrap().point;
        assert!(first.dist(last) < 1e-9 * s.radius);
        let st = c.stats(&t, 1.0, t.slope_bound()).unwrap();
        assert!(st.monotone && st.max_latitude_ratio < 1.0);
    }

    #[test]
    fn bumpy_trace_invariants() {
        let t = Terrain::bumps(
            vec![Bump { cx: 0.3, cy: 0.1, amplitude: 0.08, sigma: 0.5 }],
            Extent::square(4.0),
        )
        .unwrap();
        let s = SphereS { center: Vec3::new(0.0, 0.0, 0.02), radius: 0.72 };
        let (ctx, _) = GammaContext::new(s, &t, 1.0, Policy::STRICT).unwrap();
        let c = trace_gamma(&ctx, 0.0, 0.25f64.to_radians(), Exec::default()).unwrap();
        let st = c.stats(&t, 1.0, t.slope_bound()).unwrap();
        assert!(st.max_sphere_residual < 1e-9);
        assert!(st.max_surface_residual < 1e-9);
        assert!(st.monotone);
    }
}
