//! Tables with feet on a circle: the horizontal-table height model, the
//! equal-integrals identity, balance angles of the diagonal bracket, and
//! the quality of the resulting approximate equilibria.
//!
//! The table is held horizontal at height 0 with its feet on a circle of
//! radius `ρ` about `center`, turned by `Θ`. Foot `i` sits at azimuth
//! `Θ + aᵢ` and has height `hᵢ(Θ) = −f(xᵢ, yᵢ)`.

use std::f64::consts::TAU;
use std::io::Write;

use nalgebra::{Matrix3, Vector3};
use serde::Serialize;

use crate::contact::{settle_three_feet, signed_heights, TableShape, TableSpec};
use crate::error::{Result, WobbleError};
use crate::exec::Exec;
use crate::geometry::{diagonal_intersection_ratios, Point3, Vec3};
use crate::root::{bisect, cyclic_sign_change_indices, PARAM_TOL};
use crate::terrain::{Extent, Terrain};

/// Smallest accepted scan size.
pub const MIN_SCAN_SAMPLES: usize = 256;

/// `g` counts as identically zero below this fraction of `L`.
pub const DEGENERATE_TOL: f64 = 1e-12;

/// Largest `|g(Θ̄)| / L` accepted as a balance angle.
pub const ROOT_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct HeightScan {
    pub table: TableSpec,
    pub center: [f64; 2],
    pub radius: f64,
    pub angles: [f64; 4],
    pub alpha: f64,
    pub beta: f64,
    pub theta: Vec<f64>,
    pub heights: Vec<[f64; 4]>,
    terrain: Terrain,
}

fn circle_of(table: &TableSpec) -> Result<(f64, [f64; 4])> {
    table.validate()?;
    table.as_circle().ok_or_else(|| {
        WobbleError::Domain("the height scan needs a table with feet on a circle".into())
    })
}

fn foot_heights(terrain: &Terrain, center: [f64; 2], radius: f64, angles: &[f64; 4], theta: f64) -> Result<[f64; 4]> {
    let mut h = [0.0; 4];
    for (i, a) in angles.iter().enumerate() {
        let (s, c) = (theta + a).sin_cos();
        h[i] = -terrain.eval(center[0] + radius * c, center[1] + radius * s)?;
    }
    Ok(h)
}

fn bracket(alpha: f64, beta: f64, h: &[f64; 4]) -> f64 {
    (1.0 - alpha) * h[0] + alpha * h[2] - (1.0 - beta) * h[1] - beta * h[3]
}

/// Heights of the four feet over a uniform grid of `n` table angles.
pub fn height_scan(table: &TableSpec, terrain: &Terrain, center: [f64; 2], n: usize, exec: Exec) -> Result<HeightScan> {
    if n < MIN_SCAN_SAMPLES || !n.is_power_of_two() {
        return Err(WobbleError::Validation(format!(
            "scan size must be a power of two of at least {MIN_SCAN_SAMPLES}, got {n}"
        )));
    }
    let (radius, angles) = circle_of(table)?;
    if !terrain.extent().contains_disc(center[0], center[1], radius) {
        return Err(WobbleError::Domain(format!(
            "foot circle of radius {radius} about ({}, {}) leaves the terrain extent",
            center[0], center[1]
        )));
    }
    let (alpha, beta) = diagonal_intersection_ratios(angles)?;
    let theta: Vec<f64> = (0..n).map(|k| TAU * k as f64 / n as f64).collect();
    let heights = exec
        .map(&theta, |&t| foot_heights(terrain, center, radius, &angles, t))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    Ok(HeightScan {
        table: *table,
        center,
        radius,
        angles,
        alpha,
        beta,
        theta,
        heights,
        terrain: terrain.clone(),
    })
}

impl HeightScan {
    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    pub fn side(&self) -> f64 {
        self.table.scale()
    }

    pub fn g_values(&self) -> Vec<f64> {
        self.heights.iter().map(|h| bracket(self.alpha, self.beta, h)).collect()
    }

    /// Bracket function at an arbitrary table angle.
    pub fn g_at(&self, theta: f64) -> Result<f64> {
        let h = foot_heights(&self.terrain, self.center, self.radius, &self.angles, theta)?;
        Ok(bracket(self.alpha, self.beta, &h))
    }

    /// Grid offset of foot `i` relative to foot 1, when it is a whole
    /// number of grid steps.
    pub fn grid_offset(&self, i: usize) -> Option<usize> {
        let n = self.len() as f64;
        let k = (self.angles[i] - self.angles[0]).rem_euclid(TAU) / TAU * n;
        let r = k.round();
        ((k - r).abs() < 1e-9).then_some(r as usize % self.len())
    }

    /// Largest `|hᵢ(Θ) − h₁(Θ + aᵢ − a₁)|` over the grid-aligned feet.
    pub fn shift_identity_error(&self) -> Option<f64> {
        let n = self.len();
        let mut worst: Option<f64> = None;
        for i in 1..4 {
            let Some(k) = self.grid_offset(i) else { continue };
            let e = (0..n).fold(0.0f64, |m, j| m.max((self.heights[j][i] - self.heights[(j + k) % n][0]).abs()));
            worst = Some(worst.unwrap_or(0.0).max(e));
        }
        worst
    }

    /// `Θ (degrees), h1..h4, g` per grid angle.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "theta_deg,h1,h2,h3,h4,g")?;
        for (t, h) in self.theta.iter().zip(&self.heights) {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                t.to_degrees(),
                h[0],
                h[1],
                h[2],
                h[3],
                bracket(self.alpha, self.beta, h)
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntegralIdentity {
    /// Periodic trapezoid integrals of `h₁..h₄` over a full turn.
    pub integrals: [f64; 4],
    /// `max |∫hᵢ − ∫hⱼ| / (mean |∫h| + L)`.
    pub residual: f64,
    pub g_integral: f64,
    /// All foot offsets are whole grid steps.
    pub grid_aligned: bool,
}

pub fn integral_identity_check(scan: &HeightScan) -> IntegralIdentity {
    let w = TAU / scan.len() as f64;
    let mut integrals = [0.0; 4];
    for h in &scan.heights {
        for i in 0..4 {
            integrals[i] += h[i] * w;
        }
    }
    let g_integral = scan.g_values().iter().sum::<f64>() * w;
    let mean = integrals.iter().map(|v| v.abs()).sum::<f64>() / 4.0;
    let mut spread: f64 = 0.0;
    for i in 0..4 {
        for j in i + 1..4 {
            spread = spread.max((integrals[i] - integrals[j]).abs());
        }
    }
    IntegralIdentity {
        integrals,
        residual: spread / (mean + scan.side()),
        g_integral,
        grid_aligned: (1..4).all(|i| scan.grid_offset(i).is_some()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PeriodicRoot {
    /// Root in `[0, 2π)`.
    pub theta: f64,
    /// Sign of the function's change across the root.
    pub slope_sign: i8,
}

/// Transversal roots of a `2π`-periodic function sampled on the uniform
/// grid `values`, refined by bisection of `f` to `1e-12`.
pub fn periodic_roots<F>(values: &[f64], mut f: F) -> Vec<PeriodicRoot>
where
    F: FnMut(f64) -> f64,
{
    let n = values.len();
    let h = TAU / n as f64;
    cyclic_sign_change_indices(values)
        .into_iter()
        .map(|k| {
            let (a, b) = (k as f64 * h, (k + 1) as f64 * h);
            let (fa, fb) = (values[k], values[(k + 1) % n]);
            let t = bisect(&mut f, a, b, fa, fb, PARAM_TOL).rem_euclid(TAU);
            PeriodicRoot {
                theta: t,
                slope_sign: if fb > fa { 1 } else { -1 },
            }
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct BalanceAngles {
    /// `g` vanishes to within `1e-12·L` everywhere.
    pub degenerate: bool,
    pub roots: Vec<PeriodicRoot>,
    /// Grid angles where `|g|` dips into the tolerance band without a sign
    /// change.
    pub touches: Vec<f64>,
    pub max_abs_g: f64,
}

pub fn find_balance_angles(scan: &HeightScan) -> Result<BalanceAngles> {
    let g = scan.g_values();
    let l = scan.side();
    let max_abs_g = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if max_abs_g <= DEGENERATE_TOL * l {
        return Ok(BalanceAngles {
            degenerate: true,
            roots: Vec::new(),
            touches: Vec::new(),
            max_abs_g,
        });
    }
    let mut err = None;
    let roots = periodic_roots(&g, |t| match scan.g_at(t) {
        Ok(v) => v,
        Err(e) => {
            err.get_or_insert(e);
            0.0
        }
    });
    if let Some(e) = err {
        return Err(e);
    }
    let n = g.len();
    let band = ROOT_TOL * l;
    let touches = (0..n)
        .filter(|&k| {
            let (p, q) = (g[(k + n - 1) % n], g[(k + 1) % n]);
            g[k].abs() <= band && p.signum() == q.signum() && g[k].abs() <= p.abs().min(q.abs())
        })
        .map(|k| scan.theta[k])
        .collect();
    Ok(BalanceAngles {
        degenerate: false,
        roots,
        touches,
        max_abs_g,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ApproxEquilibrium {
    pub theta: f64,
    /// Ground points under the four feet.
    pub q: [Point3; 4],
    /// Gap between the weighted diagonal points of `q₁..q₄`.
    pub coplanarity_residual: f64,
    /// Largest change of a foot-pair distance, relative to `L`.
    pub distortion: f64,
    /// Largest foot height after the best rigid fit of the table to `q`.
    pub fit_height: f64,
    pub g: f64,
}

/// Best rigid placement (least squares) of `local` onto `target`.
fn kabsch(local: &[Point3; 4], target: &[Point3; 4]) -> [Point3; 4] {
    let mean = |p: &[Point3; 4]| p.iter().fold(Vec3::ZERO, |a, b| a + *b) / 4.0;
    let (pc, qc) = (mean(local), mean(target));
    let mut h = Matrix3::zeros();
    for (p, q) in local.iter().zip(target) {
        let a = Vector3::new(p.x - pc.x, p.y - pc.y, p.z - pc.z);
        let b = Vector3::new(q.x - qc.x, q.y - qc.y, q.z - qc.z);
        h += a * b.transpose();
    }
    let svd = h.svd(true, true);
    let (u, vt) = (svd.u.unwrap(), svd.v_t.unwrap());
    let mut d = Matrix3::identity();
    if (vt.transpose() * u.transpose()).determinant() < 0.0 {
        d[(2, 2)] = -1.0;
    }
    let r = vt.transpose() * d * u.transpose();
    local.map(|p| {
        let v = r * Vector3::new(p.x - pc.x, p.y - pc.y, p.z - pc.z);
        qc + Vec3::new(v[0], v[1], v[2])
    })
}

/// Ground points under a horizontal table at angle `theta_bar` and how far
/// they are from an exact placement.
pub fn approximate_equilibrium(
    table: &TableSpec,
    terrain: &Terrain,
    center: [f64; 2],
    theta_bar: f64,
) -> Result<ApproxEquilibrium> {
    let (radius, angles) = circle_of(table)?;
    let (alpha, beta) = diagonal_intersection_ratios(angles)?;
    let l = table.scale();
    let mut q = [Vec3::ZERO; 4];
    let mut local = [Vec3::ZERO; 4];
    for (i, a) in angles.iter().enumerate() {
        let (s, c) = (theta_bar + a).sin_cos();
        let (x, y) = (center[0] + radius * c, center[1] + radius * s);
        q[i] = Vec3::new(x, y, terrain.eval(x, y)?);
        local[i] = Vec3::new(x, y, 0.0);
    }
    let h = q.map(|p| -p.z);
    let g = bracket(alpha, beta, &h);
    if !(g.abs() <= ROOT_TOL * l) {
        return Err(WobbleError::Domain(format!(
            "table angle {:.6}° is not a balance angle (g = {g:e})",
            theta_bar.to_degrees()
        )));
    }
    let diag = (q[0] * (1.0 - alpha) + q[2] * alpha) - (q[1] * (1.0 - beta) + q[3] * beta);
    let d = table.reference_distances();
    let mut distortion: f64 = 0.0;
    for i in 0..4 {
        for j in i + 1..4 {
            distortion = distortion.max((q[i].dist(q[j]) - d[i][j]).abs() / l);
        }
    }
    let fitted = kabsch(&local, &q);
    let mut fit_height: f64 = 0.0;
    for p in &fitted {
        fit_height = fit_height.max(terrain.height_above(*p)?.abs());
    }
    Ok(ApproxEquilibrium {
        theta: theta_bar,
        q,
        coplanarity_residual: diag.norm(),
        distortion,
        fit_height,
        g,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct StudyLevel {
    pub target: f64,
    pub theta_m: f64,
    pub roots: Vec<f64>,
    /// Largest distortion over the balance angles.
    pub distortion: f64,
    pub fit_height: f64,
    /// Reason the level was left out of the fit.
    pub excluded: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerFit {
    pub exponent: f64,
    /// RMS residual of the least-squares line in log-log.
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScalingStudy {
    pub levels: Vec<StudyLevel>,
    pub distortion_fit: PowerFit,
    pub height_fit: PowerFit,
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn power_fit(points: &[(f64, f64)]) -> Result<PowerFit> {
    if points.len() < 2 || points.iter().any(|&(x, y)| !(x > 0.0 && y > 0.0)) {
        return Err(WobbleError::Validation("power fit needs two or more positive points".into()));
    }
    let n = points.len() as f64;
    let (xs, ys): (Vec<f64>, Vec<f64>) = points.iter().map(|&(x, y)| (x.ln(), y.ln())).unzip();
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let ss: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - my - slope * (x - mx)).powi(2))
        .sum();
    Ok(PowerFit {
        exponent: slope,
        residual: (ss / n).sqrt(),
    })
}

/// Scale `base` to each slope in `targets`, locate the balance angles and
/// fit how the distortion grows with the slope bound.
pub fn distortion_scaling_study(
    table: &TableSpec,
    base: &Terrain,
    targets: &[f64],
    center: [f64; 2],
    n: usize,
    exec: Exec,
) -> Result<ScalingStudy> {
    if targets.len() < 3 {
        return Err(WobbleError::Validation(format!(
            "a scaling study needs at least 3 slope levels, got {}",
            targets.len()
        )));
    }
    let base_gradient = base.slope_estimate().max_gradient;
    let mut levels = Vec::with_capacity(targets.len());
    for &target in targets {
        let mut level = StudyLevel {
            target,
            theta_m: 0.0,
            roots: Vec::new(),
            distortion: 0.0,
            fit_height: 0.0,
            excluded: None,
        };
        if !(target > 0.0 && base_gradient > 0.0) {
            level.excluded = Some("flat level".into());
            levels.push(level);
            continue;
        }
        let terrain = base.scaled(target.tan() / base_gradient)?;
        level.theta_m = terrain.slope_bound();
        let scan = height_scan(table, &terrain, center, n, exec)?;
        let balance = find_balance_angles(&scan)?;
        if balance.degenerate || balance.roots.is_empty() {
            level.excluded = Some("no balance angle".into());
            levels.push(level);
            continue;
        }
        for r in &balance.roots {
            let a = approximate_equilibrium(table, &terrain, center, r.theta)?;
            level.roots.push(r.theta);
            level.distortion = level.distortion.max(a.distortion);
            level.fit_height = level.fit_height.max(a.fit_height);
        }
        if !(level.distortion > 0.0) {
            level.excluded = Some("zero distortion".into());
        }
        levels.push(level);
    }
    let used: Vec<&StudyLevel> = levels.iter().filter(|l| l.excluded.is_none()).collect();
    if used.len() < 3 {
        return Err(WobbleError::Validation(format!(
            "only {} usable slope levels remain, 3 are needed",
            used.len()
        )));
    }
    let distortion_fit = power_fit(&used.iter().map(|l| (l.theta_m, l.distortion)).collect::<Vec<_>>())?;
    let height_fit = power_fit(&used.iter().map(|l| (l.theta_m, l.fit_height.max(f64::MIN_POSITIVE))).collect::<Vec<_>>())?;
    Ok(ScalingStudy {
        levels,
        distortion_fit,
        height_fit,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CounterexampleReport {
    pub sphere_radius: f64,
    pub concyclicity_defect: f64,
    /// Smallest gap of the free foot over all placements and choices of
    /// free foot, with the other three feet on the ground.
    pub min_residual: f64,
    pub best_center: [f64; 2],
    pub best_yaw: f64,
    pub best_free_foot: usize,
    pub placements: usize,
}

fn relabeled(table: &TableSpec, shift: usize) -> TableSpec {
    let shape = match table.shape {
        TableShape::Square { side } => {
            let h = side / 2.0;
            let p = [[-h, -h], [h, -h], [h, h], [-h, h]];
            TableShape::Quad {
                points: std::array::from_fn(|i| p[(i + shift) % 4]),
            }
        }
        TableShape::Circle { radius, angles } => TableShape::Circle {
            radius,
            angles: std::array::from_fn(|i| angles[(i + shift) % 4]),
        },
        TableShape::Quad { points } => TableShape::Quad {
            points: std::array::from_fn(|i| points[(i + shift) % 4]),
        },
    };
    TableSpec {
        shape,
        leg_length: table.leg_length,
    }
}

/// Rest the table on a spherical cap of radius `sphere_radius` (a plane
/// when infinite) over a grid of yaws and centers, and report how close
/// the free foot comes to the ground.
pub fn counterexample_large_sphere(
    table: &TableSpec,
    sphere_radius: f64,
    yaw_steps: usize,
    center_offsets: &[f64],
    exec: Exec,
) -> Result<CounterexampleReport> {
    table.validate()?;
    if yaw_steps == 0 || center_offsets.is_empty() {
        return Err(WobbleError::Validation("placement scan needs yaws and centers".into()));
    }
    let l = table.scale();
    let reach = center_offsets.iter().fold(0.0f64, |m, c| m.max(c.abs())) + 2.0 * l;
    let extent = Extent::square(reach);
    let terrain = if sphere_radius.is_infinite() {
        Terrain::flat(extent)?
    } else {
        Terrain::cap(0.0, 0.0, sphere_radius, extent)?
    };
    let mut placements = Vec::new();
    for &cx in center_offsets {
        for &cy in center_offsets {
            for k in 0..yaw_steps {
                for free in 0..4 {
                    placements.push(([cx, cy], TAU * k as f64 / yaw_steps as f64, free));
                }
            }
        }
    }
    let tables: Vec<TableSpec> = (0..4).map(|s| relabeled(table, (s + 1) % 4)).collect();
    let gaps = exec.map(&placements, |&(c, yaw, free)| -> Result<f64> {
        // relabel so that the chosen foot is the fourth
        let t = &tables[free];
        let feet = settle_three_feet(t, &terrain, c, yaw)?;
        Ok(signed_heights(&feet, &terrain, l)?.h[3].abs())
    });
    let mut best = (f64::INFINITY, 0);
    for (i, g) in gaps.into_iter().enumerate() {
        let g = g?;
        if g < best.0 {
            best = (g, i);
        }
    }
    let (c, yaw, free) = placements[best.1];
    Ok(CounterexampleReport {
        sphere_radius,
        concyclicity_defect: table.concyclicity_defect(),
        min_residual: best.0,
        best_center: c,
        best_yaw: yaw,
        best_free_foot: free,
        placements: placements.len(),
    })
}
