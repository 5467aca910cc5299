use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use serde_json::{json, Value};
use wobble_core::campaign::{run_campaign, write_campaign_csv, CampaignConfig};
use wobble_core::conjecture::{
    approximate_equilibrium, distortion_scaling_study, find_balance_angles, height_scan, integral_identity_check,
};
use wobble_core::contact::TableSpec;
use wobble_core::geometry::{diagonal_intersection_ratios, thresholds_report};
use wobble_core::motion::{find_equilibrium, run_motion_a, run_motion_b, write_trace_csv, MotionKind, TRACE_HEADER};
use wobble_core::terrain::{generate, parse_terrain, serialize_terrain, Extent, DEFAULT_HALF_EXTENT};
use wobble_core::warnings::Policy;
use wobble_core::{Exec, Point3, Result, Terrain, WobbleError};

use crate::{CheckArgs, GenArgs, MonteCarloArgs, MotionArg, ScanArgs, SolveArgs, TableArgs, EXIT_NOT_FOUND};

/// Degrees rounded to 4 decimals for reports.
fn deg(rad: f64) -> f64 {
    (rad.to_degrees() * 1e4).round() / 1e4
}

fn angle_arg(name: &str, degrees: f64) -> Result<f64> {
    if !degrees.is_finite() {
        return Err(WobbleError::Validation(format!("--{name} must be finite")));
    }
    Ok(degrees.to_radians())
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(WobbleError::Validation(format!("--{name} must be positive, got {v}")));
    }
    Ok(v)
}

fn read_terrain(path: &Path) -> Result<Terrain> {
    let text = fs::read_to_string(path)?;
    parse_terrain(&text)
}

fn table_from(a: &TableArgs) -> Result<TableSpec> {
    let t = match (a.side, a.circle, &a.angles) {
        (_, Some(r), Some(angles)) => {
            let r = positive("circle", r)?;
            if angles.len() != 4 {
                return Err(WobbleError::Validation(format!("--angles needs 4 values, got {}", angles.len())));
            }
            TableSpec::circle(r, [angles[0], angles[1], angles[2], angles[3]].map(f64::to_radians))
        }
        (Some(side), _, _) => TableSpec::square(positive("side", side)?),
        _ => TableSpec::square(1.0),
    };
    t.validate()?;
    Ok(t)
}

fn center_from(a: &TableArgs) -> Result<[f64; 2]> {
    match a.center[..] {
        [x, y] if x.is_finite() && y.is_finite() => Ok([x, y]),
        _ => Err(WobbleError::Validation("--center needs two finite values X,Y".into())),
    }
}

fn emit(report: &Value, path: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(report).expect("report serializes") + "\n";
    match path {
        Some(p) => fs::write(p, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn point(p: &Point3) -> Value {
    json!([p.x, p.y, p.z])
}

fn policy(override_: bool) -> Policy {
    if override_ {
        Policy::OVERRIDE
    } else {
        Policy::STRICT
    }
}

fn slope_json(t: &Terrain) -> Value {
    let s = t.slope_estimate();
    json!({
        "slope_bound_deg": deg(s.angle),
        "max_gradient": s.max_gradient,
        "at": s.at,
        "samples": s.samples,
    })
}

pub fn gen_terrain(a: &GenArgs) -> Result<u8> {
    let theta = angle_arg("theta", a.theta)?;
    let terrain = generate(a.seed, theta, a.bumps, Extent::square(DEFAULT_HALF_EXTENT))?;
    let text = serialize_terrain(&terrain);
    let report = json!({ "seed": a.seed, "target_deg": a.theta, "bumps": a.bumps, "slope": slope_json(&terrain) });
    match &a.out {
        Some(p) => {
            fs::write(p, text)?;
            emit(&report, None)?;
        }
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            eprintln!("{}", serde_json::to_string(&report).expect("report serializes"));
        }
    }
    Ok(0)
}

pub fn check(a: &CheckArgs) -> Result<u8> {
    let terrain = read_terrain(&a.terrain)?;
    let th = thresholds_report();
    let theta = terrain.slope_bound();
    let e = terrain.extent();
    let report = json!({
        "slope": slope_json(&terrain),
        "extent": [e.min_x, e.max_x, e.min_y, e.max_y],
        "thresholds_deg": th.degrees().iter().map(|(k, v)| ((*k).to_string(), json!((v * 1e4).round() / 1e4))).collect::<serde_json::Map<_, _>>(),
        "gamma_simple": theta < th.theta_gamma_simple,
        "motion_gamma_certified": theta <= th.theta_motion_a,
        "motion_rt_certified": theta < th.theta_motion_b,
    });
    emit(&report, None)?;
    Ok(0)
}

pub fn solve(a: &SolveArgs) -> Result<u8> {
    let step = positive("step", a.step)?.to_radians();
    let yaw = angle_arg("yaw", a.yaw)?;
    let table = table_from(&a.table)?;
    let center = center_from(&a.table)?;
    let terrain = read_terrain(&a.terrain)?;
    let run = match a.motion {
        MotionArg::Gamma => run_motion_a,
        MotionArg::Rt => run_motion_b,
    };
    let trace = match run(&table, &terrain, center, yaw, step, policy(a.override_)) {
        Ok(t) => t,
        Err(e) => {
            fs::write(&a.out, format!("{TRACE_HEADER}\n"))?;
            return Err(e);
        }
    };
    let mut out = BufWriter::new(File::create(&a.out)?);
    write_trace_csv(&trace, &mut out)?;
    out.flush()?;
    let eq = find_equilibrium(&trace, &terrain)?;
    let report = json!({
        "found": eq.found,
        "motion": match trace.kind { MotionKind::Gamma => "gamma", MotionKind::RotateTranslate => "rt" },
        "slope_bound_deg": deg(terrain.slope_bound()),
        "parameter_deg": eq.parameter.map(deg),
        "sweep_deg": deg(eq.sweep),
        "table_rotation_deg": deg(eq.table_rotation),
        "max_abs_h": eq.max_abs_h,
        "min_abs_h4": eq.min_abs_h4,
        "legs_clear": eq.legs_clear,
        "rigidity_error": eq.check.map(|c| c.rigidity_error),
        "feet": eq.feet.map(|f| f.p.iter().map(point).collect::<Vec<_>>()),
        "sign_changes": eq.intervals.iter().map(|[a, b]| json!([deg(*a), deg(*b)])).collect::<Vec<_>>(),
        "samples": trace.samples.len(),
        "labels_shifted": trace.shifted,
        "sphere_R_over_L": trace.sphere_ratio(),
        "drop_angle_deg": trace.drop.map(|d| deg(d.angle)),
        "warnings": eq.warnings.joined(),
        "trace": a.out.display().to_string(),
    });
    emit(&report, a.report.as_deref())?;
    Ok(if eq.found { 0 } else { EXIT_NOT_FOUND })
}

pub fn scan(a: &ScanArgs) -> Result<u8> {
    let table = table_from(&a.table)?;
    let center = center_from(&a.table)?;
    let terrain = read_terrain(&a.terrain)?;
    let exec = Exec::default();
    let scan = height_scan(&table, &terrain, center, a.samples, exec)?;
    let mut out = BufWriter::new(File::create(&a.out)?);
    scan.write_csv(&mut out)?;
    out.flush()?;
    let id = integral_identity_check(&scan);
    let balance = find_balance_angles(&scan)?;
    let mut roots = Vec::new();
    for r in &balance.roots {
        let eq = approximate_equilibrium(&table, &terrain, center, r.theta)?;
        roots.push(json!({
            "theta_deg": deg(r.theta),
            "slope_sign": r.slope_sign,
            "coplanarity_residual": eq.coplanarity_residual,
            "distortion": eq.distortion,
            "fit_height": eq.fit_height,
            "ground_points": eq.q.iter().map(point).collect::<Vec<_>>(),
        }));
    }
    let (alpha, beta) = diagonal_intersection_ratios(scan.angles)?;
    let mut report = json!({
        "alpha": alpha,
        "beta": beta,
        "samples": scan.len(),
        "integrals": id.integrals,
        "integral_residual": id.residual,
        "g_integral": id.g_integral,
        "grid_aligned": id.grid_aligned,
        "degenerate": balance.degenerate,
        "max_abs_g": balance.max_abs_g,
        "root_count": balance.roots.len(),
        "roots": roots,
        "touches_deg": balance.touches.iter().map(|t| deg(*t)).collect::<Vec<_>>(),
        "scan": a.out.display().to_string(),
    });
    if let Some(levels) = &a.levels {
        let targets: Vec<f64> = levels.iter().map(|d| d.to_radians()).collect();
        let study = distortion_scaling_study(&table, &terrain, &targets, center, a.samples, exec)?;
        report["study"] = json!({
            "levels": study.levels.iter().map(|l| json!({
                "target_deg": deg(l.target),
                "slope_bound_deg": deg(l.theta_m),
                "balance_angles_deg": l.roots.iter().map(|t| deg(*t)).collect::<Vec<_>>(),
                "distortion": l.distortion,
                "fit_height": l.fit_height,
                "excluded": l.excluded,
            })).collect::<Vec<_>>(),
            "distortion_exponent": study.distortion_fit.exponent,
            "distortion_fit_residual": study.distortion_fit.residual,
            "fit_height_exponent": study.height_fit.exponent,
            "fit_height_fit_residual": study.height_fit.residual,
        });
    }
    emit(&report, a.report.as_deref())?;
    Ok(0)
}

pub fn montecarlo(a: &MonteCarloArgs) -> Result<u8> {
    let motion = match a.motion {
        MotionArg::Gamma => MotionKind::Gamma,
        MotionArg::Rt => MotionKind::RotateTranslate,
    };
    let mut cfg = CampaignConfig::new(a.n as usize, a.seed, angle_arg("theta", a.theta)?, motion);
    cfg.bumps = a.bumps;
    cfg.side = positive("side", a.side)?;
    cfg.step = positive("step", a.step)?.to_radians();
    cfg.policy = policy(a.override_);
    let result = run_campaign(&cfg, Exec::default())?;
    let mut out = BufWriter::new(File::create(&a.out)?);
    write_campaign_csv(&result, &mut out)?;
    out.flush()?;
    let found: Vec<_> = result.records.iter().filter(|r| r.found).collect();
    let fold = |f: fn(f64, f64) -> f64, init: f64, g: &dyn Fn(&wobble_core::campaign::RunRecord) -> Option<f64>| {
        found.iter().filter_map(|r| g(r)).fold(init, f)
    };
    let report = json!({
        "runs": result.records.len(),
        "found": result.found(),
        "success_rate": result.success_rate(),
        "errors": result.records.iter().filter(|r| r.error.is_some()).count(),
        "max_sweep_deg": deg(fold(f64::max, 0.0, &|r| Some(r.sweep))),
        "max_residual": fold(f64::max, 0.0, &|r| Some(r.residual)),
        "sphere_R_over_L_min": found.iter().any(|r| r.sphere_ratio.is_some()).then(|| fold(f64::min, f64::INFINITY, &|r| r.sphere_ratio)),
        "sphere_R_over_L_max": found.iter().any(|r| r.sphere_ratio.is_some()).then(|| fold(f64::max, 0.0, &|r| r.sphere_ratio)),
        "campaign": a.out.display().to_string(),
    });
    emit(&report, a.report.as_deref())?;
    Ok(0)
}
