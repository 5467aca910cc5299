use serde::Serialize;

use crate::error::{Result, WobbleError};
use crate::exec::Exec;

use super::{Extent, Terrain};

pub const MIN_SLOPE_SAMPLES: usize = 10_000;

/// Sampled supremum of the ground slope.
///
/// Obtained from a uniform grid plus local refinement of the steepest 1%
/// of samples, so `angle` is a lower bound on the true supremum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlopeEstimate {
    /// `arctan` of the largest gradient norm found, radians.
    pub angle: f64,
    pub max_gradient: f64,
    /// Where the maximum was found.
    pub at: [f64; 2],
    pub samples: usize,
}

impl SlopeEstimate {
    pub const ZERO: SlopeEstimate = SlopeEstimate {
        angle: 0.0,
        max_gradient: 0.0,
        at: [0.0, 0.0],
        samples: 0,
    };
}

/// Estimated slope bound Θ_M of `terrain` over `extent`, radians.
pub fn slope_bound(terrain: &Terrain, extent: &Extent, samples: usize) -> Result<f64> {
    Ok(slope_bound_with(terrain, extent, samples, Exec::default())?.angle)
}

pub fn slope_bound_with(terrain: &Terrain, extent: &Extent, samples: usize, exec: Exec) -> Result<SlopeEstimate> {
    estimate(terrain, extent, samples, exec)
}

#[inline]
fn grad_sq(t: &Terrain, x: f64, y: f64) -> f64 {
    let (gx, gy) = t.gradient_unchecked(x, y);
    gx * gx + gy * gy
}

pub(super) fn estimate(terrain: &Terrain, extent: &Extent, samples: usize, exec: Exec) -> Result<SlopeEstimate> {
    if samples < MIN_SLOPE_SAMPLES {
        return Err(WobbleError::Validation(format!(
            "slope_bound needs at least {MIN_SLOPE_SAMPLES} samples, got {samples}"
        )));
    }
    extent.validate()?;
    for (x, y) in [(extent.min_x, extent.min_y), (extent.max_x, extent.max_y)] {
        terrain.eval(x, y)?;
    }
    let m = (samples as f64).sqrt().ceil() as usize;
    let hx = extent.width() / (m - 1) as f64;
    let hy = extent.height() / (m - 1) as f64;
    let at = |k: usize| -> (f64, f64) {
        let (i, j) = (k / m, k % m);
        (extent.min_x + j as f64 * hx, extent.min_y + i as f64 * hy)
    };
    let rows: Vec<Vec<f64>> = exec.map_range(m, |i| {
        (0..m).map(|j| {
            let (x, y) = at(i * m + j);
            grad_sq(terrain, x, y)
        }).collect()
    });
    let values: Vec<f64> = rows.into_iter().flatten().collect();
    let n = values.len();
    let top = (n / 100).max(1);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    order.truncate(top);

    let mut starts: Vec<(f64, f64)> = Vec::new();
    for &k in &order {
        let (x, y) = at(k);
        if starts
            .iter()
            .any(|&(sx, sy)| (sx - x).abs() <= 2.0 * hx && (sy - y).abs() <= 2.0 * hy)
        {
            continue;
        }
        starts.push((x, y));
    }
    let refined = exec.map(&starts, |&(x, y)| refine(terrain, extent, x, y, hx.max(hy)));
    let mut best = (values[order[0]], at(order[0]));
    for r in refined {
        if r.0 > best.0 {
            best = r;
        }
    }
    let g = best.0.sqrt();
    Ok(SlopeEstimate {
        angle: g.atan(),
        max_gradient: g,
        at: [best.1 .0, best.1 .1],
        samples: n,
    })
}

/// Compass search maximising `|∇f|²` from `(x, y)`, clamped to `extent`.
fn refine(t: &Terrain, extent: &Extent, mut x: f64, mut y: f64, h: f64) -> (f64, (f64, f64)) {
    const DIRS: [(f64, f64); 8] = [
        (1.0, 0.0),
        (-1.0, 0.0),
        (0.0, 1.0),
        (0.0, -1.0),
        (0.7071067811865476, 0.7071067811865476),
        (-0.7071067811865476, 0.7071067811865476),
        (0.7071067811865476, -0.7071067811865476),
        (-0.7071067811865476, -0.7071067811865476),
    ];
    let mut best = grad_sq(t, x, y);
    let mut step = h;
    let stop = h * 1e-10;
    let mut iters = 0;
    while step > stop && iters < 2000 {
        iters += 1;
        let mut moved = false;
        for (dx, dy) in DIRS {
            let (cx, cy) = extent.clamp(x + dx * step, y + dy * step);
            let v = grad_sq(t, cx, cy);
            if v > best {
                best = v;
                x = cx;
                y = cy;
                moved = true;
                break;
            }
        }
        if !moved {
            step *= 0.5;
        }
    }
    (best, (x, y))
}
