//! Ground surfaces `z = f(x, y)` with a certified slope estimate.
//!
//! A [`Terrain`] is immutable once built: evaluation is pure and the value
//! can be shared freely between worker threads.

mod generate;
mod grid;
mod io;
mod slope;

pub use generate::{generate, generate_with, GENERATOR};
pub use grid::BicubicGrid;
pub use io::{parse_terrain, serialize_terrain};
pub use slope::{slope_bound, slope_bound_with, SlopeEstimate};

use serde::{Deserialize, Serialize};

use crate::error::{Result, WobbleError};
use crate::exec::Exec;

/// Sample count used for the slope bound cached on every terrain.
pub const DEFAULT_SLOPE_SAMPLES: usize = 40_000;

/// Half-width of the extent assumed for analytic surfaces whose file omits one.
pub const DEFAULT_HALF_EXTENT: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Extent {
    pub min_x: f64,
    pub max_x: f64,
    pub min_y: f64,
    pub max_y: f64,
}

impl Extent {
    pub fn new(min_x: f64, max_x: f64, min_y: f64, max_y: f64) -> Result<Self> {
        let e = Extent {
            min_x,
            max_x,
            min_y,
            max_y,
        };
        e.validate()?;
        Ok(e)
    }

    pub fn square(half: f64) -> Self {
        Extent {
            min_x: -half,
            max_x: half,
            min_y: -half,
            max_y: half,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = [self.min_x, self.max_x, self.min_y, self.max_y]
            .iter()
            .all(|v| v.is_finite())
            && self.min_x < self.max_x
            && self.min_y < self.max_y;
        if ok {
            Ok(())
        } else {
            Err(WobbleError::Validation(format!("invalid extent {self:?}")))
        }
    }

    #[inline]
    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.min_x && x <= self.max_x && y >= self.min_y && y <= self.max_y
    }

    /// Whether the disc of radius `r` about `(cx, cy)` fits inside.
    pub fn contains_disc(&self, cx: f64, cy: f64, r: f64) -> bool {
        cx - r >= self.min_x && cx + r <= self.max_x && cy - r >= self.min_y && cy + r <= self.max_y
    }

    pub fn width(&self) -> f64 {
        self.max_x - self.min_x
    }

    pub fn height(&self) -> f64 {
        self.max_y - self.min_y
    }

    pub(crate) fn clamp(&self, x: f64, y: f64) -> (f64, f64) {
        (x.clamp(self.min_x, self.max_x), y.clamp(self.min_y, self.max_y))
    }
}

/// Radial Gaussian bump `A·exp(−r²/2σ²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub cx: f64,
    pub cy: f64,
    pub amplitude: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Surface {
    Bumps(Vec<Bump>),
    Grid(BicubicGrid),
    /// `z = z0 + gx·x + gy·y`.
    Plane { gx: f64, gy: f64, z0: f64 },
    /// Spherical dome of the given radius whose apex sits at height 0 above
    /// `(cx, cy)`.
    Cap { cx: f64, cy: f64, radius: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Terrain {
    surface: Surface,
    extent: Extent,
    slope: SlopeEstimate,
}

impl Terrain {
    /// Build a terrain and cache its slope estimate.
    pub fn new(surface: Surface, extent: Extent) -> Result<Self> {
        extent.validate()?;
        validate_surface(&surface, &extent)?;
        let mut t = Terrain {
            surface,
            extent,
            slope: SlopeEstimate::ZERO,
        };
        t.slope = t.compute_slope(DEFAULT_SLOPE_SAMPLES, Exec::default())?;
        Ok(t)
    }

    pub fn flat(extent: Extent) -> Result<Self> {
        Terrain::new(Surface::Bumps(Vec::new()), extent)
    }

    pub fn bumps(bumps: Vec<Bump>, extent: Extent) -> Result<Self> {
        Terrain::new(Surface::Bumps(bumps), extent)
    }

    pub fn plane(gx: f64, gy: f64, z0: f64, extent: Extent) -> Result<Self> {
        Terrain::new(Surface::Plane { gx, gy, z0 }, extent)
    }

    pub fn cap(cx: f64, cy: f64, radius: f64, extent: Extent) -> Result<Self> {
        Terrain::new(Surface::Cap { cx, cy, radius }, extent)
    }

    pub fn grid(grid: BicubicGrid) -> Result<Self> {
        let extent = grid.extent();
        Terrain::new(Surface::Grid(grid), extent)
    }

    pub fn surface(&self) -> &Surface {
        &self.surface
    }

    pub fn extent(&self) -> &Extent {
        &self.extent
    }

    /// Cached slope bound Θ_M in radians (a sampled estimate; see
    /// [`SlopeEstimate`]).
    pub fn slope_bound(&self) -> f64 {
        self.slope.angle
    }

    pub fn slope_estimate(&self) -> &SlopeEstimate {
        &self.slope
    }

    /// Heights multiplied by `k` (slopes scale linearly with `k`).
    pub fn scaled(&self, k: f64) -> Result<Terrain> {
        let surface = match &self.surface {
            Surface::Bumps(b) => Surface::Bumps(
                b.iter()
                    .map(|b| Bump {
                        amplitude: b.amplitude * k,
                        ..*b
                    })
                    .collect(),
            ),
            Surface::Grid(g) => Surface::Grid(g.scaled(k)),
            Surface::Plane { gx, gy, z0 } => Surface::Plane {
                gx: gx * k,
                gy: gy * k,
                z0: z0 * k,
            },
            Surface::Cap { .. } => {
                return Err(WobbleError::Validation(
                    "a spherical cap cannot be scaled vertically".into(),
                ))
            }
        };
        Terrain::new(surface, self.extent)
    }

    fn check(&self, x: f64, y: f64) -> Result<()> {
        if !x.is_finite() || x < self.extent.min_x || x > self.extent.max_x {
            return Err(WobbleError::Domain(format!(
                "x = {x} outside terrain extent [{}, {}]",
                self.extent.min_x, self.extent.max_x
            )));
        }
        if !y.is_finite() || y < self.extent.min_y || y > self.extent.max_y {
            return Err(WobbleError::Domain(format!(
                "y = {y} outside terrain extent [{}, {}]",
                self.extent.min_y, self.extent.max_y
            )));
        }
        Ok(())
    }

    /// Height at `(x, y)`.
    pub fn eval(&self, x: f64, y: f64) -> Result<f64> {
        self.check(x, y)?;
        Ok(self.eval_unchecked(x, y))
    }

    /// Gradient `(∂f/∂x, ∂f/∂y)` at `(x, y)`.
    pub fn gradient(&self, x: f64, y: f64) -> Result<(f64, f64)> {
        self.check(x, y)?;
        Ok(self.gradient_unchecked(x, y))
    }

    pub(crate) fn eval_unchecked(&self, x: f64, y: f64) -> f64 {
        match &self.surface {
            Surface::Bumps(bumps) => bumps
                .iter()
                .map(|b| {
                    let dx = x - b.cx;
                    let dy = y - b.cy;
                    b.amplitude * (-(dx * dx + dy * dy) / (2.0 * b.sigma * b.sigma)).exp()
                })
                .sum(),
            Surface::Grid(g) => g.eval(x, y),
            Surface::Plane { gx, gy, z0 } => z0 + gx * x + gy * y,
            Surface::Cap { cx, cy, radius } => {
                let r2 = (x - cx).powi(2) + (y - cy).powi(2);
                (radius * radius - r2).sqrt() - radius
            }
        }
    }

    pub(crate) fn gradient_unchecked(&self, x: f64, y: f64) -> (f64, f64) {
        match &self.surface {
            Surface::Bumps(bumps) => bumps.iter().fold((0.0, 0.0), |(gx, gy), b| {
                let dx = x - b.cx;
                let dy = y - b.cy;
                let s2 = b.sigma * b.sigma;
                let v = b.amplitude * (-(dx * dx + dy * dy) / (2.0 * s2)).exp();
                (gx - v * dx / s2, gy - v * dy / s2)
            }),
            Surface::Grid(g) => g.gradient(x, y),
            Surface::Plane { gx, gy, .. } => (*gx, *gy),
            Surface::Cap { cx, cy, radius } => {
                let dx = x - cx;
                let dy = y - cy;
                let s = (radius * radius - dx * dx - dy * dy).sqrt();
                (-dx / s, -dy / s)
            }
        }
    }

    /// Signed height of a point above the ground.
    pub fn height_above(&self, p: crate::geometry::Point3) -> Result<f64> {
        Ok(p.z - self.eval(p.x, p.y)?)
    }

    fn compute_slope(&self, samples: usize, exec: Exec) -> Result<SlopeEstimate> {
        slope::estimate(self, &self.extent, samples, exec)
    }
}

fn validate_surface(surface: &Surface, extent: &Extent) -> Result<()> {
    match surface {
        Surface::Bumps(bumps) => {
            for (i, b) in bumps.iter().enumerate() {
                if !(b.sigma > 0.0) || !b.sigma.is_finite() {
                    return Err(WobbleError::Validation(format!(
                        "bump {i}: width sigma must be positive, got {}",
                        b.sigma
                    )));
                }
                if !(b.cx.is_finite() && b.cy.is_finite() && b.amplitude.is_finite()) {
                    return Err(WobbleError::Validation(format!("bump {i}: non-finite field")));
                }
            }
        }
        Surface::Grid(_) => {}
        Surface::Plane { gx, gy, z0 } => {
            if !(gx.is_finite() && gy.is_finite() && z0.is_finite()) {
                return Err(WobbleError::Validation("plane: non-finite coefficient".into()));
            }
        }
        Surface::Cap { cx, cy, radius } => {
            if !(*radius > 0.0) {
                return Err(WobbleError::Validation(format!(
                    "cap radius must be positive, got {radius}"
                )));
            }
            let far = [
                (extent.min_x, extent.min_y),
                (extent.min_x, extent.max_y),
                (extent.max_x, extent.min_y),
                (extent.max_x, extent.max_y),
            ]
            .iter()
            .map(|(x, y)| (x - cx).hypot(y - cy))
            .fold(0.0, f64::max);
            if far >= *radius {
                return Err(WobbleError::Validation(format!(
                    "cap of radius {radius} does not cover the extent (corner distance {far})"
                )));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn flat_is_zero() {
        let t = Terrain::flat(Extent::square(2.0)).unwrap();
        assert_eq!(t.eval(0.3, -1.2).unwrap(), 0.0);
        assert_eq!(t.gradient(0.3, -1.2).unwrap(), (0.0, 0.0));
        assert_eq!(t.slope_bound(), 0.0);
    }

    #[test]
    fn bump_peak() {
        let t = Terrain::bumps(
            vec![Bump {
                cx: 0.0,
                cy: 0.0,
                amplitude: 0.3,
                sigma: 0.7,
            }],
            Extent::square(4.0),
        )
        .unwrap();
        assert_eq!(t.eval(0.0, 0.0).unwrap(), 0.3);
    }

    #[test]
    fn tilted_plane_gradient() {
        let g = 10f64.to_radians().tan();
        let t = Terrain::plane(g, 0.0, 0.0, Extent::square(3.0)).unwrap();
        let (gx, gy) = t.gradient(1.0, 2.0).unwrap();
        assert_eq!((gx, gy), (g, 0.0));
    }

    #[test]
    fn out_of_extent_names_coordinate() {
        let t = Terrain::flat(Extent::square(1.0)).unwrap();
        let e = t.eval(0.0, 1.5).unwrap_err().to_string();
        assert!(e.contains("y = 1.5"), "{e}");
        let e = t.gradient(-2.0, 0.0).unwrap_err().to_string();
        assert!(e.contains("x = -2"), "{e}");
    }

    #[test]
    fn negative_width_rejected() {
        let r = Terrain::bumps(
            vec![Bump {
                cx: 0.0,
                cy: 0.0,
                amplitude: 1.0,
                sigma: -1.0,
            }],
            Extent::square(1.0),
        );
        assert!(matches!(r, Err(WobbleError::Validation(_))));
    }

    #[test]
    fn cap_geometry() {
        let t = Terrain::cap(0.0, 0.0, 50.0, Extent::square(5.0)).unwrap();
        assert_eq!(t.eval(0.0, 0.0).unwrap(), 0.0);
        let z = t.eval(3.0, 4.0).unwrap();
        assert_abs_diff_eq!((z + 50.0).hypot(5.0), 50.0, epsilon = 1e-12);
        assert!(Terrain::cap(0.0, 0.0, 5.0, Extent::square(5.0)).is_err());
    }

    #[test]
    fn eval_is_deterministic() {
        let t = Terrain::bumps(
            vec![
                Bump { cx: 0.1, cy: 0.2, amplitude: 0.1, sigma: 0.5 },
                Bump { cx: -0.4, cy: 0.9, amplitude: -0.2, sigma: 0.8 },
            ],
            Extent::square(3.0),
        )
        .unwrap();
        let a = t.eval(0.123, -0.456).unwrap();
        for _ in 0..10 {
            assert_eq!(a.to_bits(), t.eval(0.123, -0.456).unwrap().to_bits());
        }
    }
}
