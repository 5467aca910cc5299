use std::f64::consts::FRAC_PI_2;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Result, WobbleError};
use crate::exec::Exec;

use super::{slope, Bump, Extent, Surface, Terrain, DEFAULT_SLOPE_SAMPLES};

/// Random generator behind [`generate`]: ChaCha8 seeded with
/// `ChaCha8Rng::seed_from_u64(seed)`. Its output stream is fixed across
/// platforms.
pub const GENERATOR: &str = "ChaCha8Rng::seed_from_u64";

/// Relative headroom left below the target slope after rescaling.
const SLOPE_HEADROOM: f64 = 1e-4;

/// Random Gaussian-bump terrain whose slope bound does not exceed
/// `target_theta`.
///
/// Centers are uniform over `extent`, widths uniform in `[0.04, 0.15]`
/// times the shorter side, raw amplitudes uniform in `[-σ, σ]`. All
/// amplitudes are then rescaled so the refined slope estimate sits just
/// below the target. A zero target or zero bumps gives flat ground.
pub fn generate(seed: u64, target_theta: f64, bump_count: usize, extent: Extent) -> Result<Terrain> {
    generate_with(seed, target_theta, bump_count, extent, Exec::default())
}

pub fn generate_with(seed: u64, target_theta: f64, bump_count: usize, extent: Extent, exec: Exec) -> Result<Terrain> {
    extent.validate()?;
    if !(target_theta >= 0.0 && target_theta < FRAC_PI_2) {
        return Err(WobbleError::Validation(format!(
            "target slope must lie in [0°, 90°), got {:.4}°",
            target_theta.to_degrees()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let span = extent.width().min(extent.height());
    let mut bumps: Vec<Bump> = (0..bump_count)
        .map(|_| {
            let cx = rng.gen_range(extent.min_x..extent.max_x);
            let cy = rng.gen_range(extent.min_y..extent.max_y);
            let sigma = span * rng.gen_range(0.04..0.15);
            let amplitude = sigma * rng.gen_range(-1.0..1.0);
            Bump { cx, cy, amplitude, sigma }
        })
        .collect();
    if target_theta == 0.0 {
        bumps.iter_mut().for_each(|b| b.amplitude = 0.0);
    }
    let raw = Terrain {
        surface: Surface::Bumps(bumps),
        extent,
        slope: slope::SlopeEstimate::ZERO,
    };
    let est = slope::estimate(&raw, &extent, DEFAULT_SLOPE_SAMPLES, exec)?;
    let Surface::Bumps(mut bumps) = raw.surface else { unreachable!() };
    if est.max_gradient > 0.0 {
        let k = target_theta.tan() * (1.0 - SLOPE_HEADROOM) / est.max_gradient;
        bumps.iter_mut().for_each(|b| b.amplitude *= k);
    }
    let mut t = Terrain {
        surface: Surface::Bumps(bumps),
        extent,
        slope: slope::SlopeEstimate::ZERO,
    };
    t.slope = slope::estimate(&t, &extent, DEFAULT_SLOPE_SAMPLES, exec)?;
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::terrain::serialize_terrain;

    #[test]
    fn respects_target_slope() {
        let t = generate(1, 10f64.to_radians(), 20, Extent::square(4.0)).unwrap();
        assert!(t.slope_bound() <= 10f64.to_radians());
        assert!(t.slope_bound() > 9.99f64.to_radians());
    }

    #[test]
    fn zero_bumps_or_zero_target_is_flat() {
        let e = Extent::square(4.0);
        for t in [generate(3, 0.2, 0, e).unwrap(), generate(3, 0.0, 12, e).unwrap()] {
            assert_eq!(t.eval(0.5, 0.5).unwrap(), 0.0);
            assert_eq!(t.slope_bound(), 0.0);
        }
    }

    #[test]
    fn same_seed_same_bytes() {
        let e = Extent::square(4.0);
        let a = serialize_terrain(&generate(42, 0.2, 15, e).unwrap());
        let b = serialize_terrain(&generate(42, 0.2, 15, e).unwrap());
        assert_eq!(a, b);
        let c = serialize_terrain(&generate(43, 0.2, 15, e).unwrap());
        assert_ne!(a, c);
    }

    #[test]
    fn rejects_vertical_target() {
        assert!(generate(1, FRAC_PI_2, 3, Extent::square(1.0)).is_err());
    }
}
