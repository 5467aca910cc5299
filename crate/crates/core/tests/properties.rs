use std::f64::consts::{PI, TAU};

use proptest::prelude::*;
use wobble_core::conjecture::{height_scan, periodic_roots};
use wobble_core::contact::{settle_three_feet, signed_heights, TableSpec};
use wobble_core::gamma::circle_surface_intersection;
use wobble_core::geometry::{orthotriple_inclination_identity, rotate_about_axis};
use wobble_core::terrain::{parse_terrain, serialize_terrain, Bump};
use wobble_core::warnings::Policy;
use wobble_core::{Exec, Extent, Terrain, Vec3};

fn vec3() -> impl Strategy<Value = Vec3> {
    (-2.0..2.0f64, -2.0..2.0f64, -2.0..2.0f64).prop_map(|(x, y, z)| Vec3::new(x, y, z))
}

fn bumps() -> impl Strategy<Value = Vec<Bump>> {
    prop::collection::vec(
        (-1.5..1.5f64, -1.5..1.5f64, -0.08..0.08f64, 0.4..1.0f64)
            .prop_map(|(cx, cy, amplitude, sigma)| Bump { cx, cy, amplitude, sigma }),
        1..5,
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn rotation_is_rigid(p in vec3(), q in vec3(), a in vec3(), b in vec3(), t in -PI..PI) {
        prop_assume!(a.dist(b) > 1e-3);
        let rp = rotate_about_axis(p, a, b, t).unwrap();
        let rq = rotate_about_axis(q, a, b, t).unwrap();
        prop_assert!((rp.dist(rq) - p.dist(q)).abs() < 1e-12);
        prop_assert!((rp.dist(a) - p.dist(a)).abs() < 1e-12);
    }

    #[test]
    fn orthonormal_frames_satisfy_identity(axis in vec3(), t in -PI..PI) {
        prop_assume!(axis.norm() > 1e-3);
        let r = |v: Vec3| rotate_about_axis(v, Vec3::ZERO, axis, t).unwrap();
        let e = orthotriple_inclination_identity(r(Vec3::X), r(Vec3::Y), r(Vec3::Z)).unwrap();
        prop_assert!(e < 1e-12);
    }

    #[test]
    fn square_settles_flush_on_planes(gx in -0.3..0.3f64, gy in -0.3..0.3f64, yaw in -PI..PI, cx in -0.5..0.5f64) {
        let t = Terrain::plane(gx, gy, 0.1, Extent::square(3.0)).unwrap();
        let table = TableSpec::square(1.0);
        let f = settle_three_feet(&table, &t, [cx, 0.0], yaw).unwrap();
        let s = signed_heights(&f, &t, 1.0).unwrap();
        prop_assert!(s.max_abs() < 1e-9);
        prop_assert!(f.rigidity_error(&table) < 1e-12);
        prop_assert!(f.orientation() > 0.0);
    }

    #[test]
    fn settled_feet_touch_bumpy_ground(b in bumps(), yaw in -PI..PI) {
        let t = Terrain::bumps(b, Extent::square(3.0)).unwrap();
        let table = TableSpec::square(1.0);
        let f = settle_three_feet(&table, &t, [0.0, 0.0], yaw).unwrap();
        let s = signed_heights(&f, &t, 1.0).unwrap();
        prop_assert!(s.max_abs_first_three() < 1e-9);
        prop_assert!(f.rigidity_error(&table) < 1e-12);
    }

    #[test]
    fn foot_circle_point_is_on_ground(b in bumps(), az in -PI..PI) {
        let t = Terrain::bumps(b, Extent::square(3.0)).unwrap();
        let c = Vec3::new(0.1, 0.0, t.eval(0.1, 0.0).unwrap());
        let u = Vec3::new(az.cos(), az.sin(), 0.1);
        let (p, _) = circle_surface_intersection(c, u, 1.0, &t, 1.0, Policy::STRICT).unwrap();
        prop_assert!(t.height_above(p).unwrap().abs() < 1e-10);
        prop_assert!((p.dist(c) - 1.0).abs() < 1e-12);
        prop_assert!((p - c).dot(u.normalized()).abs() < 1e-12);
        prop_assert!(u.cross(p - c).z > 0.0);
    }

    #[test]
    fn square_scan_shift_identity(b in bumps()) {
        let t = Terrain::bumps(b, Extent::square(3.0)).unwrap();
        let scan = height_scan(&TableSpec::square(1.0), &t, [0.0, 0.0], 256, Exec::Sequential).unwrap();
        let n = scan.len();
        for k in 0..n {
            prop_assert!((scan.heights[k][2] - scan.heights[(k + n / 2) % n][0]).abs() < 1e-12);
            prop_assert!((scan.heights[k][1] - scan.heights[(k + n / 4) % n][0]).abs() < 1e-12);
        }
    }

    #[test]
    fn periodic_root_count_is_even(c in prop::collection::vec(-1.0..1.0f64, 6)) {
        let f = |t: f64| c[0] * t.sin() + c[1] * t.cos() + c[2] * (2.0 * t).sin()
            + c[3] * (3.0 * t).cos() + c[4] * (5.0 * t).sin() + c[5] * (4.0 * t).cos();
        let n = 1024;
        let v: Vec<f64> = (0..n).map(|k| f(TAU * k as f64 / n as f64)).collect();
        let roots = periodic_roots(&v, f);
        prop_assert!(roots.len() % 2 == 0);
        for r in &roots {
            prop_assert!(f(r.theta).abs() < 1e-9);
            prop_assert!((0.0..TAU).contains(&r.theta));
        }
    }

    #[test]
    fn terrain_file_round_trips(b in bumps()) {
        let t = Terrain::bumps(b, Extent::square(3.0)).unwrap();
        let back = parse_terrain(&serialize_terrain(&t)).unwrap();
        prop_assert_eq!(back.surface(), t.surface());
        prop_assert_eq!(back.slope_bound(), t.slope_bound());
    }
}
