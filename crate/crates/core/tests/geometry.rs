use cpband::geometry::{reflect, Surface, Vec3};
use cpband::Error;
use proptest::prelude::*;

fn shell_point(r: f64, theta: f64, phi: f64) -> Vec3 {
    Vec3::new(r * theta.sin() * phi.cos(), r * theta.sin() * phi.sin(), r * theta.cos())
}

/// Hemisphere closest point written out by hand: radial projection above the
/// equator plane, nearest equator point below it.
fn hemisphere_oracle(x: &Vec3) -> Vec3 {
    if x.z >= 0.0 {
        x / x.norm()
    } else {
        let rho = (x.x * x.x + x.y * x.y).sqrt();
        Vec3::new(x.x / rho, x.y / rho, 0.0)
    }
}

fn mobius_point(r: f64, s: f64, t: f64) -> Vec3 {
    let w = r + t * (s / 2.0).cos();
    Vec3::new(w * s.cos(), w * s.sin(), t * (s / 2.0).sin())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn sphere_projection_is_radial(r in 0.6f64..1.4, theta in 0.05f64..3.09, phi in 0.0f64..6.28) {
        let s = Surface::sphere(1.0).unwrap();
        let x = shell_point(r, theta, phi);
        let cp = s.closest_point(&x).unwrap();
        prop_assert!((cp.point - x / x.norm()).norm() < 1e-12);
        prop_assert!((cp.distance - (r - 1.0).abs()).abs() < 1e-12);
        prop_assert!(!cp.on_boundary);
    }

    #[test]
    fn hemisphere_matches_hand_oracle(r in 0.6f64..1.4, theta in 0.05f64..2.4, phi in 0.0f64..6.28) {
        let s = Surface::upper_hemisphere(1.0).unwrap();
        let x = shell_point(r, theta, phi);
        let cp = s.closest_point(&x).unwrap();
        let want = hemisphere_oracle(&x);
        prop_assert!((cp.point - want).norm() < 1e-12);
        prop_assert_eq!(cp.on_boundary, x.z < 0.0);
    }

    #[test]
    fn closest_point_is_idempotent(r in 0.7f64..1.3, theta in 0.05f64..2.4, phi in 0.0f64..6.28) {
        let s = Surface::upper_hemisphere(1.0).unwrap();
        let x = shell_point(r, theta, phi);
        let y = s.closest_point(&x).unwrap().point;
        let yy = s.closest_point(&y).unwrap().point;
        prop_assert!((y - yy).norm() < 1e-10);
    }

    #[test]
    fn mobius_idempotent_and_no_closer_sample(
        s0 in 0.0f64..6.28, t0 in -0.35f64..0.35, dn in -0.15f64..0.15, dz in -0.15f64..0.15,
    ) {
        let strip = Surface::mobius_strip(1.0, 0.35).unwrap();
        let x = mobius_point(1.0, s0, t0) + Vec3::new(dn * s0.cos(), dn * s0.sin(), dz);
        let cp = match strip.closest_point(&x) {
            Ok(cp) => cp,
            Err(Error::DegenerateQuery { .. }) => return Ok(()),
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        };
        let again = strip.closest_point(&cp.point).unwrap();
        prop_assert!((again.point - cp.point).norm() < 1e-10);
        // brute-force search over a parameter grid never beats the returned point
        let mut best = f64::INFINITY;
        for i in 0..720 {
            for j in 0..=70 {
                let p = mobius_point(1.0, i as f64 * std::f64::consts::TAU / 720.0, -0.35 + 0.01 * j as f64);
                best = best.min((x - p).norm());
            }
        }
        prop_assert!(cp.distance <= best + 1e-9, "{} > {}", cp.distance, best);
    }

    #[test]
    fn modified_closest_point_reflects_exterior_points(r in 0.8f64..1.2, depth in 0.01f64..0.3, phi in 0.0f64..6.28) {
        let s = Surface::upper_hemisphere(1.0).unwrap();
        let x = Vec3::new(r * phi.cos(), r * phi.sin(), -depth);
        let cp = s.closest_point(&x).unwrap().point;
        let mirrored = 2.0 * cp - x;
        prop_assert!((reflect(&x, &cp) - mirrored).norm() < 1e-15);
        let want = hemisphere_oracle(&mirrored);
        prop_assert!((s.modified_closest_point(&x).unwrap() - want).norm() < 1e-12);
    }

    #[test]
    fn modified_closest_point_is_cp_inside(r in 0.7f64..1.3, theta in 0.05f64..1.5, phi in 0.0f64..6.28) {
        let s = Surface::upper_hemisphere(1.0).unwrap();
        let x = shell_point(r, theta, phi);
        let cp = s.closest_point(&x).unwrap().point;
        prop_assert!((s.modified_closest_point(&x).unwrap() - cp).norm() < 1e-14);
    }

    #[test]
    fn boundary_frames_are_orthonormal(s0 in 0.0f64..6.28, edge in prop::bool::ANY) {
        let strip = Surface::mobius_strip(1.0, 0.35).unwrap();
        let y = mobius_point(1.0, s0, if edge { 0.35 } else { -0.35 });
        let f = strip.analytic_frame(&y).unwrap();
        let (n, t, c) = (f.normal, f.tangent().unwrap(), f.conormal().unwrap());
        for (a, b) in [(n, t), (n, c), (t, c)] {
            prop_assert!(a.dot(&b).abs() < 1e-10);
        }
        for v in [n, t, c] {
            prop_assert!((v.norm() - 1.0).abs() < 1e-12);
        }
        // outward: stepping along the conormal leaves the strip
        let outside = y + 1e-3 * c;
        prop_assert!(strip.closest_point(&outside).unwrap().on_boundary);
    }
}

#[test]
fn hemisphere_conormal_points_down() {
    let s = Surface::upper_hemisphere(1.0).unwrap();
    let f = s.analytic_frame(&Vec3::new(1.0, 0.0, 0.0)).unwrap();
    assert!((f.conormal().unwrap() - Vec3::new(0.0, 0.0, -1.0)).norm() < 1e-14);
    assert!(matches!(s.analytic_frame(&Vec3::new(0.0, 0.0, 1.0)).unwrap().conormal(), Err(Error::NotOnBoundary)));
}

#[test]
fn centre_queries_are_degenerate() {
    let s = Surface::upper_hemisphere(1.0).unwrap();
    assert!(matches!(s.closest_point(&Vec3::zeros()), Err(Error::DegenerateQuery { .. })));
    assert!(Surface::sphere(-1.0).is_err());
    assert!(Surface::mobius_strip(1.0, 1.5).is_err());
}
