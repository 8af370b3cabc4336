//! Surfaces with closest point queries.
//!
//! Every surface answers three questions for an ambient point `x`: the
//! nearest surface point `cp(x)`, whether that point sits on the boundary
//! curve, and the modified closest point `cp(2 cp(x) - x)` obtained by
//! reflecting `x` through the surface first. The hemisphere and sphere have
//! closed forms; the Möbius strip is handled numerically in [`mobius`].

mod mobius;

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use nalgebra::Vector3;

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;

/// Parameter distance under which a closest point counts as lying on the boundary.
pub const BOUNDARY_TOL: f64 = 1e-10;

/// Tolerance used when a point handed to a surface-only query must lie on the surface.
pub const ON_SURFACE_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Surface {
    /// Upper half (`z >= 0`) of the sphere of the given radius centred at the origin.
    UpperHemisphere { radius: f64 },
    /// Closed sphere centred at the origin.
    Sphere { radius: f64 },
    /// Möbius strip `((R + t cos(s/2)) cos s, (R + t cos(s/2)) sin s, t sin(s/2))`,
    /// `s` in `[0, 2π)`, `t` in `[-w, w]`.
    MobiusStrip { center_radius: f64, half_width: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClosestPoint {
    pub point: Vec3,
    pub distance: f64,
    pub on_boundary: bool,
    /// Surface parameters of `point`: `(φ, θ)` for the spherical shapes, `(s, t)` for the strip.
    pub param: Option<[f64; 2]>,
}

/// Unit normal, and at boundary points the boundary tangent and outward conormal.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SurfaceFrame {
    pub normal: Vec3,
    pub boundary_tangent: Option<Vec3>,
    pub conormal: Option<Vec3>,
}

impl SurfaceFrame {
    pub fn tangent(&self) -> Result<Vec3> {
        self.boundary_tangent.ok_or(Error::NotOnBoundary)
    }

    pub fn conormal(&self) -> Result<Vec3> {
        self.conormal.ok_or(Error::NotOnBoundary)
    }
}

impl Surface {
    pub fn upper_hemisphere(radius: f64) -> Result<Self> {
        Self::UpperHemisphere { radius }.validated()
    }

    pub fn sphere(radius: f64) -> Result<Self> {
        Self::Sphere { radius }.validated()
    }

    pub fn mobius_strip(center_radius: f64, half_width: f64) -> Result<Self> {
        Self::MobiusStrip {
            center_radius,
            half_width,
        }
        .validated()
    }

    fn validated(self) -> Result<Self> {
        match self {
            Self::UpperHemisphere { radius } | Self::Sphere { radius } => {
                if !(radius > 0.0 && radius.is_finite()) {
                    return Err(Error::InvalidSurface(format!("radius must be positive, got {radius}")));
                }
            }
            Self::MobiusStrip {
                center_radius,
                half_width,
            } => {
                if !(half_width > 0.0 && center_radius > 2.0 * half_width && center_radius.is_finite()) {
                    return Err(Error::InvalidSurface(format!(
                        "Möbius strip needs center_radius > 2·half_width > 0, got R={center_radius}, w={half_width}"
                    )));
                }
            }
        }
        Ok(self)
    }

    pub fn has_boundary(&self) -> bool {
        !matches!(self, Self::Sphere { .. })
    }

    /// Characteristic size, used to scale absolute tolerances.
    pub fn scale(&self) -> f64 {
        match *self {
            Self::UpperHemisphere { radius } | Self::Sphere { radius } => radius,
            Self::MobiusStrip { center_radius, .. } => center_radius,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::UpperHemisphere { .. } => "hemisphere",
            Self::Sphere { .. } => "sphere",
            Self::MobiusStrip { .. } => "mobius",
        }
    }

    /// Global minimiser of `|x - y|` over the closed surface.
    pub fn closest_point(&self, x: &Vec3) -> Result<ClosestPoint> {
        match *self {
            Self::Sphere { radius } => {
                let r = x.norm();
                if r <= 1e-12 * radius {
                    return Err(degenerate(x));
                }
                let point = x * (radius / r);
                Ok(ClosestPoint {
                    point,
                    distance: (r - radius).abs(),
                    on_boundary: false,
                    param: Some(spherical_params(&point)),
                })
            }
            Self::UpperHemisphere { radius } => {
                let point = if x.z >= 0.0 {
                    let r = x.norm();
                    if r <= 1e-12 * radius {
                        return Err(degenerate(x));
                    }
                    x * (radius / r)
                } else {
                    let rho = x.x.hypot(x.y);
                    if rho <= 1e-12 * radius.max(x.norm()) {
                        return Err(degenerate(x));
                    }
                    Vec3::new(radius * x.x / rho, radius * x.y / rho, 0.0)
                };
                let param = spherical_params(&point);
                Ok(ClosestPoint {
                    point,
                    distance: (x - point).norm(),
                    on_boundary: (FRAC_PI_2 - param[1]).abs() <= BOUNDARY_TOL,
                    param: Some(param),
                })
            }
            Self::MobiusStrip {
                center_radius,
                half_width,
            } => mobius::Mobius::new(center_radius, half_width).closest_point(x),
        }
    }

    /// `cp(r(x))` with `r(x) = 2 cp(x) - x`, the reflection of `x` through the surface.
    pub fn modified_closest_point(&self, x: &Vec3) -> Result<Vec3> {
        let cp = self.closest_point(x)?;
        if !cp.on_boundary {
            // the reflection stays on the same normal line
            return Ok(cp.point);
        }
        Ok(self.closest_point(&reflect(x, &cp.point))?.point)
    }

    /// Analytic frame at a surface point `y`.
    pub fn analytic_frame(&self, y: &Vec3) -> Result<SurfaceFrame> {
        let cp = self.closest_point(y)?;
        if cp.distance > ON_SURFACE_TOL * self.scale() {
            return Err(Error::NotOnSurface(cp.distance));
        }
        match *self {
            Self::Sphere { .. } | Self::UpperHemisphere { .. } => {
                let normal = cp.point.normalize();
                if !cp.on_boundary {
                    return Ok(SurfaceFrame {
                        normal,
                        boundary_tangent: None,
                        conormal: None,
                    });
                }
                let rho = cp.point.x.hypot(cp.point.y);
                Ok(SurfaceFrame {
                    normal,
                    boundary_tangent: Some(Vec3::new(-cp.point.y / rho, cp.point.x / rho, 0.0)),
                    conormal: Some(Vec3::new(0.0, 0.0, -1.0)),
                })
            }
            Self::MobiusStrip {
                center_radius,
                half_width,
            } => {
                let [s, t] = cp.param.expect("strip closest points carry parameters");
                Ok(mobius::Mobius::new(center_radius, half_width).frame(s, t, cp.on_boundary))
            }
        }
    }

    /// Embedded point for surface parameters: `(φ, θ)` on the spherical shapes, `(s, t)` on the strip.
    pub fn parametric_sample(&self, params: [f64; 2]) -> Result<Vec3> {
        let [a, b] = params;
        let out = || Error::OutOfDomain(a, b);
        match *self {
            Self::UpperHemisphere { radius } | Self::Sphere { radius } => {
                let theta_max = if matches!(self, Self::Sphere { .. }) { PI } else { FRAC_PI_2 };
                if !(0.0..=TAU).contains(&a) || !(0.0..=theta_max).contains(&b) {
                    return Err(out());
                }
                Ok(radius * Vec3::new(b.sin() * a.cos(), b.sin() * a.sin(), b.cos()))
            }
            Self::MobiusStrip {
                center_radius,
                half_width,
            } => {
                if !(0.0..=TAU).contains(&a) || b.abs() > half_width {
                    return Err(out());
                }
                Ok(mobius::Mobius::new(center_radius, half_width).eval(a, b))
            }
        }
    }

    /// `[[a_min, a_max], [b_min, b_max]]` accepted by [`Surface::parametric_sample`].
    pub fn parameter_domain(&self) -> [[f64; 2]; 2] {
        match *self {
            Self::UpperHemisphere { .. } => [[0.0, TAU], [0.0, FRAC_PI_2]],
            Self::Sphere { .. } => [[0.0, TAU], [0.0, PI]],
            Self::MobiusStrip { half_width, .. } => [[0.0, TAU], [-half_width, half_width]],
        }
    }

    /// Points spread over the surface, used to seed the band flood fill.
    pub(crate) fn seed_points(&self, spacing: f64) -> Vec<Vec3> {
        let (n_a, n_b) = match *self {
            Self::UpperHemisphere { radius } | Self::Sphere { radius } => {
                let n = ((PI * radius / spacing).ceil() as usize).max(4);
                (2 * n, n)
            }
            Self::MobiusStrip {
                center_radius,
                half_width,
            } => (
                ((TAU * center_radius / spacing).ceil() as usize).max(8),
                ((2.0 * half_width / spacing).ceil() as usize).max(2),
            ),
        };
        let mut pts = Vec::with_capacity(n_a * (n_b + 1));
        for i in 0..n_a {
            for j in 0..=n_b {
                let a = TAU * i as f64 / n_a as f64;
                let frac = j as f64 / n_b as f64;
                let b = match *self {
                    Self::UpperHemisphere { .. } => FRAC_PI_2 * frac,
                    Self::Sphere { .. } => PI * frac,
                    Self::MobiusStrip { half_width, .. } => half_width * (2.0 * frac - 1.0),
                };
                pts.push(self.parametric_sample([a, b]).expect("seed parameters are in the domain"));
            }
        }
        pts
    }
}

/// Reflection of `x` through its closest point: `2 cp - x`.
pub fn reflect(x: &Vec3, cp: &Vec3) -> Vec3 {
    2.0 * cp - x
}

fn degenerate(x: &Vec3) -> Error {
    Error::DegenerateQuery {
        x: x.x,
        y: x.y,
        z: x.z,
    }
}

/// `(φ, θ)` with `φ` in `[0, 2π)` and `θ` the polar angle from `+z`.
fn spherical_params(p: &Vec3) -> [f64; 2] {
    let mut phi = p.y.atan2(p.x);
    if phi < 0.0 {
        phi += TAU;
    }
    let theta = p.x.hypot(p.y).atan2(p.z);
    [phi, theta]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn hemi() -> Surface {
        Surface::upper_hemisphere(1.0).unwrap()
    }

    #[test]
    fn hemisphere_pole_projection() {
        let cp = hemi().closest_point(&Vec3::new(0.0, 0.0, 2.0)).unwrap();
        assert_abs_diff_eq!(cp.point, Vec3::new(0.0, 0.0, 1.0), epsilon = 1e-15);
        assert_abs_diff_eq!(cp.distance, 1.0, epsilon = 1e-15);
        assert!(!cp.on_boundary);
    }

    #[test]
    fn hemisphere_below_equator_goes_to_boundary() {
        let cp = hemi().closest_point(&Vec3::new(2.0, 0.0, -1.0)).unwrap();
        assert_abs_diff_eq!(cp.point, Vec3::new(1.0, 0.0, 0.0), epsilon = 1e-15);
        assert_abs_diff_eq!(cp.distance, 2f64.sqrt(), epsilon = 1e-15);
        assert!(cp.on_boundary);
    }

    #[test]
    fn surface_point_is_its_own_closest_point() {
        let cp = hemi().closest_point(&Vec3::new(0.0, 0.0, 1.0)).unwrap();
        assert_eq!(cp.distance, 0.0);
        let y = hemi().parametric_sample([0.7, 0.4]).unwrap();
        assert_abs_diff_eq!(hemi().modified_closest_point(&y).unwrap(), y, epsilon = 1e-15);
    }

    #[test]
    fn modified_closest_point_interior_and_exterior() {
        let s = hemi();
        let x = Vec3::new(0.0, 0.0, 1.1);
        assert_abs_diff_eq!(s.modified_closest_point(&x).unwrap(), Vec3::new(0.0, 0.0, 1.0), epsilon = 1e-15);

        let x = Vec3::new(1.1, 0.0, -0.1);
        let r = Vec3::new(0.9, 0.0, 0.1);
        let expected = r / r.norm();
        let got = s.modified_closest_point(&x).unwrap();
        assert_abs_diff_eq!(got, expected, epsilon = 1e-14);
        assert_abs_diff_eq!(got.x, 0.993884, epsilon = 1e-6);
        assert_abs_diff_eq!(got.z, 0.11043, epsilon = 1e-5);
    }

    #[test]
    fn degenerate_queries() {
        assert!(matches!(
            Surface::sphere(1.0).unwrap().closest_point(&Vec3::zeros()),
            Err(Error::DegenerateQuery { .. })
        ));
        assert!(matches!(
            hemi().closest_point(&Vec3::new(0.0, 0.0, -0.5)),
            Err(Error::DegenerateQuery { .. })
        ));
    }

    #[test]
    fn hemisphere_frames() {
        let f = hemi().analytic_frame(&Vec3::new(1.0, 0.0, 0.0)).unwrap();
        assert_abs_diff_eq!(f.conormal().unwrap(), Vec3::new(0.0, 0.0, -1.0), epsilon = 1e-15);
        let f = hemi().analytic_frame(&Vec3::new(0.0, 0.0, 1.0)).unwrap();
        assert_abs_diff_eq!(f.normal, Vec3::new(0.0, 0.0, 1.0), epsilon = 1e-15);
        assert!(matches!(f.conormal(), Err(Error::NotOnBoundary)));
        assert!(matches!(
            hemi().analytic_frame(&Vec3::new(0.0, 0.0, 1.5)),
            Err(Error::NotOnSurface(_))
        ));
    }

    #[test]
    fn boundary_frame_is_orthonormal() {
        let s = hemi();
        for k in 0..16 {
            let phi = TAU * k as f64 / 16.0;
            let y = s.parametric_sample([phi, FRAC_PI_2]).unwrap();
            let f = s.analytic_frame(&y).unwrap();
            let (t, n) = (f.tangent().unwrap(), f.conormal().unwrap());
            for v in [f.normal, t, n] {
                assert_abs_diff_eq!(v.norm(), 1.0, epsilon = 1e-12);
            }
            assert!(f.normal.dot(&t).abs() < 1e-10);
            assert!(f.normal.dot(&n).abs() < 1e-10);
            assert!(t.dot(&n).abs() < 1e-10);
        }
    }

    #[test]
    fn parametric_samples() {
        let s = hemi();
        assert_abs_diff_eq!(s.parametric_sample([0.0, FRAC_PI_2]).unwrap(), Vec3::new(1.0, 0.0, 0.0), epsilon = 1e-15);
        assert_abs_diff_eq!(s.parametric_sample([FRAC_PI_2, 0.0]).unwrap(), Vec3::new(0.0, 0.0, 1.0), epsilon = 1e-15);
        assert!(matches!(s.parametric_sample([0.0, 2.0]), Err(Error::OutOfDomain(..))));
        let m = Surface::mobius_strip(1.0, 0.35).unwrap();
        assert_abs_diff_eq!(m.parametric_sample([0.0, 0.0]).unwrap(), Vec3::new(1.0, 0.0, 0.0), epsilon = 1e-15);
        assert!(matches!(m.parametric_sample([1.0, 0.5]), Err(Error::OutOfDomain(..))));
    }

    #[test]
    fn invalid_shapes_are_rejected() {
        assert!(Surface::upper_hemisphere(0.0).is_err());
        assert!(Surface::sphere(-1.0).is_err());
        assert!(Surface::mobius_strip(1.0, 0.6).is_err());
    }
}
