//! Numerical closest points on the Möbius strip.
//!
//! The squared distance `g(s, t) = |X(s, t) - q|² / 2` is minimised over the
//! box `t ∈ [-w, w]` from the best few nodes of a 32×8 seed grid. Each local
//! solve is a Newton iteration with Gauss–Newton fallback and a backtracking
//! line search; when an iterate leaves the strip, `t` is clamped and the
//! search continues along the edge curve until the KKT sign condition says
//! the minimiser is back in the interior.

use std::f64::consts::TAU;

use super::{ClosestPoint, SurfaceFrame, Vec3, BOUNDARY_TOL};
use crate::error::{Error, Result};

const SEEDS_S: usize = 32;
const SEEDS_T: usize = 8;
/// Number of best seeds that are refined by the local solver.
const REFINED_SEEDS: usize = 4;
const STEP_TOL: f64 = 1e-12;
const MAX_ITERS: usize = 100;
/// Below this step length Newton is inside its quadratic basin and skips the line search.
const LOCAL_STEP: f64 = 1e-4;

#[derive(Clone, Copy, Debug)]
pub(super) struct Mobius {
    r: f64,
    w: f64,
}

struct Jet {
    x: Vec3,
    xs: Vec3,
    xt: Vec3,
    xss: Vec3,
    xst: Vec3,
}

impl Mobius {
    pub(super) fn new(center_radius: f64, half_width: f64) -> Self {
        Self {
            r: center_radius,
            w: half_width,
        }
    }

    pub(super) fn eval(&self, s: f64, t: f64) -> Vec3 {
        let (sh, ch) = (0.5 * s).sin_cos();
        let a = self.r + t * ch;
        Vec3::new(a * s.cos(), a * s.sin(), t * sh)
    }

    fn jet(&self, s: f64, t: f64) -> Jet {
        let (sh, ch) = (0.5 * s).sin_cos();
        let (ss, cs) = s.sin_cos();
        let a = self.r + t * ch;
        let a_s = -0.5 * t * sh;
        let a_ss = -0.25 * t * ch;
        let a_st = -0.5 * sh;
        Jet {
            x: Vec3::new(a * cs, a * ss, t * sh),
            xs: Vec3::new(a_s * cs - a * ss, a_s * ss + a * cs, 0.5 * t * ch),
            xt: Vec3::new(ch * cs, ch * ss, sh),
            xss: Vec3::new(
                a_ss * cs - 2.0 * a_s * ss - a * cs,
                a_ss * ss + 2.0 * a_s * cs - a * ss,
                -0.25 * t * sh,
            ),
            xst: Vec3::new(a_st * cs - ch * ss, a_st * ss + ch * cs, 0.5 * ch),
        }
    }

    /// Maps `s` into `[0, 2π)` using the identification `X(s + 2π, t) = X(s, -t)`.
    fn normalize(mut s: f64, mut t: f64) -> (f64, f64) {
        while s >= TAU {
            s -= TAU;
            t = -t;
        }
        while s < 0.0 {
            s += TAU;
            t = -t;
        }
        (s, t)
    }

    fn dist2(&self, q: &Vec3, s: f64, t: f64) -> f64 {
        0.5 * (self.eval(s, t) - q).norm_squared()
    }

    pub(super) fn closest_point(&self, q: &Vec3) -> Result<ClosestPoint> {
        let mut seeds = Vec::with_capacity(SEEDS_S * SEEDS_T);
        for i in 0..SEEDS_S {
            let s = TAU * i as f64 / SEEDS_S as f64;
            let (sh, ch) = (0.5 * s).sin_cos();
            let (ss, cs) = s.sin_cos();
            for j in 0..SEEDS_T {
                let t = self.w * (-1.0 + 2.0 * (j as f64 + 0.5) / SEEDS_T as f64);
                let a = self.r + t * ch;
                let x = Vec3::new(a * cs, a * ss, t * sh);
                seeds.push((0.5 * (x - q).norm_squared(), s, t));
            }
        }
        seeds.sort_by(|a, b| a.0.total_cmp(&b.0));

        let mut best: Option<(f64, f64, f64)> = None;
        let mut minima: Vec<(f64, Vec3)> = Vec::with_capacity(REFINED_SEEDS);
        for &(_, s0, t0) in seeds.iter().take(REFINED_SEEDS) {
            let (s, t) = self.local_min(q, s0, t0);
            let g = self.dist2(q, s, t);
            minima.push((g, self.eval(s, t)));
            if best.map_or(true, |b| g < b.0) {
                best = Some((g, s, t));
            }
        }
        let (g, s, t) = best.expect("at least one seed");
        let point = self.eval(s, t);

        // a second, well separated point at the same distance means cp is not unique
        let d = (2.0 * g).sqrt();
        let tie_tol = 1e-10 * self.r;
        for (g2, p2) in &minima {
            if ((2.0 * g2).sqrt() - d).abs() <= tie_tol && (p2 - point).norm() > 1e-6 * self.r && d > tie_tol {
                return Err(Error::DegenerateQuery {
                    x: q.x,
                    y: q.y,
                    z: q.z,
                });
            }
        }

        let (s, t) = Self::normalize(s, t);
        Ok(ClosestPoint {
            point,
            distance: (q - point).norm(),
            on_boundary: self.w - t.abs() <= BOUNDARY_TOL,
            param: Some([s, t]),
        })
    }

    fn local_min(&self, q: &Vec3, mut s: f64, mut t: f64) -> (f64, f64) {
        let mut on_edge = false;
        for _ in 0..MAX_ITERS {
            let j = self.jet(s, t);
            let r = j.x - q;
            let gs = j.xs.dot(&r);
            let gt = j.xt.dot(&r);

            if on_edge {
                // release when moving inward decreases the distance
                if gt * t.signum() > 0.0 {
                    on_edge = false;
                    continue;
                }
                let hss = j.xs.norm_squared() + j.xss.dot(&r);
                let h = if hss > 0.0 { hss } else { j.xs.norm_squared() };
                let mut ds = -gs / h;
                let g0 = 0.5 * r.norm_squared();
                let mut accepted = ds.abs() <= LOCAL_STEP;
                for _ in 0..30 {
                    if accepted || self.dist2(q, s + ds, t) <= g0 {
                        accepted = true;
                        break;
                    }
                    ds *= 0.5;
                }
                if !accepted {
                    break;
                }
                s += ds;
                if ds.abs() <= STEP_TOL {
                    break;
                }
                continue;
            }

            let gn = [
                [j.xs.norm_squared(), j.xs.dot(&j.xt)],
                [j.xs.dot(&j.xt), j.xt.norm_squared()],
            ];
            let hess = [
                [gn[0][0] + j.xss.dot(&r), gn[0][1] + j.xst.dot(&r)],
                [gn[1][0] + j.xst.dot(&r), gn[1][1]],
            ];
            let step = solve2(&hess, gs, gt)
                .filter(|_| hess[0][0] > 0.0 && det2(&hess) > 0.0)
                .or_else(|| solve2(&gn, gs, gt));
            let Some((mut ds, mut dt)) = step else { break };

            let g0 = 0.5 * r.norm_squared();
            let mut accepted = ds.hypot(dt) <= LOCAL_STEP;
            for _ in 0..30 {
                if accepted {
                    break;
                }
                let tn = t + dt;
                let tc = tn.clamp(-self.w, self.w);
                if self.dist2(q, s + ds, tc) <= g0 {
                    accepted = true;
                    break;
                }
                ds *= 0.5;
                dt *= 0.5;
            }
            if !accepted {
                break;
            }
            let tn = t + dt;
            if tn.abs() > self.w {
                t = tn.clamp(-self.w, self.w);
                s += ds;
                on_edge = true;
                continue;
            }
            s += ds;
            t = tn;
            if ds.hypot(dt) <= STEP_TOL {
                break;
            }
        }
        (s, t)
    }

    pub(super) fn frame(&self, s: f64, t: f64, on_boundary: bool) -> SurfaceFrame {
        let j = self.jet(s, t);
        let normal = j.xs.cross(&j.xt).normalize();
        if !on_boundary {
            return SurfaceFrame {
                normal,
                boundary_tangent: None,
                conormal: None,
            };
        }
        let tangent = j.xs.normalize();
        let mut conormal = normal.cross(&tangent).normalize();
        if conormal.dot(&j.xt) * t.signum() < 0.0 {
            conormal = -conormal;
        }
        SurfaceFrame {
            normal,
            boundary_tangent: Some(tangent),
            conormal: Some(conormal),
        }
    }
}

fn det2(m: &[[f64; 2]; 2]) -> f64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

/// Newton step `-M⁻¹ g`.
fn solve2(m: &[[f64; 2]; 2], g0: f64, g1: f64) -> Option<(f64, f64)> {
    let det = det2(m);
    if det.abs() <= 1e-300 {
        return None;
    }
    Some((-(m[1][1] * g0 - m[0][1] * g1) / det, -(m[0][0] * g1 - m[1][0] * g0) / det))
}
