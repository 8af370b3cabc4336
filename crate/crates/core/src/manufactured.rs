//! Manufactured test problem on the unit upper hemisphere.
//!
//! `u(φ, θ) = cos(2φ) sin²θ + sin(3φ) sin³θ`, which in Cartesian form is the sum
//! of the harmonic polynomials `x² - y²` (degree 2) and `3x²y - y³` (degree 3).
//! On the unit sphere `Δ_S` acts on a degree-`l` harmonic as `-l(l+1)`, and the
//! outward conormal on the equator is `-e_z`, along which `u` is constant, so
//! `∂_n u = 0` there.

use crate::elliptic::{BoundaryCondition, EllipticProblem};
use crate::geometry::Vec3;

fn p2(y: &Vec3) -> f64 {
    y.x * y.x - y.y * y.y
}

fn p3(y: &Vec3) -> f64 {
    3.0 * y.x * y.x * y.y - y.y.powi(3)
}

pub fn exact(y: &Vec3) -> f64 {
    p2(y) + p3(y)
}

/// `Δ_S u`.
pub fn laplace_beltrami(y: &Vec3) -> f64 {
    -6.0 * p2(y) - 12.0 * p3(y)
}

/// `∂_n u` on the equator.
pub fn conormal_derivative(_y: &Vec3) -> f64 {
    0.0
}

/// `Δ_S u = f`, `∂_n u + κ u = g`.
pub fn robin_problem(kappa: f64) -> EllipticProblem {
    EllipticProblem::new(
        0.0,
        laplace_beltrami,
        BoundaryCondition::robin(kappa, move |y| conormal_derivative(y) + kappa * exact(y)),
    )
}

/// `Δ_S u = f`, `∂_n u = g̃ - u²` with `g̃ = ∂_n u + u²`.
pub fn quadratic_flux_problem() -> EllipticProblem {
    EllipticProblem::new(
        0.0,
        laplace_beltrami,
        BoundaryCondition::general(|y, u| conormal_derivative(y) + exact(y).powi(2) - u * u),
    )
}
