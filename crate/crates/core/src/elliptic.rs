//! Penalty-embedded elliptic problems `Δ_S u - c u = f` with `∂_n u = j(y, u)` on the boundary.
//!
//! The embedded system couples the PDE rows to the extension rows:
//!
//! ```text
//! P (L u - c u - f) - γ (u - Ē u - D j) = 0,     j_i = j(cp(x_i), [E u]_i)
//! ```
//!
//! where `P` is `Ē` for the affine Robin assembly and `E` for the general
//! nonlinear path (see [`PdeRows`]).

use std::sync::Arc;
use std::time::Instant;

use crate::band::Classification;
use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::linalg::{residual, solve_linear, LinearSolver, SolveMethod, SolveReport, Timings};
use crate::operators::TubeOperators;
use crate::sparse::{norm_inf, CsrMatrix};

pub type SurfaceFn = Arc<dyn Fn(&Vec3) -> f64 + Send + Sync>;
pub type FluxFn = Arc<dyn Fn(&Vec3, f64) -> f64 + Send + Sync>;

const NONLINEAR_STEP_TOL: f64 = 1e-10;
const NONLINEAR_MAX_ITERS: usize = 100;

/// Boundary flux `∂_n u = j(y, u)`.
#[derive(Clone)]
pub enum BoundaryCondition {
    /// `j(y, u) = -κ u + g(y)`, i.e. `∂_n u + κ u = g`.
    AffineRobin { kappa: f64, g: SurfaceFn },
    General { j: FluxFn },
}

impl std::fmt::Debug for BoundaryCondition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::AffineRobin { kappa, .. } => f.debug_struct("AffineRobin").field("kappa", kappa).finish_non_exhaustive(),
            Self::General { .. } => f.debug_struct("General").finish_non_exhaustive(),
        }
    }
}

impl BoundaryCondition {
    pub fn robin(kappa: f64, g: impl Fn(&Vec3) -> f64 + Send + Sync + 'static) -> Self {
        Self::AffineRobin { kappa, g: Arc::new(g) }
    }

    /// Zero flux.
    pub fn neumann() -> Self {
        Self::robin(0.0, |_| 0.0)
    }

    pub fn general(j: impl Fn(&Vec3, f64) -> f64 + Send + Sync + 'static) -> Self {
        Self::General { j: Arc::new(j) }
    }

    pub fn flux(&self, y: &Vec3, u: f64) -> f64 {
        match self {
            Self::AffineRobin { kappa, g } => -kappa * u + g(y),
            Self::General { j } => j(y, u),
        }
    }
}

#[derive(Clone)]
pub struct EllipticProblem {
    pub c: f64,
    pub f: SurfaceFn,
    pub bc: BoundaryCondition,
}

impl EllipticProblem {
    pub fn new(c: f64, f: impl Fn(&Vec3) -> f64 + Send + Sync + 'static, bc: BoundaryCondition) -> Self {
        Self { c, f: Arc::new(f), bc }
    }
}

/// Which interpolation operator multiplies the PDE rows.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PdeRows {
    /// `Ē (L u - c u - f)`.
    Mirrored,
    /// `E (L u - c u - f)`.
    ClosestPoint,
}

fn pde_operator(ops: &TubeOperators, rows: PdeRows) -> &CsrMatrix {
    match rows {
        PdeRows::Mirrored => &ops.ebar,
        PdeRows::ClosestPoint => &ops.e,
    }
}

/// `P L - c P - γ (I - Ē) + γ D diag(a) E` for a per-row linear flux coefficient `a`.
fn penalty_matrix(ops: &TubeOperators, rows: PdeRows, c: f64, flux_slope: &[f64]) -> Result<CsrMatrix> {
    let p = pde_operator(ops, rows);
    let n = ops.len();
    let pl = p.matmul(&ops.lap)?;
    let mut a = pl.add_scaled(1.0, p, -c)?;
    let i_minus_ebar = CsrMatrix::identity(n).add_scaled(1.0, &ops.ebar, -1.0)?;
    a = a.add_scaled(1.0, &i_minus_ebar, -ops.gamma)?;
    let d = ops.d_diag();
    let weights: Vec<f64> = d.iter().zip(flux_slope).map(|(di, ai)| di * ai).collect();
    if weights.iter().any(|w| *w != 0.0) {
        let de = ops.e.scale_rows(&weights);
        a = a.add_scaled(1.0, &de, ops.gamma)?;
    }
    Ok(a)
}

fn sample_at_cp(class: &Classification, f: &SurfaceFn) -> Vec<f64> {
    class.iter().map(|p| f(&p.cp)).collect()
}

/// Assembles the affine Robin system with `Ē` on the PDE rows.
pub fn assemble_robin(
    ops: &TubeOperators,
    class: &Classification,
    problem: &EllipticProblem,
) -> Result<(CsrMatrix, Vec<f64>)> {
    assemble_robin_with(ops, class, problem, PdeRows::Mirrored)
}

/// `A = P L - c P - γ (I - Ē + κ D E)`, `b = P f - γ D g` with `f_i = f(cp_i)`, `g_i = g(cp_i)`.
pub fn assemble_robin_with(
    ops: &TubeOperators,
    class: &Classification,
    problem: &EllipticProblem,
    rows: PdeRows,
) -> Result<(CsrMatrix, Vec<f64>)> {
    let BoundaryCondition::AffineRobin { kappa, g } = &problem.bc else {
        return Err(Error::Config("assemble_robin needs an affine Robin boundary condition".into()));
    };
    let n = ops.len();
    let a = penalty_matrix(ops, rows, problem.c, &vec![-kappa; n])?;
    let f = sample_at_cp(class, &problem.f);
    let pf = pde_operator(ops, rows).mul_vec(&f);
    let d = ops.d_diag();
    let b = (0..n)
        .map(|i| {
            let dg = if d[i] != 0.0 { d[i] * g(&class.info(i).cp) } else { 0.0 };
            pf[i] - ops.gamma * dg
        })
        .collect();
    Ok((a, b))
}

/// Assembles and solves the affine Robin problem.
pub fn solve_robin(
    ops: &TubeOperators,
    class: &Classification,
    problem: &EllipticProblem,
    method: SolveMethod,
) -> Result<SolveReport> {
    let t0 = Instant::now();
    let (a, b) = assemble_robin(ops, class, problem)?;
    let assemble = t0.elapsed();
    let mut rep = solve_linear(&a, &b, method)?;
    rep.timings.assemble = assemble;
    Ok(rep)
}

/// Residual of the full (possibly nonlinear) embedded equation, `E` on the PDE rows.
fn nonlinear_residual(
    ops: &TubeOperators,
    class: &Classification,
    problem: &EllipticProblem,
    lu_minus: &CsrMatrix,
    ef: &[f64],
    u: &[f64],
) -> Vec<f64> {
    let lin = lu_minus.mul_vec(u);
    let eu = ops.e.mul_vec(u);
    let d = ops.d_diag();
    (0..u.len())
        .map(|i| {
            let dj = if d[i] != 0.0 { d[i] * problem.bc.flux(&class.info(i).cp, eu[i]) } else { 0.0 };
            lin[i] - ef[i] + ops.gamma * dj
        })
        .collect()
}

fn newton_step(ops: &TubeOperators, c: f64, slope: &[f64], rhs: &[f64], timings: &mut Timings) -> Result<Vec<f64>> {
    let tf = Instant::now();
    let jac = penalty_matrix(ops, PdeRows::ClosestPoint, c, slope)?;
    let solver = LinearSolver::new(jac, SolveMethod::Auto)?;
    timings.factor += tf.elapsed();
    let ts = Instant::now();
    let (delta, _, _) = solver.solve(rhs)?;
    timings.solve += ts.elapsed();
    Ok(delta)
}

/// Newton iteration on the boundary flux: at each step `j` is linearised
/// about the current iterate and the resulting Robin-type system is solved
/// directly. A step that increases the residual is halved.
pub fn solve_nonlinear(
    ops: &TubeOperators,
    class: &Classification,
    problem: &EllipticProblem,
    initial: Option<&[f64]>,
) -> Result<SolveReport> {
    let n = ops.len();
    let t0 = Instant::now();
    let mut u = initial.map_or_else(|| vec![0.0; n], <[f64]>::to_vec);
    let f = sample_at_cp(class, &problem.f);
    let ef = ops.e.mul_vec(&f);
    // E L - c E - γ (I - Ē), the part of the operator that does not depend on j
    let base = penalty_matrix(ops, PdeRows::ClosestPoint, problem.c, &vec![0.0; n])?;
    let d = ops.d_diag();
    let scale = norm_inf(&ef).max(ops.gamma * d.iter().fold(0.0f64, |m, x| m.max(x.abs())));
    let mut res = nonlinear_residual(ops, class, problem, &base, &ef, &u);
    let mut res_norm = norm_inf(&res);
    let mut history = vec![res_norm / scale.max(f64::MIN_POSITIVE)];
    let mut timings = Timings::default();

    for iter in 1..=NONLINEAR_MAX_ITERS {
        let eu = ops.e.mul_vec(&u);
        let slope: Vec<f64> = (0..n)
            .map(|i| {
                if d[i] == 0.0 {
                    return 0.0;
                }
                let y = class.info(i).cp;
                let h = 1e-4 * eu[i].abs().max(1.0);
                (problem.bc.flux(&y, eu[i] + h) - problem.bc.flux(&y, eu[i] - h)) / (2.0 * h)
            })
            .collect();
        // J δ = -F with J = base + γ D diag(slope) E
        let rhs: Vec<f64> = res.iter().map(|r| -r).collect();
        let delta = match newton_step(ops, problem.c, &slope, &rhs, &mut timings) {
            Err(Error::SingularSystem | Error::NoConvergence { .. }) => {
                // flat flux with c = 0: take a Robin-like quasi-Newton step instead
                let shifted: Vec<f64> = slope.iter().map(|a| a.min(0.0) - 1.0).collect();
                newton_step(ops, problem.c, &shifted, &rhs, &mut timings)?
            }
            other => other?,
        };

        let mut step = 1.0;
        let mut trial: Vec<f64>;
        let mut trial_res;
        loop {
            trial = u.iter().zip(&delta).map(|(a, b)| a + step * b).collect();
            trial_res = nonlinear_residual(ops, class, problem, &base, &ef, &trial);
            if norm_inf(&trial_res) <= res_norm || step < 1e-3 {
                break;
            }
            step *= 0.5;
        }
        let change = step * norm_inf(&delta);
        u = trial;
        res = trial_res;
        res_norm = norm_inf(&res);
        history.push(res_norm / scale.max(f64::MIN_POSITIVE));
        if !res_norm.is_finite() {
            break;
        }
        if change <= NONLINEAR_STEP_TOL * norm_inf(&u).max(1.0) || res_norm <= NONLINEAR_STEP_TOL * scale {
            timings.assemble = t0.elapsed() - timings.factor - timings.solve;
            return Ok(SolveReport {
                solution: u,
                residual_norm: res_norm / scale.max(f64::MIN_POSITIVE),
                iterations: iter,
                error_vs_exact: None,
                timings,
            });
        }
    }
    Err(Error::NoConvergence {
        iterations: NONLINEAR_MAX_ITERS,
        residual: res_norm / scale.max(f64::MIN_POSITIVE),
        history,
    })
}

/// `max_i |[E u]_i - u*(cp_i)| / max_i |u*(cp_i)|`; the absolute error when `u*` vanishes.
pub fn surface_error(u: &[f64], exact: impl Fn(&Vec3) -> f64, ops: &TubeOperators, class: &Classification) -> f64 {
    let eu = ops.e.mul_vec(u);
    let mut num = 0.0f64;
    let mut den = 0.0f64;
    for (i, p) in class.iter().enumerate() {
        let v = exact(&p.cp);
        num = num.max((eu[i] - v).abs());
        den = den.max(v.abs());
    }
    if den == 0.0 {
        num
    } else {
        num / den
    }
}

/// Extension residual `u - Ē u - D j(cp, E u)`, one entry per band point.
pub fn extension_residual(ops: &TubeOperators, class: &Classification, bc: &BoundaryCondition, u: &[f64]) -> Vec<f64> {
    let ebu = ops.ebar.mul_vec(u);
    let eu = ops.e.mul_vec(u);
    let d = ops.d_diag();
    (0..u.len())
        .map(|i| {
            let dj = if d[i] != 0.0 { d[i] * bc.flux(&class.info(i).cp, eu[i]) } else { 0.0 };
            u[i] - ebu[i] - dj
        })
        .collect()
}

/// `|A u - b|_∞ / |b|_∞`.
pub fn relative_residual(a: &CsrMatrix, u: &[f64], b: &[f64]) -> f64 {
    norm_inf(&residual(a, u, b)) / norm_inf(b).max(f64::MIN_POSITIVE)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::band::BandGrid;
    use crate::geometry::Surface;

    fn setup(dx: f64) -> (BandGrid, Classification, TubeOperators) {
        let s = Surface::upper_hemisphere(1.0).unwrap();
        let (g, c) = BandGrid::build(&s, dx).unwrap();
        let ops = TubeOperators::build(&g, &c).unwrap();
        (g, c, ops)
    }

    #[test]
    fn neumann_assembly_has_no_boundary_terms() {
        let (_, c, ops) = setup(0.1);
        let p = EllipticProblem::new(0.0, |y: &Vec3| y.x, BoundaryCondition::neumann());
        let (a, b) = assemble_robin(&ops, &c, &p).unwrap();
        let expected = ops
            .ebar
            .matmul(&ops.lap)
            .unwrap()
            .add_scaled(1.0, &CsrMatrix::identity(ops.len()).add_scaled(1.0, &ops.ebar, -1.0).unwrap(), -ops.gamma)
            .unwrap();
        let ones = vec![1.0; ops.len()];
        let (x, y) = (a.mul_vec(&ones), expected.mul_vec(&ones));
        for (p, q) in x.iter().zip(&y) {
            assert!((p - q).abs() < 1e-9);
        }
        let f: Vec<f64> = c.iter().map(|p| p.cp.x).collect();
        let ef = ops.ebar.mul_vec(&f);
        assert_eq!(b, ef);
    }

    #[test]
    fn pure_neumann_is_singular() {
        let (_, c, ops) = setup(0.1);
        let p = EllipticProblem::new(0.0, |y: &Vec3| y.x, BoundaryCondition::neumann());
        let (a, b) = assemble_robin(&ops, &c, &p).unwrap();
        assert!(matches!(solve_linear(&a, &b, SolveMethod::Direct), Err(Error::SingularSystem)));
    }

    #[test]
    fn robin_needs_affine_condition() {
        let (_, c, ops) = setup(0.1);
        let p = EllipticProblem::new(1.0, |_: &Vec3| 0.0, BoundaryCondition::general(|_, u| -u));
        assert!(assemble_robin(&ops, &c, &p).is_err());
    }

    #[test]
    fn zero_exact_function_gives_absolute_error() {
        let (_, c, ops) = setup(0.1);
        let u = vec![0.5; ops.len()];
        let err = surface_error(&u, |_| 0.0, &ops, &c);
        assert!((err - 0.5).abs() < 1e-12);
    }
}
