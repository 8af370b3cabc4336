//! Gray–Scott reaction–diffusion on a surface with leaky Robin boundaries:
//!
//! ```text
//! u_t = D_u Δ_S u - u v² + F (1 - u),        ∂_n u + κ u = 0
//! v_t = D_v Δ_S v + u v² - (F + k) v,        ∂_n v + κ v = 0
//! ```
//!
//! Each step is implicit in the embedded diffusion operator
//! `ĒL - γ (I - Ē + κ D E)` and explicit in the reaction terms, which are
//! evaluated at the closest-point values `E u`, `E v`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::band::Classification;
use crate::elliptic::{assemble_robin, BoundaryCondition, EllipticProblem};
use crate::error::{Error, Result};
use crate::geometry::{Surface, Vec3};
use crate::linalg::{LinearSolver, SolveMethod};
use crate::operators::TubeOperators;
use crate::sparse::CsrMatrix;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GrayScottParams {
    /// Feed rate `F`.
    pub feed: f64,
    /// Kill rate `k`.
    pub kill: f64,
    pub du: f64,
    pub dv: f64,
    /// Leakage rate of the Robin condition.
    pub kappa: f64,
    pub final_time: f64,
    pub dt: f64,
}

impl GrayScottParams {
    /// `F = 0.010`, `k = 0.042`, `D_u = 8e-5`, `D_v = 0.4 D_u`, `dt = 1`;
    /// `T = 4000` without leakage and `T = 10000` otherwise.
    pub fn standard(kappa: f64) -> Self {
        let du = 8e-5;
        Self {
            feed: 0.010,
            kill: 0.042,
            du,
            dv: 0.4 * du,
            kappa,
            final_time: if kappa == 0.0 { 4000.0 } else { 10000.0 },
            dt: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be positive, got {v}")))
            }
        };
        positive("du", self.du)?;
        positive("dv", self.dv)?;
        positive("dt", self.dt)?;
        if !(self.final_time >= 0.0) {
            return Err(Error::Config(format!("final time must be non-negative, got {}", self.final_time)));
        }
        if !(self.kappa >= 0.0) {
            return Err(Error::Config(format!("kappa must be non-negative, got {}", self.kappa)));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.final_time / self.dt).round() as usize
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimulationState {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub time: f64,
    pub step: usize,
}

/// Initial disturbance: `count` disks of chord radius `radius` centred at
/// seeded random parameter values, where `(u, v) = (u_in, v_in)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Perturbation {
    pub count: usize,
    pub radius: f64,
    pub u_in: f64,
    pub v_in: f64,
}

impl Default for Perturbation {
    fn default() -> Self {
        Self {
            count: 8,
            radius: 0.1,
            u_in: 0.5,
            v_in: 0.25,
        }
    }
}

pub fn patch_centers(surface: &Surface, count: usize, seed: u64) -> Result<Vec<Vec3>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let [[a0, a1], [b0, b1]] = surface.parameter_domain();
    (0..count)
        .map(|_| {
            let a = rng.gen_range(a0..a1);
            let b = rng.gen_range(b0..=b1);
            surface.parametric_sample([a, b])
        })
        .collect()
}

/// `u = 1`, `v = 0` with the seeded patches. Values are set from `cp(x_i)`,
/// so the state is constant along normals.
pub fn init_state(
    surface: &Surface,
    class: &Classification,
    seed: u64,
    perturbation: &Perturbation,
) -> Result<SimulationState> {
    let centers = patch_centers(surface, perturbation.count, seed)?;
    let (u, v) = class
        .iter()
        .map(|p| {
            if centers.iter().any(|c| (p.cp - c).norm() <= perturbation.radius) {
                (perturbation.u_in, perturbation.v_in)
            } else {
                (1.0, 0.0)
            }
        })
        .unzip();
    Ok(SimulationState { u, v, time: 0.0, step: 0 })
}

/// Per-species implicit diffusion operators, factorised once.
#[derive(Debug)]
pub struct GrayScottStepper<'a> {
    params: GrayScottParams,
    ops: &'a TubeOperators,
    solve_u: LinearSolver,
    solve_v: LinearSolver,
}

impl<'a> GrayScottStepper<'a> {
    pub fn new(params: GrayScottParams, ops: &'a TubeOperators, class: &Classification) -> Result<Self> {
        params.validate()?;
        let problem = EllipticProblem::new(0.0, |_| 0.0, BoundaryCondition::robin(params.kappa, |_| 0.0));
        let (a, _) = assemble_robin(ops, class, &problem)?;
        let n = ops.len();
        let system = |d: f64| -> Result<CsrMatrix> { CsrMatrix::identity(n).scaled(1.0 / params.dt).add_scaled(1.0, &a, -d) };
        Ok(Self {
            params,
            ops,
            solve_u: LinearSolver::new(system(params.du)?, SolveMethod::Iterative)?,
            solve_v: LinearSolver::new(system(params.dv)?, SolveMethod::Iterative)?,
        })
    }

    pub fn params(&self) -> &GrayScottParams {
        &self.params
    }

    pub fn step(&self, state: &SimulationState) -> Result<SimulationState> {
        let GrayScottParams { feed, kill, dt, .. } = self.params;
        let eu = self.ops.e.mul_vec(&state.u);
        let ev = self.ops.e.mul_vec(&state.v);
        let (ru, rv): (Vec<f64>, Vec<f64>) = (0..state.u.len())
            .map(|i| {
                let uvv = eu[i] * ev[i] * ev[i];
                (
                    state.u[i] / dt - uvv + feed * (1.0 - eu[i]),
                    state.v[i] / dt + uvv - (feed + kill) * ev[i],
                )
            })
            .unzip();
        let step = state.step + 1;
        let (u, _, _) = self.solve_u.solve_from(&ru, Some(&state.u))?;
        let (v, _, _) = self.solve_v.solve_from(&rv, Some(&state.v))?;
        if u.iter().chain(&v).any(|x| !x.is_finite()) {
            return Err(Error::NonFinite { step });
        }
        Ok(SimulationState {
            u,
            v,
            time: step as f64 * dt,
            step,
        })
    }
}

/// One row of the run summary.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ActivityRecord {
    pub time: f64,
    pub variance_u: f64,
    pub variance_v: f64,
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub snapshots: Vec<SimulationState>,
    /// One record per step, including the initial state.
    pub summary: Vec<ActivityRecord>,
    pub final_state: SimulationState,
}

/// Population variance over the band points selected by `mask`.
pub fn masked_variance(values: &[f64], mask: &[bool]) -> f64 {
    let (mut n, mut mean, mut m2) = (0.0, 0.0, 0.0);
    for (x, _) in values.iter().zip(mask).filter(|(_, m)| **m) {
        n += 1.0;
        let d = x - mean;
        mean += d / n;
        m2 += d * (x - mean);
    }
    if n > 0.0 {
        m2 / n
    } else {
        0.0
    }
}

/// Band points within one grid spacing of the surface, where activity is measured.
pub fn near_surface_mask(class: &Classification, dx: f64) -> Vec<bool> {
    class.iter().map(|p| p.distance <= dx).collect()
}

/// Integrates to `params.final_time`, keeping a copy of the state at each
/// requested snapshot time (rounded to the nearest step).
pub fn run(
    stepper: &GrayScottStepper<'_>,
    initial: SimulationState,
    mask: &[bool],
    snapshot_times: &[f64],
    mut progress: impl FnMut(&SimulationState),
) -> Result<RunOutput> {
    let params = stepper.params();
    let steps = params.steps();
    let mut snap_steps: Vec<usize> = snapshot_times
        .iter()
        .map(|t| {
            if *t < 0.0 || *t > params.final_time + 0.5 * params.dt {
                Err(Error::Config(format!("snapshot time {t} outside [0, {}]", params.final_time)))
            } else {
                Ok((t / params.dt).round() as usize)
            }
        })
        .collect::<Result<_>>()?;
    snap_steps.sort_unstable();
    snap_steps.dedup();

    let record = |s: &SimulationState| ActivityRecord {
        time: s.time,
        variance_u: masked_variance(&s.u, mask),
        variance_v: masked_variance(&s.v, mask),
    };
    let mut state = initial;
    let mut snapshots = Vec::new();
    let mut summary = vec![record(&state)];
    if snap_steps.first() == Some(&state.step) {
        snapshots.push(state.clone());
    }
    for _ in 0..steps {
        state = stepper.step(&state)?;
        summary.push(record(&state));
        if snap_steps.binary_search(&state.step).is_ok() {
            snapshots.push(state.clone());
        }
        progress(&state);
    }
    Ok(RunOutput {
        snapshots,
        summary,
        final_state: state,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::band::BandGrid;

    #[test]
    fn variance_of_constant_is_zero() {
        assert_eq!(masked_variance(&[2.0; 5], &[true; 5]), 0.0);
        let v = masked_variance(&[1.0, 3.0, 100.0], &[true, true, false]);
        assert!((v - 1.0).abs() < 1e-15);
    }

    #[test]
    fn standard_presets() {
        let p = GrayScottParams::standard(0.0);
        assert_eq!(p.steps(), 4000);
        assert!((p.dv - 3.2e-5).abs() < 1e-18);
        assert_eq!(GrayScottParams::standard(10.0).final_time, 10000.0);
        assert!(GrayScottParams { dt: 0.0, ..p }.validate().is_err());
    }

    #[test]
    fn zero_patches_give_uniform_state() {
        let s = Surface::upper_hemisphere(1.0).unwrap();
        let (_, c) = BandGrid::build(&s, 0.1).unwrap();
        let p = Perturbation { count: 0, ..Default::default() };
        let st = init_state(&s, &c, 1, &p).unwrap();
        assert!(st.u.iter().all(|x| *x == 1.0));
        assert!(st.v.iter().all(|x| *x == 0.0));
    }
}
