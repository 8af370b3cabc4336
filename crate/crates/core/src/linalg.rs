//! Linear solvers for the assembled tube systems.
//!
//! The direct path is a sparse LU with partial pivoting (faer) followed by a
//! few rounds of iterative refinement. The iterative path is restarted GMRES
//! preconditioned on the right with ILU(0).

use std::time::{Duration, Instant};

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::sparse::linalg::lu::{factorize_symbolic_lu, LuRef, LuSymbolicParams, NumericLu, SymbolicLu};
use faer::sparse::linalg::LuError;
use faer::{Conj, Mat, Par};

use crate::error::{Error, Result};
use crate::sparse::{norm_inf, CsrMatrix};

pub const DIRECT_TOL: f64 = 1e-10;
pub const ITERATIVE_TOL: f64 = 1e-9;
/// Solutions this large relative to `|b| / |A|` indicate a numerically singular matrix.
const SINGULAR_GROWTH: f64 = 1e13;
/// Sparse LU fill grows quickly with band size; larger systems go to GMRES under [`SolveMethod::Auto`].
pub const AUTO_DIRECT_LIMIT: usize = 30_000;
const REFINEMENT_STEPS: usize = 3;
const GMRES_RESTART: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveMethod {
    Direct,
    Iterative,
    /// Direct up to [`AUTO_DIRECT_LIMIT`] unknowns, iterative above.
    Auto,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Timings {
    pub assemble: Duration,
    pub factor: Duration,
    pub solve: Duration,
}

#[derive(Clone, Debug)]
pub struct SolveReport {
    pub solution: Vec<f64>,
    /// `|A u - b|_∞ / |b|_∞`.
    pub residual_norm: f64,
    pub iterations: usize,
    pub error_vs_exact: Option<f64>,
    pub timings: Timings,
}

/// Sparse LU factors of a square matrix, reusable across right-hand sides.
pub struct LuFactor {
    symbolic: SymbolicLu<usize>,
    numeric: NumericLu<usize, f64>,
    n: usize,
}

impl std::fmt::Debug for LuFactor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LuFactor").field("n", &self.n).finish_non_exhaustive()
    }
}

impl LuFactor {
    pub fn new(a: &CsrMatrix) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::DimensionMismatch(format!("LU of a {}x{} matrix", a.nrows(), a.ncols())));
        }
        let fail = |e: &dyn std::fmt::Debug| Error::FactorizationFailure(format!("{e:?}"));
        let mat = a.to_faer()?;
        let symbolic = factorize_symbolic_lu(mat.symbolic(), LuSymbolicParams::default()).map_err(|e| fail(&e))?;
        let mut numeric = NumericLu::new();
        let par = Par::Seq;
        let mut mem = MemBuffer::try_new(symbolic.factorize_numeric_lu_scratch::<f64>(par, Default::default()))
            .map_err(|e| fail(&e))?;
        symbolic
            .factorize_numeric_lu(&mut numeric, mat.as_ref(), par, MemStack::new(&mut mem), Default::default())
            .map_err(|e| match e {
                LuError::SymbolicSingular { .. } => Error::SingularSystem,
                other => fail(&other),
            })?;
        Ok(Self {
            symbolic,
            numeric,
            n: a.nrows(),
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut rhs = Mat::<f64>::from_fn(self.n, 1, |i, _| b[i]);
        let par = Par::Seq;
        let mut mem = MemBuffer::new(self.symbolic.solve_in_place_scratch::<f64>(1, par));
        LuRef::new_unchecked(&self.symbolic, &self.numeric).solve_in_place_with_conj(
            Conj::No,
            rhs.as_mut(),
            par,
            MemStack::new(&mut mem),
        );
        (0..self.n).map(|i| rhs[(i, 0)]).collect()
    }

    /// `|A| |A⁻¹ r| / |r|` for a fixed pseudo-random `r`, a cheap lower bound on the condition number.
    pub fn condition_probe(&self, a: &CsrMatrix) -> f64 {
        let mut state = 0x9e37_79b9_7f4a_7c15u64;
        let r: Vec<f64> = (0..self.n)
            .map(|_| {
                state ^= state << 13;
                state ^= state >> 7;
                state ^= state << 17;
                (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
            })
            .collect();
        let x = self.solve(&r);
        a.norm_inf() * norm_inf(&x) / norm_inf(&r).max(f64::MIN_POSITIVE)
    }

    /// Solves with iterative refinement against `a` (the matrix that was factored).
    pub fn solve_refined(&self, a: &CsrMatrix, b: &[f64]) -> (Vec<f64>, f64) {
        let bnorm = norm_inf(b).max(f64::MIN_POSITIVE);
        let mut x = self.solve(b);
        let mut r = residual(a, &x, b);
        let mut rel = norm_inf(&r) / bnorm;
        for _ in 0..REFINEMENT_STEPS {
            if rel <= 1e-3 * DIRECT_TOL || !rel.is_finite() {
                break;
            }
            let dxv = self.solve(&r);
            let trial: Vec<f64> = x.iter().zip(&dxv).map(|(a, b)| a + b).collect();
            let rt = residual(a, &trial, b);
            let rel_t = norm_inf(&rt) / bnorm;
            if rel_t >= rel {
                break;
            }
            x = trial;
            r = rt;
            rel = rel_t;
        }
        (x, rel)
    }
}

/// `b - A x`.
pub fn residual(a: &CsrMatrix, x: &[f64], b: &[f64]) -> Vec<f64> {
    let ax = a.mul_vec(x);
    b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect()
}

fn check_growth(a: &CsrMatrix, x: &[f64], b: &[f64]) -> Result<()> {
    let growth = norm_inf(x) * a.norm_inf() / norm_inf(b).max(f64::MIN_POSITIVE);
    if !growth.is_finite() || growth > SINGULAR_GROWTH {
        return Err(Error::SingularSystem);
    }
    Ok(())
}

enum Backend {
    Lu(LuFactor),
    Gmres(Ilu0),
}

/// A factorised or preconditioned operator that solves `A x = b` for many right-hand sides.
pub struct LinearSolver {
    a: CsrMatrix,
    backend: Backend,
    tol: f64,
    max_iter: usize,
}

impl std::fmt::Debug for LinearSolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LinearSolver")
            .field("n", &self.a.nrows())
            .field("direct", &matches!(self.backend, Backend::Lu(_)))
            .field("tol", &self.tol)
            .finish()
    }
}

impl LinearSolver {
    /// Factorises (direct) or builds the ILU(0) preconditioner (iterative).
    /// A direct factorisation whose condition probe exceeds the growth limit is rejected.
    pub fn new(a: CsrMatrix, method: SolveMethod) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::DimensionMismatch(format!("{}x{} system matrix", a.nrows(), a.ncols())));
        }
        let direct = match method {
            SolveMethod::Direct => true,
            SolveMethod::Iterative => false,
            SolveMethod::Auto => a.nrows() <= AUTO_DIRECT_LIMIT,
        };
        let (backend, tol) = if direct {
            let lu = LuFactor::new(&a)?;
            let probe = lu.condition_probe(&a);
            if !probe.is_finite() || probe > SINGULAR_GROWTH {
                return Err(Error::SingularSystem);
            }
            (Backend::Lu(lu), DIRECT_TOL)
        } else {
            (Backend::Gmres(Ilu0::new(&a)?), ITERATIVE_TOL)
        };
        let max_iter = (10.0 * (a.nrows() as f64).sqrt()).ceil() as usize;
        Ok(Self { a, backend, tol, max_iter })
    }

    /// Relative residual target of [`LinearSolver::solve`].
    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.a
    }

    pub fn is_direct(&self) -> bool {
        matches!(self.backend, Backend::Lu(_))
    }

    pub fn solve(&self, b: &[f64]) -> Result<(Vec<f64>, usize, f64)> {
        self.solve_from(b, None)
    }

    /// Returns `(x, iterations, |b - A x|_∞ / |b|_∞)`. The initial guess only affects the iterative backend.
    pub fn solve_from(&self, b: &[f64], x0: Option<&[f64]>) -> Result<(Vec<f64>, usize, f64)> {
        if b.len() != self.a.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "right-hand side of length {} for a system of size {}",
                b.len(),
                self.a.nrows()
            )));
        }
        if norm_inf(b) == 0.0 {
            return Ok((vec![0.0; b.len()], 0, 0.0));
        }
        let (x, iterations, rel) = match &self.backend {
            Backend::Lu(lu) => {
                let (x, rel) = lu.solve_refined(&self.a, b);
                if !(rel <= self.tol) {
                    return Err(Error::SingularSystem);
                }
                (x, 1, rel)
            }
            Backend::Gmres(ilu) => gmres(&self.a, b, ilu, x0, self.tol, self.max_iter)?,
        };
        check_growth(&self.a, &x, b)?;
        Ok((x, iterations, rel))
    }
}

/// Solves `A u = b` and reports the relative residual.
pub fn solve_linear(a: &CsrMatrix, b: &[f64], method: SolveMethod) -> Result<SolveReport> {
    if b.len() != a.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} system with right-hand side of length {}",
            a.nrows(),
            a.ncols(),
            b.len()
        )));
    }
    let t0 = Instant::now();
    let solver = LinearSolver::new(a.clone(), method)?;
    let factor = t0.elapsed();
    let t1 = Instant::now();
    let (solution, iterations, residual_norm) = solver.solve(b)?;
    Ok(SolveReport {
        solution,
        residual_norm,
        iterations,
        error_vs_exact: None,
        timings: Timings {
            factor,
            solve: t1.elapsed(),
            ..Timings::default()
        },
    })
}

/// Incomplete LU with the sparsity pattern of `A`.
#[derive(Clone, Debug)]
pub struct Ilu0 {
    lu: CsrMatrix,
    diag_pos: Vec<usize>,
}

impl Ilu0 {
    pub fn new(a: &CsrMatrix) -> Result<Self> {
        let n = a.nrows();
        let row_ptr = a.row_ptr().to_vec();
        let cols = a.col_idx().to_vec();
        let mut vals = a.values().to_vec();
        let mut diag_pos = vec![usize::MAX; n];
        for i in 0..n {
            for k in row_ptr[i]..row_ptr[i + 1] {
                if cols[k] == i {
                    diag_pos[i] = k;
                }
            }
            if diag_pos[i] == usize::MAX {
                return Err(Error::FactorizationFailure(format!("row {i} has no diagonal entry")));
            }
        }
        let mut pos = vec![usize::MAX; n];
        for i in 0..n {
            let (start, end) = (row_ptr[i], row_ptr[i + 1]);
            for k in start..end {
                pos[cols[k]] = k;
            }
            for k in start..end {
                let j = cols[k];
                if j >= i {
                    break;
                }
                let pivot = vals[diag_pos[j]];
                let factor = vals[k] / pivot;
                vals[k] = factor;
                for kk in diag_pos[j] + 1..row_ptr[j + 1] {
                    let p = pos[cols[kk]];
                    if p != usize::MAX {
                        vals[p] -= factor * vals[kk];
                    }
                }
            }
            if vals[diag_pos[i]] == 0.0 || !vals[diag_pos[i]].is_finite() {
                return Err(Error::FactorizationFailure(format!("zero pivot in ILU(0) at row {i}")));
            }
            for k in start..end {
                pos[cols[k]] = usize::MAX;
            }
        }
        let lu = CsrMatrix::from_rows(
            n,
            (0..n)
                .map(|i| (row_ptr[i]..row_ptr[i + 1]).map(|k| (cols[k], vals[k])).collect())
                .collect(),
        );
        Ok(Self { lu, diag_pos })
    }

    /// Applies `(LU)⁻¹` in place.
    pub fn apply(&self, x: &mut [f64]) {
        let (rp, ci, v) = (self.lu.row_ptr(), self.lu.col_idx(), self.lu.values());
        let n = x.len();
        for i in 0..n {
            let mut s = x[i];
            for k in rp[i]..self.diag_pos[i] {
                s -= v[k] * x[ci[k]];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in self.diag_pos[i] + 1..rp[i + 1] {
                s -= v[k] * x[ci[k]];
            }
            x[i] = s / v[self.diag_pos[i]];
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Right-preconditioned restarted GMRES. Returns the solution, the number of
/// inner iterations used, and the final relative residual `|b - Ax|_∞ / |b|_∞`.
pub fn gmres(
    a: &CsrMatrix,
    b: &[f64],
    precond: &Ilu0,
    x0: Option<&[f64]>,
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, usize, f64)> {
    let n = b.len();
    let bnorm_inf = norm_inf(b).max(f64::MIN_POSITIVE);
    let mut x = x0.map_or_else(|| vec![0.0; n], <[f64]>::to_vec);
    let mut history = Vec::new();
    let mut total = 0;
    loop {
        let r = residual(a, &x, b);
        let rel = norm_inf(&r) / bnorm_inf;
        history.push(rel);
        if rel <= tol {
            return Ok((x, total, rel));
        }
        if total >= max_iter {
            return Err(Error::NoConvergence {
                iterations: total,
                residual: rel,
                history,
            });
        }
        let beta = norm2(&r);
        let m = GMRES_RESTART.min(max_iter - total);
        let mut v: Vec<Vec<f64>> = vec![r.iter().map(|x| x / beta).collect()];
        let mut h = vec![vec![0.0; m]; m + 1];
        let (mut cs, mut sn) = (vec![0.0; m], vec![0.0; m]);
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        let mut k_used = 0;
        // inner residual target in the 2-norm, tightened so that the ∞-norm check passes
        let inner_tol = 0.1 * tol * bnorm_inf;
        for k in 0..m {
            let mut z = v[k].clone();
            precond.apply(&mut z);
            let mut w = a.mul_vec(&z);
            for _ in 0..2 {
                for (j, vj) in v.iter().enumerate() {
                    let hj = dot(&w, vj);
                    h[j][k] += hj;
                    w.iter_mut().zip(vj).for_each(|(wi, vi)| *wi -= hj * vi);
                }
            }
            let hn = norm2(&w);
            h[k + 1][k] = hn;
            for j in 0..k {
                let t = cs[j] * h[j][k] + sn[j] * h[j + 1][k];
                h[j + 1][k] = -sn[j] * h[j][k] + cs[j] * h[j + 1][k];
                h[j][k] = t;
            }
            let denom = h[k][k].hypot(h[k + 1][k]);
            cs[k] = h[k][k] / denom;
            sn[k] = h[k + 1][k] / denom;
            h[k][k] = denom;
            h[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            k_used = k + 1;
            total += 1;
            if g[k + 1].abs() <= inner_tol || hn == 0.0 {
                break;
            }
            v.push(w.iter().map(|x| x / hn).collect());
        }
        let mut y = vec![0.0; k_used];
        for i in (0..k_used).rev() {
            let s: f64 = (i + 1..k_used).map(|j| h[i][j] * y[j]).sum();
            y[i] = (g[i] - s) / h[i][i];
        }
        let mut update = vec![0.0; n];
        for (j, yj) in y.iter().enumerate() {
            update.iter_mut().zip(&v[j]).for_each(|(u, vj)| *u += yj * vj);
        }
        precond.apply(&mut update);
        x.iter_mut().zip(&update).for_each(|(xi, ui)| *xi += ui);
    }
}
