//! Steklov eigenproblem `Δ_S φ = 0`, `∂_n φ = σ φ` as the generalized matrix problem
//! `A φ = σ B φ` with `A = Ē L - γ (I - Ē)` and `B = -γ D E`.
//!
//! Eigenvalues near a shift `s` are found with a block Krylov method on
//! `OP = (A - s B)⁻¹ B`, whose eigenvalues are `μ = 1 / (σ - s)`. The basis is
//! restarted with its leading Ritz vectors until every wanted pair has a small
//! residual in the original generalized problem.

use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{LinearSolver, SolveMethod};
use crate::operators::TubeOperators;
use crate::sparse::{norm_inf, CsrMatrix};

pub const DEFAULT_SHIFT: f64 = -0.1;
pub const EIGEN_RESIDUAL_TOL: f64 = 1e-6;
pub const START_SEED: u64 = 42;

const BLOCK: usize = 2;
const INNER_TOL: f64 = 1e-12;
const MAX_RESTARTS: usize = 60;

#[derive(Clone, Debug)]
pub struct EigenReport {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Scaled to unit max-norm.
    pub eigenvectors: Vec<Vec<f64>>,
    /// `|A φ - σ B φ|_∞ / |φ|_∞`.
    pub residuals: Vec<f64>,
    /// Applications of `OP`.
    pub operator_applications: usize,
}

/// `(A, B)` of the discrete Steklov problem.
pub fn steklov_matrices(ops: &TubeOperators) -> Result<(CsrMatrix, CsrMatrix)> {
    let n = ops.len();
    let i_minus_ebar = CsrMatrix::identity(n).add_scaled(1.0, &ops.ebar, -1.0)?;
    let a = ops.ebar.matmul(&ops.lap)?.add_scaled(1.0, &i_minus_ebar, -ops.gamma)?;
    let b = ops.e.scale_rows(&ops.d_diag()).scaled(-ops.gamma);
    Ok((a, b))
}

pub fn solve_steklov(ops: &TubeOperators, k: usize, shift: f64) -> Result<EigenReport> {
    if ops.d_diag().iter().all(|d| *d == 0.0) {
        return Err(Error::NoBoundary);
    }
    let (a, b) = steklov_matrices(ops)?;
    solve_generalized(&a, &b, k, shift)
}

/// The `k` eigenpairs of `A φ = σ B φ` closest to `shift`, found through `(A - shift B)⁻¹ B`.
pub fn solve_generalized(a: &CsrMatrix, b: &CsrMatrix, k: usize, shift: f64) -> Result<EigenReport> {
    let n = a.nrows();
    if k == 0 || k >= n {
        return Err(Error::DimensionMismatch(format!("{k} eigenpairs requested from a problem of size {n}")));
    }
    if b.norm_inf() == 0.0 {
        return Err(Error::NoBoundary);
    }
    let m = a.add_scaled(1.0, b, -shift)?;
    let solver = LinearSolver::new(m, SolveMethod::Auto)
        .map_err(|e| match e {
            Error::SingularSystem => Error::FactorizationFailure(format!("A - {shift} B is singular")),
            other => other,
        })?
        .with_tolerance(INNER_TOL);
    let mut krylov = Krylov {
        a,
        b,
        solver: &solver,
        shift,
        v: Vec::new(),
        z: Vec::new(),
        h: Vec::new(),
        applications: 0,
    };

    let max_dim = (3 * k + 12).max(24).next_multiple_of(BLOCK);
    let keep = (k + 4).next_multiple_of(BLOCK);

    let mut rng = ChaCha8Rng::seed_from_u64(START_SEED);
    let mut start = Vec::with_capacity(BLOCK);
    for _ in 0..BLOCK {
        let r: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        start.push(krylov.apply(&r)?);
    }
    krylov.extend(start, &mut rng)?;

    let mut last_residuals = Vec::new();
    for _restart in 0..=MAX_RESTARTS {
        while krylov.dim() < max_dim {
            let cand = krylov.expansion_candidates();
            krylov.extend(cand, &mut rng)?;
        }
        let ritz = krylov.ritz()?;
        let wanted = &ritz[..k.min(ritz.len())];
        let pairs: Vec<(f64, Vec<f64>, f64)> = wanted.iter().map(|r| krylov.refine(&r.vector)).collect();
        last_residuals = pairs.iter().map(|p| p.2).collect();
        if wanted.iter().all(|r| r.imag_rel < 1e-8) && last_residuals.iter().all(|r| *r <= EIGEN_RESIDUAL_TOL) {
            let mut pairs = pairs;
            pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
            return Ok(EigenReport {
                eigenvalues: pairs.iter().map(|p| p.0).collect(),
                residuals: pairs.iter().map(|p| p.2).collect(),
                eigenvectors: pairs.into_iter().map(|p| p.1).collect(),
                operator_applications: krylov.applications,
            });
        }
        let vectors: Vec<Vec<f64>> = ritz.iter().take(keep).map(|r| r.coeffs.clone()).collect();
        krylov.restart(&vectors);
    }
    Err(Error::NoConvergence {
        iterations: krylov.applications,
        residual: last_residuals.iter().copied().fold(0.0, f64::max),
        history: last_residuals,
    })
}

struct RitzPair {
    mu: f64,
    imag_rel: f64,
    /// Coefficients in the current basis (real part).
    coeffs: Vec<f64>,
    vector: Vec<f64>,
}

struct Krylov<'a> {
    a: &'a CsrMatrix,
    b: &'a CsrMatrix,
    solver: &'a LinearSolver,
    shift: f64,
    /// Orthonormal basis.
    v: Vec<Vec<f64>>,
    /// `z[j] = OP v[j]`.
    z: Vec<Vec<f64>>,
    /// `h[i][j] = v[i] · z[j]`.
    h: Vec<Vec<f64>>,
    applications: usize,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(y: &mut [f64], alpha: f64, x: &[f64]) {
    y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += alpha * xi);
}

fn combine(basis: &[Vec<f64>], coeffs: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; basis[0].len()];
    for (b, c) in basis.iter().zip(coeffs) {
        if *c != 0.0 {
            axpy(&mut out, *c, b);
        }
    }
    out
}

impl Krylov<'_> {
    fn dim(&self) -> usize {
        self.v.len()
    }

    fn apply(&mut self, x: &[f64]) -> Result<Vec<f64>> {
        self.applications += 1;
        let bx = self.b.mul_vec(x);
        Ok(self.solver.solve(&bx)?.0)
    }

    /// Orthogonalises `w` against the basis (twice); returns the remaining norm.
    fn orthogonalize(&self, w: &mut [f64]) -> f64 {
        for _ in 0..2 {
            for v in &self.v {
                let c = dot(w, v);
                axpy(w, -c, v);
            }
        }
        norm2(w)
    }

    /// Appends the orthonormalised `candidates` to the basis, applying `OP` to each new vector.
    fn extend(&mut self, candidates: Vec<Vec<f64>>, rng: &mut ChaCha8Rng) -> Result<()> {
        let n = self.a.nrows();
        for mut w in candidates {
            let scale = norm2(&w);
            let mut nrm = self.orthogonalize(&mut w);
            if !(nrm > 1e-10 * scale) {
                w = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
                w = self.apply(&w)?;
                nrm = self.orthogonalize(&mut w);
            }
            w.iter_mut().for_each(|x| *x /= nrm);
            let zw = self.apply(&w)?;
            for (i, row) in self.h.iter_mut().enumerate() {
                row.push(dot(&self.v[i], &zw));
            }
            let new_row: Vec<f64> = self.z.iter().chain(std::iter::once(&zw)).map(|zj| dot(&w, zj)).collect();
            self.v.push(w);
            self.z.push(zw);
            self.h.push(new_row);
        }
        Ok(())
    }

    /// Residual directions `z_j - V h_j` of the basis, largest first, one block's worth.
    fn expansion_candidates(&self) -> Vec<Vec<f64>> {
        let d = self.dim();
        let start = d.saturating_sub(self.v.len().min(3 * BLOCK));
        let mut res: Vec<(f64, Vec<f64>)> = (start..d)
            .map(|j| {
                let mut r = self.z[j].clone();
                for (i, v) in self.v.iter().enumerate() {
                    axpy(&mut r, -self.h[i][j], v);
                }
                (norm2(&r), r)
            })
            .collect();
        res.sort_by(|x, y| y.0.total_cmp(&x.0));
        res.into_iter().take(BLOCK).map(|x| x.1).collect()
    }

    /// Ritz pairs of `H`, by decreasing `|μ|`.
    fn ritz(&self) -> Result<Vec<RitzPair>> {
        let d = self.dim();
        let hm = Mat::<f64>::from_fn(d, d, |i, j| self.h[i][j]);
        let eig = hm
            .eigen()
            .map_err(|e| Error::FactorizationFailure(format!("dense eigensolver: {e:?}")))?;
        let s = eig.S().column_vector();
        let u = eig.U();
        let mut pairs: Vec<RitzPair> = (0..d)
            .map(|j| {
                let lam = s[j];
                let mut coeffs: Vec<f64> = (0..d).map(|i| u[(i, j)].re).collect();
                let cn = norm2(&coeffs);
                if cn > 0.0 {
                    coeffs.iter_mut().for_each(|c| *c /= cn);
                }
                RitzPair {
                    mu: lam.re,
                    imag_rel: lam.im.abs() / lam.re.abs().max(f64::MIN_POSITIVE),
                    vector: combine(&self.v, &coeffs),
                    coeffs,
                }
            })
            .collect();
        pairs.sort_by(|x, y| y.mu.abs().total_cmp(&x.mu.abs()));
        Ok(pairs)
    }

    /// `σ` minimising `|A φ - σ B φ|_2`, the eigenvector scaled to unit max-norm, and its residual.
    fn refine(&self, phi: &[f64]) -> (f64, Vec<f64>, f64) {
        let mut phi = phi.to_vec();
        let (imax, _) = phi
            .iter()
            .enumerate()
            .fold((0, 0.0f64), |acc, (i, x)| if x.abs() > acc.1 { (i, x.abs()) } else { acc });
        let scale = phi[imax];
        phi.iter_mut().for_each(|x| *x /= scale);
        let ap = self.a.mul_vec(&phi);
        let bp = self.b.mul_vec(&phi);
        let bb = dot(&bp, &bp);
        let sigma = if bb > 0.0 { dot(&bp, &ap) / bb } else { self.shift };
        let r: Vec<f64> = ap.iter().zip(&bp).map(|(x, y)| x - sigma * y).collect();
        (sigma, phi.clone(), norm_inf(&r) / norm_inf(&phi))
    }

    /// Replaces the basis by the span of the given coefficient vectors.
    fn restart(&mut self, coeff_vectors: &[Vec<f64>]) {
        let d = self.dim();
        // modified Gram-Schmidt in coefficient space
        let mut q: Vec<Vec<f64>> = Vec::new();
        for c in coeff_vectors {
            let mut w = c.clone();
            for _ in 0..2 {
                for qi in &q {
                    let t = dot(&w, qi);
                    axpy(&mut w, -t, qi);
                }
            }
            let nrm = norm2(&w);
            if nrm > 1e-8 {
                w.iter_mut().for_each(|x| *x /= nrm);
                q.push(w);
            }
        }
        let v: Vec<Vec<f64>> = q.iter().map(|c| combine(&self.v, c)).collect();
        let z: Vec<Vec<f64>> = q.iter().map(|c| combine(&self.z, c)).collect();
        // H' = Qᵀ H Q
        let hq: Vec<Vec<f64>> = (0..d)
            .map(|i| q.iter().map(|c| dot(&self.h[i], c)).collect())
            .collect();
        let h = q
            .iter()
            .map(|ci| {
                (0..q.len())
                    .map(|j| (0..d).map(|i| ci[i] * hq[i][j]).sum())
                    .collect()
            })
            .collect();
        self.v = v;
        self.z = z;
        self.h = h;
    }
}
