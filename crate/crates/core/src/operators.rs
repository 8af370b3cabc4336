//! Sparse tube operators.
//!
//! * `E`: tri-cubic interpolation at `cp(x_i)`, so `[E u]_i ≈ u(cp(x_i))`.
//! * `Ē`: tri-cubic interpolation at `c̄p(x_i)`.
//! * `L`: the 7-point Cartesian Laplacian.
//! * `D`: diagonal with `D_ii = 2 ⟨x_i - cp(x_i), n_i⟩` on exterior points, zero elsewhere.
//!
//! The conormal `n_i` is estimated from `cp(x_i) - c̄p(x_i)`.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use crate::band::{BandGrid, Classification, PointKind, DIM, FACE_OFFSETS};
use crate::error::{Error, Result};
use crate::geometry::{Surface, Vec3};
use crate::sparse::CsrMatrix;

/// Below this length of `cp - c̄p` the conormal estimate is rejected and `D_ii = 0`.
pub const CONORMAL_DEGENERACY_THRESHOLD: f64 = 1e-4;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ConormalEstimate {
    Unit(Vec3),
    /// `|cp - c̄p|` fell below [`CONORMAL_DEGENERACY_THRESHOLD`].
    Degenerate,
}

impl ConormalEstimate {
    pub fn unit(&self) -> Option<Vec3> {
        match self {
            Self::Unit(v) => Some(*v),
            Self::Degenerate => None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct TubeOperators {
    pub e: CsrMatrix,
    pub ebar: CsrMatrix,
    pub lap: CsrMatrix,
    pub d: CsrMatrix,
    /// `None` on interior points.
    pub conormal: Vec<Option<ConormalEstimate>>,
    /// True where all six Laplacian neighbours are in the band.
    pub lap_complete: Vec<bool>,
    pub gamma: f64,
}

/// Penalty weight `2d / dx²`.
pub fn penalty_parameter(dx: f64) -> f64 {
    2.0 * DIM as f64 / (dx * dx)
}

impl TubeOperators {
    /// Assembles every operator, estimating conormals from `cp - c̄p`.
    pub fn build(grid: &BandGrid, class: &Classification) -> Result<Self> {
        let conormal = approximate_conormal(grid, class);
        Self::assemble(grid, class, conormal)
    }

    /// Same as [`TubeOperators::build`] but with the exact conormal of `surface`.
    pub fn build_with_analytic_conormal(surface: &Surface, grid: &BandGrid, class: &Classification) -> Result<Self> {
        let conormal = analytic_conormal(surface, class)?;
        Self::assemble(grid, class, conormal)
    }

    fn assemble(grid: &BandGrid, class: &Classification, conormal: Vec<Option<ConormalEstimate>>) -> Result<Self> {
        let cps: Vec<Vec3> = class.iter().map(|p| p.cp).collect();
        let cpbars: Vec<Vec3> = class.iter().map(|p| p.cpbar).collect();
        let e = build_interpolation(grid, &cps)?;
        let ebar = build_interpolation(grid, &cpbars)?;
        let (lap, lap_complete) = build_laplacian(grid);
        let d = build_boundary_diagonal(grid, class, &conormal);
        Ok(Self {
            e,
            ebar,
            lap,
            d,
            conormal,
            lap_complete,
            gamma: penalty_parameter(grid.dx()),
        })
    }

    pub fn len(&self) -> usize {
        self.e.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn d_diag(&self) -> Vec<f64> {
        self.d.diag()
    }

    /// Writes `E.mtx`, `Ebar.mtx`, `L.mtx` and `D.mtx` into `dir`.
    pub fn dump_matrix_market(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        for (name, m) in [("E", &self.e), ("Ebar", &self.ebar), ("L", &self.lap), ("D", &self.d)] {
            let f = BufWriter::new(File::create(dir.join(format!("{name}.mtx")))?);
            m.write_matrix_market(f)?;
        }
        Ok(())
    }
}

/// Cubic Lagrange weights on nodes `0, 1, 2, 3` at local coordinate `s`.
fn cubic_weights(s: f64) -> [f64; 4] {
    let (a, b, c, d) = (s, s - 1.0, s - 2.0, s - 3.0);
    [-b * c * d / 6.0, a * c * d / 2.0, -a * b * d / 2.0, a * b * c / 6.0]
}

/// One row of tri-cubic interpolation weights at `y`.
pub fn interpolation_row(grid: &BandGrid, y: &Vec3) -> Result<Vec<(usize, f64)>> {
    let base = grid.stencil_base(y);
    let rel = (y - grid.origin()) / grid.dx();
    let w: [[f64; 4]; 3] = [
        cubic_weights(rel.x - base[0] as f64),
        cubic_weights(rel.y - base[1] as f64),
        cubic_weights(rel.z - base[2] as f64),
    ];
    let mut row = Vec::with_capacity(64);
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                let node = [base[0] + a as i32, base[1] + b as i32, base[2] + c as i32];
                let j = grid.index(&node).ok_or(Error::StencilEscape(node))?;
                row.push((j, w[0][a] * w[1][b] * w[2][c]));
            }
        }
    }
    row.sort_by_key(|e| e.0);
    Ok(row)
}

/// Interpolation matrix whose row `i` evaluates the tri-cubic interpolant at `targets[i]`.
pub fn build_interpolation(grid: &BandGrid, targets: &[Vec3]) -> Result<CsrMatrix> {
    let rows = targets
        .iter()
        .map(|y| interpolation_row(grid, y))
        .collect::<Result<Vec<_>>>()?;
    Ok(CsrMatrix::from_rows(grid.len(), rows))
}

/// 7-point Laplacian. Rows at the outer edge of the band keep only the
/// neighbours that exist and are reported as incomplete.
pub fn build_laplacian(grid: &BandGrid) -> (CsrMatrix, Vec<bool>) {
    let h2 = 1.0 / (grid.dx() * grid.dx());
    let mut complete = Vec::with_capacity(grid.len());
    let rows = (0..grid.len())
        .map(|i| {
            let n = grid.node(i);
            let mut row = vec![(i, -6.0 * h2)];
            let mut all = true;
            for off in &FACE_OFFSETS {
                match grid.index(&[n[0] + off[0], n[1] + off[1], n[2] + off[2]]) {
                    Some(j) => row.push((j, h2)),
                    None => all = false,
                }
            }
            complete.push(all);
            row.sort_by_key(|e| e.0);
            row
        })
        .collect();
    (CsrMatrix::from_rows(grid.len(), rows), complete)
}

/// `(cp - c̄p) / |cp - c̄p|` at exterior points.
pub fn approximate_conormal(_grid: &BandGrid, class: &Classification) -> Vec<Option<ConormalEstimate>> {
    class
        .iter()
        .map(|p| match p.kind {
            PointKind::Interior => None,
            PointKind::Exterior => Some(conormal_estimate(&p.cp, &p.cpbar)),
        })
        .collect()
}

/// `(cp - c̄p) / |cp - c̄p|`, or `Degenerate` when the two points nearly coincide.
pub fn conormal_estimate(cp: &Vec3, cpbar: &Vec3) -> ConormalEstimate {
    let diff = cp - cpbar;
    let len = diff.norm();
    if len < CONORMAL_DEGENERACY_THRESHOLD {
        ConormalEstimate::Degenerate
    } else {
        ConormalEstimate::Unit(diff / len)
    }
}

/// Exact outward conormal at `cp(x_i)` for exterior points.
pub fn analytic_conormal(surface: &Surface, class: &Classification) -> Result<Vec<Option<ConormalEstimate>>> {
    class
        .iter()
        .map(|p| match p.kind {
            PointKind::Interior => Ok(None),
            PointKind::Exterior => Ok(Some(ConormalEstimate::Unit(surface.analytic_frame(&p.cp)?.conormal()?))),
        })
        .collect()
}

/// Diagonal `D_ii = 2 χ_E(x_i) ⟨x_i - cp(x_i), n_i⟩`; degenerate conormals give zero.
pub fn build_boundary_diagonal(
    grid: &BandGrid,
    class: &Classification,
    conormal: &[Option<ConormalEstimate>],
) -> CsrMatrix {
    let diag: Vec<f64> = (0..grid.len())
        .map(|i| match (class.kind(i), conormal[i]) {
            (PointKind::Exterior, Some(ConormalEstimate::Unit(n))) => 2.0 * (grid.position(i) - class.info(i).cp).dot(&n),
            _ => 0.0,
        })
        .collect();
    CsrMatrix::diagonal(&diag)
}
