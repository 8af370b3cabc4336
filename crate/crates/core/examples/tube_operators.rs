//! Assembles E, Ē, L and D on a hemisphere band and checks a few of their
//! defining properties. Pass a directory to also dump them in Matrix Market format.
//!
//! ```text
//! cargo run --release --example tube_operators [-- out/matrices]
//! ```

use std::path::PathBuf;

use cpband::band::BandGrid;
use cpband::geometry::Surface;
use cpband::operators::{ConormalEstimate, TubeOperators};
use cpband::sparse::norm_inf;

fn main() -> cpband::Result<()> {
    let surface = Surface::upper_hemisphere(1.0)?;
    let (grid, class) = BandGrid::build(&surface, 0.1)?;
    let ops = TubeOperators::build(&grid, &class)?;
    println!("points {}, exterior {}, gamma {}", grid.len(), class.exterior_count(), ops.gamma);
    println!("nnz: E {}, Ebar {}, L {}", ops.e.nnz(), ops.ebar.nnz(), ops.lap.nnz());

    let ones = vec![1.0; grid.len()];
    let row_sum_dev = ops.e.mul_vec(&ones).iter().map(|s| (s - 1.0).abs()).fold(0.0, f64::max);
    println!("max |row sum of E - 1| = {row_sum_dev:.2e}");
    println!("|L 1|_inf = {:.2e}", norm_inf(&ops.lap.mul_vec(&ones)));

    let v: Vec<f64> = grid.positions().map(|x| (2.0 * x.x).sin() + x.y * x.z).collect();
    let ev = ops.e.mul_vec(&v);
    let eev = ops.e.mul_vec(&ev);
    let idem = ev.iter().zip(&eev).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    println!("|E(Ev) - Ev|_inf = {idem:.2e}");

    let degenerate = ops
        .conormal
        .iter()
        .filter(|c| matches!(c, Some(ConormalEstimate::Degenerate)))
        .count();
    let dmax = ops.d_diag().iter().fold(0.0f64, |m, d| m.max(d.abs()));
    println!("degenerate conormals {degenerate}, max |D_ii| = {dmax:.4} (bandwidth {:.4})", grid.bandwidth());

    if let Some(dir) = std::env::args().nth(1) {
        ops.dump_matrix_market(&PathBuf::from(&dir))?;
        println!("wrote E.mtx, Ebar.mtx, L.mtx, D.mtx to {dir}");
    }
    Ok(())
}
