//! Robin problem on the unit hemisphere with a known solution, solved on a
//! sequence of grids. Prints the error table and observed orders.
//!
//! ```text
//! cargo run --release --example poisson_convergence [-- 0.1 0.05 0.025]
//! ```

use cpband::band::BandGrid;
use cpband::elliptic::{solve_robin, surface_error};
use cpband::geometry::Surface;
use cpband::linalg::SolveMethod;
use cpband::manufactured;
use cpband::operators::TubeOperators;

fn main() -> cpband::Result<()> {
    let mut dxs: Vec<f64> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    if dxs.is_empty() {
        dxs = vec![0.1, 0.05, 0.025];
    }
    let surface = Surface::upper_hemisphere(1.0)?;
    let problem = manufactured::robin_problem(1.0);
    println!("{:>8} {:>9} {:>12} {:>7} {:>6} {:>8}", "dx", "points", "error", "order", "iters", "seconds");
    let mut prev: Option<(f64, f64)> = None;
    for dx in dxs {
        let start = std::time::Instant::now();
        let (grid, class) = BandGrid::build(&surface, dx)?;
        let ops = TubeOperators::build(&grid, &class)?;
        let rep = solve_robin(&ops, &class, &problem, SolveMethod::Auto)?;
        let err = surface_error(&rep.solution, manufactured::exact, &ops, &class);
        let order = prev.map(|(pdx, perr)| (perr / err).ln() / (pdx / dx).ln());
        println!(
            "{:>8} {:>9} {:>12.4e} {:>7} {:>6} {:>8.1}",
            dx,
            grid.len(),
            err,
            order.map(|o| format!("{o:.3}")).unwrap_or_else(|| "-".into()),
            rep.iterations,
            start.elapsed().as_secs_f64()
        );
        prev = Some((dx, err));
    }
    Ok(())
}
