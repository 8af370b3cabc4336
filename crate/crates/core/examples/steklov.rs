//! Steklov eigenvalues of the unit hemisphere (which equal those of the unit
//! disk: 0, 1, 1, 2, 2, ...) or of a Möbius strip.
//!
//! ```text
//! cargo run --release --example steklov [-- hemisphere|mobius [dx]]
//! ```

use cpband::band::BandGrid;
use cpband::geometry::Surface;
use cpband::operators::TubeOperators;
use cpband::steklov::{solve_steklov, DEFAULT_SHIFT};

fn main() -> cpband::Result<()> {
    let mut args = std::env::args().skip(1);
    let surface = match args.next().as_deref() {
        Some("mobius") => Surface::mobius_strip(1.0, 0.35)?,
        _ => Surface::upper_hemisphere(1.0)?,
    };
    let dx: f64 = args.next().and_then(|a| a.parse().ok()).unwrap_or(0.1);
    let (grid, class) = BandGrid::build(&surface, dx)?;
    let ops = TubeOperators::build(&grid, &class)?;
    let start = std::time::Instant::now();
    let rep = solve_steklov(&ops, 7, DEFAULT_SHIFT)?;
    println!(
        "{} dx={dx}: {} points, {} operator applications, {:.1} s",
        surface.name(),
        grid.len(),
        rep.operator_applications,
        start.elapsed().as_secs_f64()
    );
    for (i, (s, r)) in rep.eigenvalues.iter().zip(&rep.residuals).enumerate() {
        println!("sigma_{i} = {s:>10.6}   residual {r:.1e}");
    }
    Ok(())
}
