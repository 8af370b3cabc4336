//! Hemisphere problem with the nonlinear boundary flux `∂_n u = g̃ - u²`,
//! solved by Newton iteration on the embedded system.
//!
//! ```text
//! cargo run --release --example nonlinear_flux
//! ```

use cpband::band::BandGrid;
use cpband::elliptic::{solve_nonlinear, surface_error};
use cpband::geometry::Surface;
use cpband::manufactured;
use cpband::operators::TubeOperators;

fn main() -> cpband::Result<()> {
    let surface = Surface::upper_hemisphere(1.0)?;
    let problem = manufactured::quadratic_flux_problem();
    for dx in [0.1, 0.05] {
        let (grid, class) = BandGrid::build(&surface, dx)?;
        let ops = TubeOperators::build(&grid, &class)?;
        let rep = solve_nonlinear(&ops, &class, &problem, None)?;
        let err = surface_error(&rep.solution, manufactured::exact, &ops, &class);
        println!(
            "dx {dx}: {} Newton iterations, residual {:.2e}, error {err:.4e}",
            rep.iterations, rep.residual_norm
        );
    }
    Ok(())
}
