//! Builds narrow bands around the shipped surfaces and prints their sizes.
//!
//! ```text
//! cargo run --release --example band_sizes
//! ```

use std::time::Instant;

use cpband::band::BandGrid;
use cpband::geometry::Surface;

fn main() -> cpband::Result<()> {
    let cases = [
        (Surface::upper_hemisphere(1.0)?, [0.1, 0.05, 0.025]),
        (Surface::mobius_strip(1.0, 0.35)?, [0.1, 0.05, 0.025]),
    ];
    println!("{:>12} {:>8} {:>10} {:>10} {:>9}", "surface", "dx", "points", "exterior", "seconds");
    for (surface, dxs) in cases {
        for dx in dxs {
            let start = Instant::now();
            let (grid, class) = BandGrid::build(&surface, dx)?;
            println!(
                "{:>12} {:>8} {:>10} {:>10} {:>9.2}",
                surface.name(),
                dx,
                grid.len(),
                class.exterior_count(),
                start.elapsed().as_secs_f64()
            );
        }
    }
    Ok(())
}
