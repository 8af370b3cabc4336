//! Closest points, mirrored closest points and boundary frames on the two open surfaces.
//!
//! ```text
//! cargo run --release --example closest_points
//! ```

use cpband::geometry::{Surface, Vec3};

fn show(surface: &Surface, x: Vec3) -> cpband::Result<()> {
    let cp = surface.closest_point(&x)?;
    let cpbar = surface.modified_closest_point(&x)?;
    println!(
        "{:>10} x = ({:+.3}, {:+.3}, {:+.3})  cp = ({:+.6}, {:+.6}, {:+.6})  |x - cp| = {:.6}  boundary: {}",
        surface.name(),
        x.x,
        x.y,
        x.z,
        cp.point.x,
        cp.point.y,
        cp.point.z,
        cp.distance,
        cp.on_boundary
    );
    if cp.on_boundary {
        let frame = surface.analytic_frame(&cp.point)?;
        let n = frame.conormal()?;
        println!(
            "{:>10}   cpbar = ({:+.6}, {:+.6}, {:+.6})  conormal = ({:+.6}, {:+.6}, {:+.6})",
            "", cpbar.x, cpbar.y, cpbar.z, n.x, n.y, n.z
        );
    }
    Ok(())
}

fn main() -> cpband::Result<()> {
    let hemisphere = Surface::upper_hemisphere(1.0)?;
    for x in [Vec3::new(0.0, 0.0, 2.0), Vec3::new(1.1, 0.0, -0.1), Vec3::new(0.5, 0.5, -0.3)] {
        show(&hemisphere, x)?;
    }
    let strip = Surface::mobius_strip(1.0, 0.35)?;
    for x in [Vec3::new(1.1, 0.0, 0.0), Vec3::new(0.0, 1.2, 0.3), Vec3::new(-1.45, 0.1, 0.05)] {
        show(&strip, x)?;
    }
    // the axis is equidistant from the whole hemisphere
    match hemisphere.closest_point(&Vec3::zeros()) {
        Err(e) => println!("origin: {e}"),
        Ok(cp) => println!("origin: unexpected cp {:?}", cp.point),
    }
    Ok(())
}
