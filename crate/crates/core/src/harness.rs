//! The four experiments behind the `cpband` binary, writing CSV artifacts into the output directory.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::band::{BandGrid, Classification};
use crate::config::{Experiment, FluxKind, RunConfig, SurfaceKind};
use crate::elliptic::{solve_nonlinear, solve_robin, surface_error};
use crate::error::{Error, Result};
use crate::manufactured;
use crate::operators::TubeOperators;
use crate::reaction_diffusion::{init_state, near_surface_mask, run as run_gray_scott, GrayScottStepper, RunOutput};
use crate::steklov::{solve_steklov, EigenReport};

/// Formats a float with 17 significant digits.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    std::fs::create_dir_all(dir)?;
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

/// `x,y,z,<columns>` for band points within `dx` of the surface.
pub fn write_point_cloud(
    path: &Path,
    grid: &BandGrid,
    class: &Classification,
    header: &[&str],
    columns: &[&[f64]],
) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "x,y,z,{}", header.join(","))?;
    for (i, p) in class.iter().enumerate() {
        if p.distance > grid.dx() {
            continue;
        }
        let x = grid.position(i);
        let mut line = format!("{},{},{}", fmt17(x.x), fmt17(x.y), fmt17(x.z));
        for c in columns {
            line.push(',');
            line.push_str(&fmt17(c[i]));
        }
        writeln!(w, "{line}")?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceRow {
    pub dx: f64,
    pub points: usize,
    pub error: f64,
    /// `log(e_prev / e) / log(dx_prev / dx)`; absent on the first row.
    pub order: Option<f64>,
    pub residual: f64,
    pub iterations: usize,
}

fn check_manufactured_surface(cfg: &RunConfig) -> Result<()> {
    if cfg.surface != SurfaceKind::Hemisphere || cfg.radius != 1.0 {
        return Err(Error::Config(
            "the manufactured Poisson problem is defined on the unit hemisphere only".into(),
        ));
    }
    Ok(())
}

fn build(cfg: &RunConfig, dx: f64) -> Result<(BandGrid, Classification, TubeOperators)> {
    let surface = cfg.surface()?;
    let (grid, class) = BandGrid::build(&surface, dx)?;
    let ops = TubeOperators::build(&grid, &class)?;
    if cfg.dump_matrices {
        ops.dump_matrix_market(&cfg.out.join(format!("matrices_dx{dx}")))?;
    }
    Ok((grid, class, ops))
}

/// Solves the manufactured hemisphere problem on one grid.
pub fn poisson_row(cfg: &RunConfig, dx: f64) -> Result<(ConvergenceRow, BandGrid, Classification, Vec<f64>)> {
    check_manufactured_surface(cfg)?;
    let (grid, class, ops) = build(cfg, dx)?;
    let rep = match cfg.flux {
        FluxKind::Robin => solve_robin(&ops, &class, &manufactured::robin_problem(cfg.kappa), cfg.solver)?,
        FluxKind::Quadratic => {
            // Newton from zero lands on a second solution of this problem; start from the Robin one
            let seed = solve_robin(&ops, &class, &manufactured::robin_problem(1.0), cfg.solver)?.solution;
            solve_nonlinear(&ops, &class, &manufactured::quadratic_flux_problem(), Some(&seed))?
        }
    };
    let error = surface_error(&rep.solution, manufactured::exact, &ops, &class);
    let row = ConvergenceRow {
        dx,
        points: grid.len(),
        error,
        order: None,
        residual: rep.residual_norm,
        iterations: rep.iterations,
    };
    Ok((row, grid, class, rep.solution))
}

fn write_table(dir: &Path, rows: &[ConvergenceRow]) -> Result<()> {
    let mut w = create(dir, "table.csv")?;
    writeln!(w, "dx,points,error,order,residual,iterations")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            fmt17(r.dx),
            r.points,
            fmt17(r.error),
            r.order.map(fmt17).unwrap_or_default(),
            fmt17(r.residual),
            r.iterations
        )?;
    }
    w.flush()?;
    Ok(())
}

fn print_table(log: &mut dyn Write, rows: &[ConvergenceRow]) -> Result<()> {
    writeln!(log, "{:>10} {:>12} {:>14} {:>8}", "dx", "grid points", "rel. error", "order")?;
    for r in rows {
        let order = r.order.map(|o| format!("{o:.4}")).unwrap_or_else(|| "-".into());
        writeln!(log, "{:>10} {:>12} {:>14.4e} {:>8}", r.dx, r.points, r.error, order)?;
    }
    Ok(())
}

pub fn cmd_convergence(cfg: &RunConfig, log: &mut dyn Write) -> Result<Vec<ConvergenceRow>> {
    check_manufactured_surface(cfg)?;
    let mut rows: Vec<ConvergenceRow> = Vec::new();
    for &dx in &cfg.dx {
        let (mut row, ..) = poisson_row(cfg, dx)?;
        if let Some(prev) = rows.last() {
            row.order = Some((prev.error / row.error).ln() / (prev.dx / row.dx).ln());
        }
        rows.push(row);
    }
    write_table(&cfg.out, &rows)?;
    print_table(log, &rows)?;
    Ok(rows)
}

pub fn cmd_poisson(cfg: &RunConfig, log: &mut dyn Write) -> Result<ConvergenceRow> {
    let (row, grid, class, u) = poisson_row(cfg, cfg.dx[0])?;
    write_table(&cfg.out, std::slice::from_ref(&row))?;
    write_point_cloud(&cfg.out.join("solution.csv"), &grid, &class, &["u"], &[&u])?;
    print_table(log, std::slice::from_ref(&row))?;
    Ok(row)
}

pub fn cmd_steklov(cfg: &RunConfig, log: &mut dyn Write) -> Result<EigenReport> {
    let dx = cfg.dx[0];
    let (grid, class, ops) = build(cfg, dx)?;
    writeln!(log, "{} dx={dx}: {} grid points", cfg.surface()?.name(), grid.len())?;
    let rep = solve_steklov(&ops, cfg.eigenvalues, cfg.shift)?;
    let mut w = create(&cfg.out, "eigs.csv")?;
    writeln!(w, "index,sigma,residual")?;
    for (i, (s, r)) in rep.eigenvalues.iter().zip(&rep.residuals).enumerate() {
        writeln!(w, "{i},{},{}", fmt17(*s), fmt17(*r))?;
        writeln!(log, "sigma_{i} = {s:.6} (residual {r:.2e})")?;
    }
    w.flush()?;
    for (i, phi) in rep.eigenvectors.iter().enumerate() {
        write_point_cloud(&cfg.out.join(format!("eigenfunction_{i}.csv")), &grid, &class, &["phi"], &[phi])?;
    }
    Ok(rep)
}

pub fn cmd_grayscott(cfg: &RunConfig, log: &mut dyn Write) -> Result<RunOutput> {
    let dx = cfg.dx[0];
    let surface = cfg.surface()?;
    let (grid, class, ops) = build(cfg, dx)?;
    let params = cfg.gray_scott();
    writeln!(
        log,
        "{} dx={dx}: {} grid points, kappa={}, T={}",
        surface.name(),
        grid.len(),
        params.kappa,
        params.final_time
    )?;
    let stepper = GrayScottStepper::new(params, &ops, &class)?;
    let initial = init_state(&surface, &class, cfg.seed, &cfg.perturbation())?;
    let mask = near_surface_mask(&class, dx);
    let report_every = (params.steps() / 10).max(1);
    let out = run_gray_scott(&stepper, initial, &mask, &cfg.snapshot_times(), |s| {
        if s.step % report_every == 0 {
            let _ = writeln!(log, "t = {}", s.time);
        }
    })?;
    std::fs::create_dir_all(&cfg.out)?;
    for s in &out.snapshots {
        write_point_cloud(
            &cfg.out.join(format!("snapshot_{}.csv", s.time)),
            &grid,
            &class,
            &["u", "v"],
            &[&s.u, &s.v],
        )?;
    }
    let mut w = create(&cfg.out, "summary.csv")?;
    writeln!(w, "time,variance_u,variance_v")?;
    for r in &out.summary {
        writeln!(w, "{},{},{}", fmt17(r.time), fmt17(r.variance_u), fmt17(r.variance_v))?;
    }
    w.flush()?;
    Ok(out)
}

/// Runs the configured experiment.
pub fn run(cfg: &RunConfig, log: &mut dyn Write) -> Result<()> {
    match cfg.experiment {
        Experiment::Convergence => cmd_convergence(cfg, log).map(drop),
        Experiment::Poisson => cmd_poisson(cfg, log).map(drop),
        Experiment::Steklov => cmd_steklov(cfg, log).map(drop),
        Experiment::GrayScott => cmd_grayscott(cfg, log).map(drop),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_significant_digits() {
        assert_eq!(fmt17(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt17(-2.5), "-2.5000000000000000e0");
        assert_eq!(fmt17(0.1).parse::<f64>().unwrap(), 0.1);
    }
}
