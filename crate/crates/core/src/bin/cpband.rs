use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use cpband::config::{Experiment, RunConfig};
use cpband::harness;

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Command {
    Convergence,
    Steklov,
    Grayscott,
    Poisson,
}

/// Closest point method experiments on narrow-band grids.
#[derive(Debug, Parser)]
#[command(version)]
struct Args {
    command: Command,
    /// `key = value` configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Grid spacing, or a comma-separated list for `convergence`.
    #[arg(long)]
    dx: Option<String>,
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Write E, Ebar, L and D in Matrix Market format.
    #[arg(long)]
    dump_matrices: bool,
    /// Print the resolved configuration and exit.
    #[arg(long)]
    dry_run: bool,
}

fn resolve(args: &Args) -> cpband::Result<RunConfig> {
    let experiment = match args.command {
        Command::Convergence => Experiment::Convergence,
        Command::Steklov => Experiment::Steklov,
        Command::Grayscott => Experiment::GrayScott,
        Command::Poisson => Experiment::Poisson,
    };
    let mut cfg = RunConfig::load(&args.config, experiment)?;
    if let Some(dx) = &args.dx {
        cfg.set("dx", dx)?;
    }
    if let Some(k) = args.kappa {
        cfg.kappa = k;
    }
    if let Some(out) = &args.out {
        cfg.out = out.clone();
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    cfg.dump_matrices |= args.dump_matrices;
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let args = Args::parse();
    let result = resolve(&args).and_then(|cfg| {
        if args.dry_run {
            print!("{cfg}");
            Ok(())
        } else {
            harness::run(&cfg, &mut std::io::stdout())
        }
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
