//! Plain-text run configuration: one `key = value` per line, `#` starts a comment.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::geometry::Surface;
use crate::linalg::SolveMethod;
use crate::reaction_diffusion::{GrayScottParams, Perturbation};
use crate::steklov::DEFAULT_SHIFT;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Experiment {
    Poisson,
    Steklov,
    GrayScott,
    Convergence,
}

impl FromStr for Experiment {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "poisson" => Ok(Self::Poisson),
            "steklov" => Ok(Self::Steklov),
            "grayscott" => Ok(Self::GrayScott),
            "convergence" => Ok(Self::Convergence),
            _ => Err(Error::Config(format!("unknown experiment `{s}`"))),
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Poisson => "poisson",
            Self::Steklov => "steklov",
            Self::GrayScott => "grayscott",
            Self::Convergence => "convergence",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SurfaceKind {
    Hemisphere,
    Sphere,
    Mobius,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FluxKind {
    /// `∂_n u + κ u = g`.
    Robin,
    /// `∂_n u = g̃ - u²`.
    Quadratic,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub surface: SurfaceKind,
    pub radius: f64,
    pub center_radius: f64,
    pub half_width: f64,
    pub dx: Vec<f64>,
    pub kappa: f64,
    pub flux: FluxKind,
    pub solver: SolveMethod,
    pub eigenvalues: usize,
    pub shift: f64,
    pub feed: f64,
    pub kill: f64,
    pub du: f64,
    pub dv: f64,
    /// `None` selects the preset for the chosen `kappa`.
    pub final_time: Option<f64>,
    pub dt: f64,
    pub patches: usize,
    pub patch_radius: f64,
    pub snapshots: Vec<f64>,
    pub seed: u64,
    pub out: PathBuf,
    pub dump_matrices: bool,
}

impl RunConfig {
    /// Defaults for one experiment.
    pub fn preset(experiment: Experiment) -> Self {
        let gs = GrayScottParams::standard(0.0);
        let p = Perturbation::default();
        let (surface, dx) = match experiment {
            Experiment::Poisson => (SurfaceKind::Hemisphere, vec![0.1]),
            Experiment::Convergence => (SurfaceKind::Hemisphere, vec![0.1, 0.05, 0.025]),
            Experiment::Steklov => (SurfaceKind::Hemisphere, vec![0.05]),
            Experiment::GrayScott => (SurfaceKind::Mobius, vec![0.05]),
        };
        Self {
            experiment,
            surface,
            radius: 1.0,
            center_radius: 1.0,
            half_width: 0.35,
            dx,
            kappa: if experiment == Experiment::GrayScott { 0.0 } else { 1.0 },
            flux: FluxKind::Robin,
            solver: SolveMethod::Auto,
            eigenvalues: 7,
            shift: DEFAULT_SHIFT,
            feed: gs.feed,
            kill: gs.kill,
            du: gs.du,
            dv: gs.dv,
            final_time: None,
            dt: gs.dt,
            patches: p.count,
            patch_radius: p.radius,
            snapshots: Vec::new(),
            seed: 42,
            out: PathBuf::from("out"),
            dump_matrices: false,
        }
    }

    /// Reads `path` on top of the preset for `experiment`.
    pub fn load(path: &Path, experiment: Experiment) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text, experiment)
    }

    pub fn parse(text: &str, experiment: Experiment) -> Result<Self> {
        let mut cfg = Self::preset(experiment);
        let mut seen = std::collections::HashSet::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| Error::Config(format!("line {}: {msg}", lineno + 1));
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected `key = value`, got `{line}`")))?;
            let (key, value) = (key.trim(), value.trim());
            if !seen.insert(key.to_string()) {
                return Err(err(format!("duplicate key `{key}`")));
            }
            cfg.set(key, value).map_err(|e| match e {
                Error::Config(m) => err(m),
                other => other,
            })?;
        }
        if !seen.contains("dv") && seen.contains("du") {
            cfg.dv = 0.4 * cfg.du;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Applies a single `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "experiment" => {
                let e: Experiment = value.parse()?;
                if e != self.experiment {
                    return Err(Error::Config(format!(
                        "config is for `{e}` but the `{}` command was run",
                        self.experiment
                    )));
                }
            }
            "surface" => {
                self.surface = match value {
                    "hemisphere" => SurfaceKind::Hemisphere,
                    "sphere" => SurfaceKind::Sphere,
                    "mobius" => SurfaceKind::Mobius,
                    _ => return Err(Error::Config(format!("unknown surface `{value}`"))),
                }
            }
            "radius" => self.radius = num(key, value)?,
            "center_radius" => self.center_radius = num(key, value)?,
            "half_width" => self.half_width = num(key, value)?,
            "dx" => self.dx = list(key, value)?,
            "kappa" => self.kappa = num(key, value)?,
            "flux" => {
                self.flux = match value {
                    "robin" => FluxKind::Robin,
                    "quadratic" => FluxKind::Quadratic,
                    _ => return Err(Error::Config(format!("unknown flux `{value}`"))),
                }
            }
            "solver" => {
                self.solver = match value {
                    "direct" => SolveMethod::Direct,
                    "iterative" => SolveMethod::Iterative,
                    "auto" => SolveMethod::Auto,
                    _ => return Err(Error::Config(format!("unknown solver `{value}`"))),
                }
            }
            "eigenvalues" => self.eigenvalues = num(key, value)?,
            "shift" => self.shift = num(key, value)?,
            "feed" => self.feed = num(key, value)?,
            "kill" => self.kill = num(key, value)?,
            "du" => self.du = num(key, value)?,
            "dv" => self.dv = num(key, value)?,
            "final_time" => self.final_time = Some(num(key, value)?),
            "dt" => self.dt = num(key, value)?,
            "patches" => self.patches = num(key, value)?,
            "patch_radius" => self.patch_radius = num(key, value)?,
            "snapshots" => self.snapshots = if value.is_empty() { Vec::new() } else { list(key, value)? },
            "seed" => self.seed = num(key, value)?,
            "out" => self.out = PathBuf::from(value),
            "dump_matrices" => self.dump_matrices = num(key, value)?,
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.dx.is_empty() || self.dx.iter().any(|d| !(*d > 0.0 && d.is_finite())) {
            return Err(Error::Config(format!("dx must be a non-empty list of positive values, got {:?}", self.dx)));
        }
        if self.eigenvalues == 0 {
            return Err(Error::Config("eigenvalues must be at least 1".into()));
        }
        self.surface()?;
        self.gray_scott().validate()
    }

    pub fn surface(&self) -> Result<Surface> {
        match self.surface {
            SurfaceKind::Hemisphere => Surface::upper_hemisphere(self.radius),
            SurfaceKind::Sphere => Surface::sphere(self.radius),
            SurfaceKind::Mobius => Surface::mobius_strip(self.center_radius, self.half_width),
        }
    }

    pub fn gray_scott(&self) -> GrayScottParams {
        let preset = GrayScottParams::standard(self.kappa);
        GrayScottParams {
            feed: self.feed,
            kill: self.kill,
            du: self.du,
            dv: self.dv,
            kappa: self.kappa,
            final_time: self.final_time.unwrap_or(preset.final_time),
            dt: self.dt,
        }
    }

    pub fn perturbation(&self) -> Perturbation {
        Perturbation {
            count: self.patches,
            radius: self.patch_radius,
            ..Perturbation::default()
        }
    }

    /// Snapshot times, defaulting to five evenly spaced times including both ends.
    pub fn snapshot_times(&self) -> Vec<f64> {
        if !self.snapshots.is_empty() {
            return self.snapshots.clone();
        }
        let t = self.gray_scott().final_time;
        (0..5).map(|i| t * i as f64 / 4.0).collect()
    }
}

fn num<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: fmt::Display,
{
    value
        .parse()
        .map_err(|e| Error::Config(format!("invalid value `{value}` for `{key}`: {e}")))
}

fn list(key: &str, value: &str) -> Result<Vec<f64>> {
    value.split(',').map(|v| num(key, v.trim())).collect()
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
}

/// The resolved configuration in the same `key = value` format it is read from.
impl fmt::Display for RunConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let surface = match self.surface {
            SurfaceKind::Hemisphere => "hemisphere",
            SurfaceKind::Sphere => "sphere",
            SurfaceKind::Mobius => "mobius",
        };
        let solver = match self.solver {
            SolveMethod::Direct => "direct",
            SolveMethod::Iterative => "iterative",
            SolveMethod::Auto => "auto",
        };
        let flux = match self.flux {
            FluxKind::Robin => "robin",
            FluxKind::Quadratic => "quadratic",
        };
        let gs = self.gray_scott();
        writeln!(f, "experiment = {}", self.experiment)?;
        writeln!(f, "surface = {surface}")?;
        match self.surface {
            SurfaceKind::Mobius => {
                writeln!(f, "center_radius = {}", self.center_radius)?;
                writeln!(f, "half_width = {}", self.half_width)?;
            }
            _ => writeln!(f, "radius = {}", self.radius)?,
        }
        writeln!(f, "dx = {}", join(&self.dx))?;
        writeln!(f, "kappa = {}", self.kappa)?;
        writeln!(f, "flux = {flux}")?;
        writeln!(f, "solver = {solver}")?;
        writeln!(f, "eigenvalues = {}", self.eigenvalues)?;
        writeln!(f, "shift = {}", self.shift)?;
        writeln!(f, "feed = {}", gs.feed)?;
        writeln!(f, "kill = {}", gs.kill)?;
        writeln!(f, "du = {}", gs.du)?;
        writeln!(f, "dv = {}", gs.dv)?;
        writeln!(f, "final_time = {}", gs.final_time)?;
        writeln!(f, "dt = {}", gs.dt)?;
        writeln!(f, "patches = {}", self.patches)?;
        writeln!(f, "patch_radius = {}", self.patch_radius)?;
        writeln!(f, "snapshots = {}", join(&self.snapshot_times()))?;
        writeln!(f, "seed = {}", self.seed)?;
        writeln!(f, "out = {}", self.out.display())?;
        writeln!(f, "dump_matrices = {}", self.dump_matrices)
    }
}
