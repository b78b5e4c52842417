//! Command-line front end: scenario loading, experiment dispatch and
//! manifest-stamped outputs.

mod commands;
mod output;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::{Error, Result};
use crate::grid::scenario::{GridSize, ScenarioFile, ScenarioSpec};

pub use output::{Output, MANIFEST};

#[derive(Debug, Parser)]
#[command(name = "idxray", version, about = "Attenuated X-ray transform identification experiments")]
pub struct Cli {
    /// Scenario JSON; the empty scenario when omitted.
    #[arg(long, global = true)]
    pub scenario: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "idxray-out")]
    pub out: PathBuf,
    /// Seed for random probes, overriding the scenario.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Square grid size, overriding the scenario.
    #[arg(long, global = true)]
    pub grid: Option<usize>,
    /// Iteration budget of iterative commands.
    #[arg(long, global = true)]
    pub steps: Option<usize>,
    /// Largest flow parameter for ray tracing.
    #[arg(long, global = true)]
    pub lmax: Option<f64>,
    /// Tolerance of the command's stopping rule or numerical guard.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// `X_a f` of the scenario.
    Forward,
    /// `δX_{a,f}(δa, δf)` of the scenario perturbations with a Taylor check.
    Linearize,
    /// The weights `w1`, `w2` and their determinant at one direction.
    Weights(WeightsArgs),
    /// Zero bicharacteristics from seed points.
    Rays(RaysArgs),
    /// Trapping verdict for the scenario region.
    Trap(TrapArgs),
    /// Radial `δf` with `δX_{0,f}(δa, δf) = 0`.
    RadialNull,
    /// Radial `f₀` with `X_a f = X_0 f₀`.
    EquivalentSource,
    /// Least-squares reconstruction on the scenario region.
    Reconstruct(ReconstructArgs),
    /// Smallest singular value and near-null vectors on the region.
    ProbeKernel(KernelArgs),
    /// Stability ratios over random and radial families, optionally the Hölder table.
    ProbeStability(StabilityArgs),
    /// Quick self-checks of the numerical building blocks.
    Verify,
}

#[derive(Debug, Args)]
pub struct WeightsArgs {
    /// Direction angle in degrees.
    #[arg(long, default_value_t = 0.0)]
    pub angle: f64,
}

#[derive(Debug, Args)]
pub struct RaysArgs {
    /// Seed point `x,y`; repeatable.
    #[arg(long = "from", value_parser = parse_point)]
    pub from: Vec<[f64; 2]>,
    /// RK4 step.
    #[arg(long, default_value_t = 1e-3)]
    pub step: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Expectation {
    Trapped,
    NonTrapping,
}

#[derive(Debug, Args)]
pub struct TrapArgs {
    /// Fail with exit code 4 unless the verdict matches.
    #[arg(long, value_enum)]
    pub expect: Option<Expectation>,
    #[arg(long, default_value_t = 200)]
    pub seeds: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub step: f64,
}

#[derive(Debug, Args)]
pub struct ReconstructArgs {
    /// Refuse to run unless the region is non-trapping.
    #[arg(long)]
    pub assume_non_trapping: bool,
    /// Sinogram header to invert instead of synthetic data from the perturbations.
    #[arg(long)]
    pub data: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct KernelArgs {
    #[arg(long, default_value_t = 4)]
    pub probes: usize,
    /// Radial trial modes added to the starting subspace.
    #[arg(long, default_value_t = 12)]
    pub hints: usize,
    /// Sobolev order of the data norm.
    #[arg(long, default_value_t = 1.5)]
    pub order: f64,
}

#[derive(Debug, Args)]
pub struct StabilityArgs {
    /// Refuse to run unless the region is non-trapping.
    #[arg(long)]
    pub assume_non_trapping: bool,
    /// Random pairs per oscillation scale.
    #[arg(long, default_value_t = 20)]
    pub samples: usize,
    #[arg(long, default_value_t = 8)]
    pub max_scale: usize,
    /// Sobolev order `s` of the field norm.
    #[arg(long, default_value_t = 0.0)]
    pub order: f64,
    /// Radius of the random wave packets.
    #[arg(long, default_value_t = 0.15)]
    pub radius: f64,
    /// Also tabulate the Hölder probe of the nonlinear map.
    #[arg(long)]
    pub holder: bool,
}

fn parse_point(s: &str) -> std::result::Result<[f64; 2], String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err(format!("expected `x,y`, got `{s}`"));
    }
    let x = parts[0].trim().parse::<f64>().map_err(|e| e.to_string())?;
    let y = parts[1].trim().parse::<f64>().map_err(|e| e.to_string())?;
    Ok([x, y])
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Forward => "forward",
            Command::Linearize => "linearize",
            Command::Weights(_) => "weights",
            Command::Rays(_) => "rays",
            Command::Trap(_) => "trap",
            Command::RadialNull => "radial-null",
            Command::EquivalentSource => "equivalent-source",
            Command::Reconstruct(_) => "reconstruct",
            Command::ProbeKernel(_) => "probe-kernel",
            Command::ProbeStability(_) => "probe-stability",
            Command::Verify => "verify",
        }
    }
}

/// 2 for schema errors, 3 for support-margin violations, 4 for failed
/// numerical guards, 1 otherwise.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Schema(_) => 2,
        Error::OutsideMargin { .. } => 3,
        Error::Guard(_) => 4,
        _ => 1,
    }
}

/// Loads the scenario and applies the command-line overrides.
pub fn load_scenario(cli: &Cli) -> Result<ScenarioSpec> {
    let mut file = match &cli.scenario {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Schema(format!("cannot read {}: {e}", path.display())))?;
            ScenarioSpec::from_json(&text)?.source
        }
        None => ScenarioFile::default(),
    };
    if let Some(n) = cli.grid {
        file.grid = GridSize { nx: n, ny: n };
    }
    if let Some(seed) = cli.seed {
        file.seed = seed;
    }
    ScenarioSpec::from_file(file)
}

/// Runs one command; the manifest is written whenever the command itself ran,
/// including runs that end in a failed guard.
pub fn run(cli: &Cli) -> Result<()> {
    let spec = load_scenario(cli)?;
    let mut out = Output::new(&cli.out)?;
    let guard = commands::dispatch(cli, &spec, &mut out)?;
    let status = if guard.is_some() { "guard-failed" } else { "ok" };
    out.finish(cli.command.name(), &spec, status)?;
    match guard {
        Some(msg) => Err(Error::Guard(msg)),
        None => Ok(()),
    }
}

/// Parses `args` (program name first), runs, reports errors on stderr and
/// returns the exit code.
pub fn run_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("idxray {}: {e}", cli.command.name());
            exit_code(&e)
        }
    }
}

pub fn main() -> i32 {
    run_args(std::env::args_os())
}
