//! `wobble`: generate terrains, solve for a wobble-free table placement,
//! scan circle-footed tables and run seeded Monte Carlo campaigns.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use wobble_core::WobbleError;

#[derive(Parser, Debug)]
#[command(name = "wobble", version, about = "Find wobble-free placements of a four-legged table on uneven ground")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a seeded Gaussian-bump terrain with a bounded slope.
    GenTerrain(GenArgs),
    /// Parse a terrain file and report its slope bound.
    Check(CheckArgs),
    /// Run one motion and refine the equilibrium.
    Solve(SolveArgs),
    /// Scan a circle-footed table turned in place.
    Scan(ScanArgs),
    /// Solve many generated terrains.
    Montecarlo(MonteCarloArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum MotionArg {
    /// March along the sphere/ground curve.
    Gamma,
    /// Rotate about foot 2, then translate.
    Rt,
}

#[derive(Args, Debug)]
struct GenArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Target slope bound, degrees.
    #[arg(long, default_value_t = 10.0)]
    theta: f64,
    #[arg(long, default_value_t = 20)]
    bumps: usize,
    /// Output file; the terrain goes to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CheckArgs {
    #[arg(long)]
    terrain: PathBuf,
}

#[derive(Args, Debug, Clone)]
struct TableArgs {
    /// Square table side.
    #[arg(long, conflicts_with = "circle")]
    side: Option<f64>,
    /// Radius of the circle carrying the feet.
    #[arg(long, requires = "angles")]
    circle: Option<f64>,
    /// Foot azimuths on the circle, degrees, counterclockwise.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, requires = "circle")]
    angles: Option<Vec<f64>>,
    /// Table center X,Y.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "0,0")]
    center: Vec<f64>,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[arg(long)]
    terrain: PathBuf,
    #[command(flatten)]
    table: TableArgs,
    /// Initial direction of edge 1-2, degrees.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    yaw: f64,
    #[arg(long, value_enum, default_value = "gamma")]
    motion: MotionArg,
    /// Motion step, degrees.
    #[arg(long, default_value_t = 0.25)]
    step: f64,
    /// Run beyond the certified slope range, recording warnings.
    #[arg(long = "override")]
    override_: bool,
    /// Trace CSV.
    #[arg(long, default_value = "trace.csv")]
    out: PathBuf,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ScanArgs {
    #[arg(long)]
    terrain: PathBuf,
    #[command(flatten)]
    table: TableArgs,
    /// Number of table angles (power of two, at least 256).
    #[arg(long, default_value_t = 4096)]
    samples: usize,
    /// Slope levels for a distortion scaling study, degrees.
    #[arg(long, value_delimiter = ',')]
    levels: Option<Vec<f64>>,
    /// Scan CSV.
    #[arg(long, default_value = "scan.csv")]
    out: PathBuf,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct MonteCarloArgs {
    /// Number of runs.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    n: u64,
    /// Master seed.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Target slope bound, degrees.
    #[arg(long, default_value_t = 10.0)]
    theta: f64,
    #[arg(long, value_enum, default_value = "gamma")]
    motion: MotionArg,
    #[arg(long, default_value_t = 20)]
    bumps: usize,
    #[arg(long, default_value_t = 1.0)]
    side: f64,
    #[arg(long, default_value_t = 0.25)]
    step: f64,
    #[arg(long = "override")]
    override_: bool,
    /// Campaign CSV.
    #[arg(long, default_value = "campaign.csv")]
    out: PathBuf,
    #[arg(long)]
    report: Option<PathBuf>,
}

const EXIT_NOT_FOUND: u8 = 2;
const EXIT_CONDITION: u8 = 3;
const EXIT_FAILURE: u8 = 4;
const EXIT_USAGE: u8 = 64;

fn exit_code(e: &WobbleError) -> u8 {
    match e.root_cause() {
        WobbleError::ConditionViolation { .. } | WobbleError::BlockedMotion(_) | WobbleError::GeometryViolation(_) => {
            EXIT_CONDITION
        }
        WobbleError::Validation(_) => EXIT_USAGE,
        _ => EXIT_FAILURE,
    }
}

#[cfg(feature = "parallel")]
fn configure_threads() -> Result<(), WobbleError> {
    let Ok(v) = std::env::var("WOBBLE_THREADS") else { return Ok(()) };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| WobbleError::Validation(format!("WOBBLE_THREADS must be a positive integer, got `{v}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| WobbleError::Validation(e.to_string()))
}

#[cfg(not(feature = "parallel"))]
fn configure_threads() -> Result<(), WobbleError> {
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(EXIT_USAGE);
    }
    let result = match cli.command {
        Command::GenTerrain(a) => commands::gen_terrain(&a),
        Command::Check(a) => commands::check(&a),
        Command::Solve(a) => commands::solve(&a),
        Command::Scan(a) => commands::scan(&a),
        Command::Montecarlo(a) => commands::montecarlo(&a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
