//! `deepfcnn` command-line driver.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 training did not
//! converge, 3 a run that should have been stable blew up.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "deepfcnn",
    version,
    about = "Reaction-diffusion solvers and deep five-point stencil networks"
)]
#[command(args_override_self = true)]
struct Cli {
    /// key=value file with default flag values
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train a network on one pair of snapshots.
    Train(TrainArgs),
    /// Roll out the finite-difference solver or a trained network.
    Simulate(SimulateArgs),
    /// Relative L2 error table over equations and initial shapes.
    Table1(TableArgs),
    /// Allen–Cahn energy and min/max series from a random initial field.
    Energy(EnergyArgs),
    /// Write every benchmark initial shape as FSN1 and PGM.
    Shapes(ShapesArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Fdm,
    Fcnn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Init {
    Uniform,
    Fdm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Target {
    Coarse,
    Fine,
}

#[derive(Debug, Args)]
struct GridArgs {
    /// Grid points per side on the unit square
    #[arg(long, default_value_t = 100)]
    n: usize,
}

#[derive(Debug, Args)]
struct EquationArgs {
    /// heat, fisher or ac
    #[arg(long)]
    eq: Option<String>,
    /// Diffusion coefficient (defaults to the equation's benchmark value)
    #[arg(long)]
    alpha: Option<f64>,
    /// Reaction coefficient (defaults to the equation's benchmark value)
    #[arg(long)]
    beta: Option<f64>,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[command(flatten)]
    equation: EquationArgs,
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "model.fcn1")]
    out: PathBuf,
    /// Loss log; defaults to train_log.csv next to the model
    #[arg(long)]
    log: Option<PathBuf>,
    #[arg(long)]
    poly_order: Option<usize>,
    #[arg(long, default_value_t = 3)]
    depth: usize,
    #[arg(long, default_value_t = 3)]
    k: usize,
    #[arg(long, default_value_t = 2e-5)]
    dt_s: f64,
    /// Defaults to k·dt_s
    #[arg(long)]
    dt_l: Option<f64>,
    #[arg(long, default_value_t = 1e-8)]
    epsilon: f64,
    #[arg(long, default_value_t = 200_000)]
    max_iters: usize,
    #[arg(long, default_value_t = 1e-3)]
    lr: f64,
    #[arg(long, value_enum, default_value_t = Init::Uniform)]
    init: Init,
    /// Generate the target snapshot with dt_s (coarse) or dt_s/100 (fine)
    #[arg(long, value_enum, default_value_t = Target::Coarse)]
    target: Target,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long, value_enum, default_value_t = Method::Fdm)]
    method: Method,
    #[command(flatten)]
    equation: EquationArgs,
    #[command(flatten)]
    grid: GridArgs,
    /// Time step; defaults to 2e-5 for fdm and 6e-5 for fcnn
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long, default_value = "circle")]
    shape: String,
    /// Start from an FSN1 snapshot instead of a named shape
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, default_value_t = 0.006)]
    t: f64,
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long, default_value = "sim_out")]
    out: PathBuf,
    #[arg(long, default_value_t = 1)]
    record_every: usize,
    /// Map PGM grey levels from [-1, 1] instead of each frame's range
    #[arg(long)]
    pgm_fixed: bool,
}

#[derive(Debug, Args)]
struct TableArgs {
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long)]
    model_heat: Option<PathBuf>,
    #[arg(long)]
    model_fisher: Option<PathBuf>,
    #[arg(long)]
    model_ac: Option<PathBuf>,
    /// Comma-separated equations
    #[arg(long, default_value = "heat,fisher,ac")]
    eqs: String,
    /// Comma-separated shapes
    #[arg(long, default_value = "sierra,star,circle,torus,maze,cells")]
    shapes: String,
    #[arg(long, default_value_t = 2e-5)]
    dt_s: f64,
    #[arg(long, default_value_t = 6e-5)]
    dt_l: f64,
    #[arg(long, default_value = "table1.csv")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct EnergyArgs {
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 2e-5)]
    dt_s: f64,
    #[arg(long, default_value_t = 6e-5)]
    dt_l: f64,
    #[arg(long, default_value_t = 0.006)]
    t: f64,
    /// Interface width in cells for the energy's ε
    #[arg(long, default_value_t = 5)]
    m: u32,
    /// Trained Allen–Cahn network to report alongside the solver
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long, default_value = "energy_out")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ShapesArgs {
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long, default_value_t = 0.012)]
    rho: f64,
    #[arg(long, default_value = "shapes")]
    out: PathBuf,
}

fn main() -> ExitCode {
    let args = match config::expand_config(std::env::args().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(commands::EXIT_USAGE);
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(commands::EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Train(a) => commands::train(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::Table1(a) => commands::table1(a),
        Command::Energy(a) => commands::energy(a),
        Command::Shapes(a) => commands::shapes(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(commands::EXIT_USAGE)
        }
    }
}
