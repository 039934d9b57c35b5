use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use morreylab::Error;

mod commands;

/// Discrete dyadic experiments on weighted Morrey spaces.
#[derive(Debug, Parser)]
#[command(name = "morreylab", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Weight-class diagnostics at several refinement depths.
    Diagnose(DiagnoseArgs),
    /// Run the experiment described by a TOML config.
    Run(RunArgs),
    /// Build a stopping-time family and a median decomposition.
    SparseDemo(SparseDemoArgs),
    /// Evaluate Morrey norms of a function file.
    Norm(NormArgs),
}

/// `--power α` or `--weight file.csv`.
#[derive(Debug, Clone, Args)]
#[group(multiple = false)]
pub struct WeightArgs {
    /// Power weight |x|^α.
    #[arg(long, allow_negative_numbers = true, value_name = "ALPHA")]
    pub power: Option<f64>,
    /// Weight densities in `cell_index,value` form.
    #[arg(long, value_name = "CSV")]
    pub weight: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct GridArgs {
    /// Spatial dimension (1 or 2).
    #[arg(long, default_value_t = 1)]
    pub dim: u32,
    /// The root cube has side 2^J.
    #[arg(long = "root-exponent", default_value_t = 1, allow_negative_numbers = true, value_name = "J")]
    pub root_exponent: i32,
}

#[derive(Debug, Args)]
pub struct DiagnoseArgs {
    #[command(flatten)]
    pub weight: WeightArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    #[arg(long, default_value_t = 4.0)]
    pub p: f64,
    #[arg(long, default_value_t = 2.0)]
    pub q: f64,
    /// Refinement depths; defaults to the file depth for a weight file.
    #[arg(long, value_delimiter = ',', value_name = "L,...")]
    pub levels: Vec<u32>,
    #[arg(long, default_value = "morreylab-out", value_name = "DIR")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    pub config: PathBuf,
    /// Overrides the config's output directory.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Also write an SVG plot.
    #[arg(long)]
    pub plot: bool,
    /// Overrides the corpus seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct SparseDemoArgs {
    #[command(flatten)]
    pub weight: WeightArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Refinement depth; a weight or function file fixes it.
    #[arg(long, default_value_t = 6)]
    pub depth: u32,
    /// Function values in `cell_index,value` form.
    #[arg(long, value_name = "CSV", conflicts_with = "constant")]
    pub function: Option<PathBuf>,
    /// Use a constant function.
    #[arg(long, allow_negative_numbers = true)]
    pub constant: Option<f64>,
    /// Seed of the random function used when no function is given.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Median level; defaults to 2^(-dim-2).
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Stopping ratio of the weight family; defaults to 2^(dim+1).
    #[arg(long)]
    pub a: Option<f64>,
    #[arg(long, default_value = "morreylab-out", value_name = "DIR")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct NormArgs {
    /// Function values in `cell_index,value` form.
    pub function: PathBuf,
    #[command(flatten)]
    pub weight: WeightArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    #[arg(long, default_value_t = 4.0)]
    pub p: f64,
    #[arg(long, default_value_t = 2.0)]
    pub q: f64,
    #[arg(long, default_value_t = 1.0)]
    pub s: f64,
    /// Also write `norm.json` here.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

/// 2 for bad input, 3 for mathematically invalid requests, 4 for size.
fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Invalid(_) | Error::Io(_) | Error::Csv(_) | Error::Json(_) => 2,
        Error::Domain(_) | Error::OutOfRange(_) | Error::Degenerate(_) | Error::Validation(_) => 3,
        Error::Resource { .. } => 4,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.command {
        Command::Diagnose(a) => commands::diagnose(&a),
        Command::Run(a) => commands::run(&a),
        Command::SparseDemo(a) => commands::sparse_demo(&a),
        Command::Norm(a) => commands::norm(&a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
