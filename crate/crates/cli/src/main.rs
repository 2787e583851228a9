//! `mann`: residual bounds, coefficient optimization and figure data for Mann iterations.
//!
//! Exit codes: 0 on success, 1 on input errors, 2 when a certificate fails.

mod bounds;
mod optimize;
mod output;
mod reproduce;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "mann", version, about = "Worst-case residual bounds for Mann fixed-point iterations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Distance table and residual bounds of a scheme or an explicit array.
    Bounds(BoundsArgs),
    /// Search for coefficients with small residual bounds.
    Optimize(OptimizeArgs),
    /// Regenerate the data behind a figure or table.
    Reproduce(ReproduceArgs),
}

#[derive(Args, Debug, Clone)]
pub struct BoundsArgs {
    /// Named scheme: halpern, km, ih, ikm, kmh, ekm or ishikawa.
    #[arg(long, conflicts_with = "array")]
    pub scheme: Option<String>,
    /// Beta stepsizes: `n/(n+1)`, `n/(n+2)`, `(n+1)/(n+3)`, `optimal`, a constant, a comma list or a file.
    #[arg(long)]
    pub beta: Option<String>,
    /// Alpha stepsizes, same formats as `--beta`.
    #[arg(long)]
    pub alpha: Option<String>,
    /// Array file: JSON rows or one row per line.
    #[arg(long)]
    pub array: Option<PathBuf>,
    /// Horizon; defaults to the array's own horizon.
    #[arg(long = "N")]
    pub horizon: Option<usize>,
    /// Evaluate in exact rational arithmetic.
    #[arg(long)]
    pub exact: bool,
    /// Build and check the worst-case witness.
    #[arg(long)]
    pub certify: bool,
    /// Print the distance table instead of the residual series.
    #[arg(long)]
    pub table: bool,
    /// Directory for CSV files and the JSON sidecar.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct OptimizeArgs {
    /// fh, s, ms or scheme.
    #[arg(long)]
    pub mode: String,
    /// Scheme kind for `--mode scheme`.
    #[arg(long)]
    pub kind: Option<String>,
    #[arg(long = "N")]
    pub horizon: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 32)]
    pub restarts: usize,
    /// Solve small stages in exact rational arithmetic.
    #[arg(long)]
    pub exact: bool,
    /// Build and check the worst-case witness of the result.
    #[arg(long)]
    pub certify: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Target {
    Fig3,
    Fig4,
    Fig5,
    RemarksTable,
    LowerBounds,
}

#[derive(Args, Debug, Clone)]
pub struct ReproduceArgs {
    #[arg(value_enum)]
    pub target: Target,
    /// Largest horizon; each target has its own default.
    #[arg(long = "N")]
    pub horizon: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 32)]
    pub restarts: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Raised when a computed certificate does not hold.
#[derive(Debug, thiserror::Error)]
#[error("certification failed: {0}")]
pub struct CertificationFailed(pub String);

fn exit_code(err: &anyhow::Error) -> u8 {
    let certification = err.chain().any(|cause| {
        cause.is::<CertificationFailed>()
            || matches!(cause.downcast_ref::<mann_bounds::Error>(), Some(mann_bounds::Error::Certification { .. }))
    });
    if certification {
        2
    } else {
        1
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Bounds(args) => bounds::run(&args),
        Command::Optimize(args) => optimize::run(&args),
        Command::Reproduce(args) => reproduce::run(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
