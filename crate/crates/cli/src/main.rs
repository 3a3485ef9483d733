//! `smallball`: spectra, distortion constants and small-ball probabilities of
//! demeaned Green Gaussian processes.

mod commands;
mod output;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use output::Format;

#[derive(Parser, Debug)]
#[command(name = "smallball", version, about)]
struct Cli {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Table, global = true)]
    format: Format,
    /// Write output to this file instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Karhunen–Loève eigenvalues.
    Eigs(EigsArgs),
    /// Distortion constant by closed form and by tail-corrected product.
    Constant(ConstantArgs),
    /// Small-ball probabilities P{‖X‖ ≤ ε}.
    Prob(ProbArgs),
    /// Alpha-invariance, dual-solver and product-convergence checks.
    Selftest(SelftestArgs),
}

/// Process selector.
#[derive(Args, Debug, Clone)]
pub struct ProcessArgs {
    /// wiener, bridge, xalpha, ou, ou0 or iou, optionally prefixed with
    /// `demeaned-`.
    #[arg(long)]
    pub process: String,
    #[arg(long, allow_negative_numbers = true)]
    pub beta: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub alpha: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EigsMethod {
    Nystrom,
    Charfn,
}

#[derive(Args, Debug)]
pub struct EigsArgs {
    #[command(flatten)]
    pub process: ProcessArgs,
    /// Number of eigenvalues.
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    #[arg(long, value_enum, default_value_t = EigsMethod::Nystrom)]
    pub method: EigsMethod,
    /// Quadrature nodes of the Nyström solver.
    #[arg(long, default_value_t = smallball::spectral::DEFAULT_NODES)]
    pub n_nodes: usize,
    /// Print Nyström and characteristic-root eigenvalues side by side.
    #[arg(long)]
    pub compare: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ConstantMethodArg {
    Closed,
    Product,
    Both,
}

#[derive(Args, Debug)]
pub struct ConstantArgs {
    #[command(flatten)]
    pub process: ProcessArgs,
    #[arg(long, value_enum, default_value_t = ConstantMethodArg::Both)]
    pub method: ConstantMethodArg,
    /// Factors in the product.
    #[arg(long, default_value_t = smallball::distortion::DEFAULT_PRODUCT_TERMS)]
    pub terms: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProbMethod {
    /// CDF inversion on a steepest-descent contour.
    Exact,
    /// CDF inversion on the real axis.
    Imhof,
    Mc,
    Asymptotic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SourceArg {
    Auto,
    Nystrom,
    Charfn,
}

#[derive(Args, Debug)]
pub struct ProbArgs {
    #[command(flatten)]
    pub process: ProcessArgs,
    /// Comma-separated radii.
    #[arg(long, value_delimiter = ',', required = true)]
    pub eps: Vec<f64>,
    /// Comma-separated subset of exact, imhof, mc, asymptotic.
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [ProbMethod::Exact, ProbMethod::Asymptotic])]
    pub method: Vec<ProbMethod>,
    /// Monte Carlo sample count.
    #[arg(long, default_value_t = 1_000_000)]
    pub samples: u64,
    /// Monte Carlo seed; required with `mc`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Eigenvalues kept for CDF inversion.
    #[arg(long, default_value_t = 2000)]
    pub k_trunc: usize,
    /// Eigenvalues kept for Monte Carlo.
    #[arg(long, default_value_t = 100)]
    pub k_mc: usize,
    #[arg(long, value_enum, default_value_t = SourceArg::Auto)]
    pub source: SourceArg,
}

#[derive(Args, Debug)]
pub struct SelftestArgs {
    /// Quadrature nodes of the Nyström solver.
    #[arg(long, default_value_t = 1000)]
    pub n_nodes: usize,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Lib(#[from] smallball::Error),
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("{0} check(s) failed")]
    Failed(usize),
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("SMALLBALL_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("SMALLBALL_THREADS must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(e.to_string()))
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    let (name, table, failed) = match &cli.command {
        Command::Eigs(a) => ("eigs", commands::eigs(a)?, 0),
        Command::Constant(a) => ("constant", commands::constant(a)?, 0),
        Command::Prob(a) => ("prob", commands::prob(a)?, 0),
        Command::Selftest(a) => {
            let (t, failed) = commands::selftest(a)?;
            ("selftest", t, failed)
        }
    };
    let text = table.render(cli.format, name);
    match &cli.output {
        Some(path) => std::fs::write(path, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    if failed > 0 {
        return Err(CliError::Failed(failed));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
