//! `gadqec`: fidelity sweeps, coefficient verification, entanglement-breaking
//! maps and correctable-set audits for codes under generalized amplitude damping.
//!
//! Exit codes: 0 success, 1 verification failure or runtime error, 2 usage error.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use config::{CodeList, ConfigFile, EpsSpec, Format, GridSpec};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Failed(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            Self::Usage(_) => 2,
            Self::Failed(_) | Self::Runtime(_) => 1,
        }
    }
}

impl From<gadqec_core::Error> for CliError {
    fn from(e: gadqec_core::Error) -> Self {
        Self::Runtime(e.to_string())
    }
}

#[derive(Parser, Debug)]
#[command(name = "gadqec", version, about = "Quantum error correction under generalized amplitude damping")]
struct Cli {
    /// Worker threads (falls back to the config file, then GADQEC_THREADS).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Flat key = value file; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Entanglement fidelity over a γ grid or a temperature grid.
    Sweep(SweepArgs),
    /// Compare fitted expansion coefficients and closed forms with reference values.
    Verify(VerifyArgs),
    /// Concurrence, PPT and entanglement-breaking region over a (γ, p) grid.
    Entbreak(EntbreakArgs),
    /// Re-derive exclusion lists from image overlaps and diff them against the static lists.
    Audit(AuditArgs),
}

#[derive(Args, Debug, Default)]
pub struct SweepArgs {
    /// Comma-separated code names.
    #[arg(long)]
    pub code: Option<CodeList>,
    /// γ grid as start:end:count.
    #[arg(long)]
    pub gamma: Option<GridSpec>,
    /// fixed:<epsilon> or prop:<c> (ε = c·γ).
    #[arg(long = "eps-rule")]
    pub eps_rule: Option<EpsSpec>,
    /// Largest error weight summed (default min(n, 4)).
    #[arg(long = "max-weight")]
    pub max_weight: Option<usize>,
    /// Sweep temperature instead of γ, with ε = 1/(1 + e^{1/T}).
    #[arg(long = "temp-sweep")]
    pub temp_sweep: bool,
    /// Temperature grid as start:end:count.
    #[arg(long)]
    pub temp: Option<GridSpec>,
    /// γ as a multiple of ε in temperature sweeps, e.g. 10eps.
    #[arg(long = "gamma-rule")]
    pub gamma_rule: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Args, Debug, Default)]
pub struct VerifyArgs {
    #[arg(long)]
    pub all: bool,
    #[arg(long)]
    pub code: Option<CodeList>,
    /// Compare the full-summation fidelity with the closed-form polynomials instead.
    #[arg(long)]
    pub appendix: bool,
    /// Write the reports as JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Default)]
pub struct EntbreakArgs {
    #[arg(long)]
    pub gamma: Option<GridSpec>,
    #[arg(long)]
    pub p: Option<GridSpec>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Args, Debug, Default)]
pub struct AuditArgs {
    #[arg(long)]
    pub all: bool,
    #[arg(long)]
    pub code: Option<CodeList>,
    /// Channel point for the reported Knill–Laflamme diagnostics [default: 0.1].
    #[arg(long = "kl-gamma")]
    pub kl_gamma: Option<f64>,
    /// [default: 0.01]
    #[arg(long = "kl-epsilon")]
    pub kl_epsilon: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn thread_count(cli: Option<usize>, file: &ConfigFile) -> Result<Option<usize>, CliError> {
    if let Some(n) = config::merge(cli, file, "threads")? {
        return Ok(Some(n));
    }
    match std::env::var("GADQEC_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map(Some)
            .map_err(|_| CliError::Usage(format!("GADQEC_THREADS='{v}' is not a thread count"))),
        Err(_) => Ok(None),
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let file = match &cli.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    if let Some(n) = thread_count(cli.threads, &file)? {
        if n == 0 {
            return Err(CliError::Usage("thread count must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Runtime(e.to_string()))?;
    }
    match cli.command {
        Command::Sweep(a) => commands::sweep(a, &file),
        Command::Verify(a) => commands::verify(a, &file),
        Command::Entbreak(a) => commands::entbreak(a, &file),
        Command::Audit(a) => commands::audit(a, &file),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("gadqec: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
