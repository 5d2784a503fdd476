//! `lfl`: command-line driver for the random-field experiments.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

pub use config::ExperimentConfig;

#[derive(Debug, Parser)]
#[command(name = "lfl", version, about = "Random fields from convoluted Levy white noise")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Experiment configuration (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides `run.seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Output directory (default: `$LFL_OUT`, else the current directory).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Compare the empirical noise characteristic function with exp(a^d Σ ψ(f)).
    NoiseCheck,
    /// Draw an ensemble and write it in the LFLB format.
    Sample,
    /// Empirical joint cumulants against the analytic values.
    Cumulants,
    /// Analytic truncated Schwinger functions and moments.
    Schwinger,
    /// Reflection Gram matrix, its smallest eigenvalue and witness.
    RpCheck,
    /// Reflection Gram matrices over an (alpha, lambda) grid.
    RpScan,
    /// Spacelike-support vanishing check of the four-point Wightman pairing.
    Baumann,
    /// Spectral-representation identity and Green-function cross-validation.
    Spectral,
    /// Re-verify archived witnesses on a fresh ensemble.
    VerifyWitness {
        /// Witness archive (JSON) written by rp-check or rp-scan.
        #[arg(long)]
        witness: PathBuf,
    },
}

/// Failure classes with their exit statuses.
#[derive(Debug)]
pub enum CliError {
    /// Exit 1.
    Config(String),
    /// Exit 2.
    Numerical(String),
    /// Exit 3: the computation ran but a check did not pass.
    CheckFailed(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 1,
            CliError::Numerical(_) => 2,
            CliError::CheckFailed(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
            CliError::CheckFailed(m) => write!(f, "check failed: {m}"),
        }
    }
}

impl From<lfl_core::Error> for CliError {
    fn from(e: lfl_core::Error) -> Self {
        use lfl_core::Error as E;
        match e {
            E::Numerical { .. } | E::Singularity(_) | E::Io(_) => CliError::Numerical(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Runs one command; the caller maps the error to an exit status.
pub fn run(cli: Cli) -> CliResult<Vec<PathBuf>> {
    let path = cli
        .config
        .clone()
        .ok_or_else(|| CliError::Config("--config PATH is required".into()))?;
    let mut cfg = ExperimentConfig::load(&path).map_err(CliError::Config)?;
    if let Some(seed) = cli.seed {
        cfg.run.seed = seed;
    }
    if let Some(w) = cli.workers {
        cfg.run.workers = Some(w);
    }
    let errs = cfg.validate();
    if !errs.is_empty() {
        return Err(CliError::Config(format!(
            "{} invalid field(s):\n  {}",
            errs.len(),
            errs.join("\n  ")
        )));
    }
    let out = cli
        .out
        .clone()
        .or_else(|| std::env::var_os("LFL_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&out).map_err(|e| CliError::Numerical(format!("{}: {e}", out.display())))?;
    let ctx = commands::Context { cfg, out };
    let workers = ctx.cfg.run.workers;
    let command = cli.command.clone();
    lfl_core::par::with_workers(workers, move || commands::dispatch(&ctx, &command))
}

pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("lfl: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
