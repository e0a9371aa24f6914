mod commands;
mod output;

use clap::{Args, Parser, Subcommand, ValueEnum};
use std::process::ExitCode;

/// Exit status for numerical failures.
pub const EXIT_NUMERICAL: u8 = 2;
/// Exit status for bad invocations (BSD `EX_USAGE`).
pub const EXIT_USAGE: u8 = 64;

#[derive(Parser, Debug)]
#[command(name = "dwion", version, about = "Ionization of a delta-well atom in an oscillating field")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Resolvent pole, pole array and residues.
    Poles(PolesArgs),
    /// Survival amplitude theta(t).
    Survival(SurvivalArgs),
    /// Emission amplitude Theta(k, t) over a k^2 grid.
    Spectrum(SpectrumArgs),
    /// Pass/fail table for a validation suite.
    Validate(ValidateArgs),
    /// Stationary spectrum with the leading-order curve overlaid.
    Fig1(Fig1Args),
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1.5)]
    pub omega: f64,
    /// Target tolerance, within [1e-14, 1e-2].
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    /// Output format; `poles` defaults to json, the rest to csv.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<std::path::PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Transseries,
    Volterra,
    Both,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Unitarity,
    Crosscheck,
    Asymptotics,
    All,
}

#[derive(Args, Debug)]
pub struct PolesArgs {
    #[command(flatten)]
    pub common: Common,
    /// Largest |n| reported.
    #[arg(long, default_value_t = 6)]
    pub n_max: usize,
}

#[derive(Args, Debug)]
pub struct SurvivalArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value_t = 1.0)]
    pub t_min: f64,
    #[arg(long, default_value_t = 300.0)]
    pub t_max: f64,
    #[arg(long, default_value_t = 300)]
    pub t_points: usize,
    /// Logarithmic spacing of the time grid.
    #[arg(long)]
    pub log_t: bool,
    #[arg(long, value_enum, default_value_t = Method::Transseries)]
    pub method: Method,
    /// Volterra step; the solver also runs at dt/2 for extrapolation.
    #[arg(long, default_value_t = 0.01)]
    pub dt: f64,
}

#[derive(Args, Debug)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value_t = 0.0)]
    pub k2_min: f64,
    #[arg(long, default_value_t = 3.5)]
    pub k2_max: f64,
    #[arg(long, default_value_t = 701)]
    pub k_points: usize,
    /// Evaluation time, or `inf` for the stationary limit.
    #[arg(long, default_value = "inf")]
    pub t: String,
    /// Skip the emitted-norm footer.
    #[arg(long)]
    pub skip_norm: bool,
}

#[derive(Args, Debug)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_enum, default_value_t = Suite::All)]
    pub suite: Suite,
    /// Horizon of the cross-check.
    #[arg(long, default_value_t = 100.0)]
    pub t_max: f64,
}

#[derive(Args, Debug)]
pub struct Fig1Args {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value_t = 0.0)]
    pub k2_min: f64,
    #[arg(long, default_value_t = 3.5)]
    pub k2_max: f64,
    #[arg(long, default_value_t = 701)]
    pub k_points: usize,
}

/// Failure carrying its exit status.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Self { code: EXIT_USAGE, message: message.into() }
    }

    pub fn numerical(message: impl Into<String>) -> Self {
        Self { code: EXIT_NUMERICAL, message: message.into() }
    }
}

impl From<dwion::Error> for Failure {
    fn from(e: dwion::Error) -> Self {
        use dwion::Error::*;
        match e {
            InvalidParams(_) | ResonantOmega(_) | Domain(_) => Self::usage(e.to_string()),
            _ => Self::numerical(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self::numerical(format!("i/o: {e}"))
    }
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
    match commands::dispatch(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("dwion: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
