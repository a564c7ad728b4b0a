//! Command-line front end for `qsu2-core`: builds representations, runs the
//! identity suites and exports matrices.
//!
//! Exit codes: 0 when every check is within tolerance, 1 when a check
//! exceeds it, 2 for invalid input (including the guard rail).

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qsu2_core::triangular_rep::AlphaParams;
use qsu2_core::{Deformation, Spin};
use thiserror::Error;

pub mod commands;
pub mod export;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFICATION: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid input: {0}")]
    Input(String),
    #[error(transparent)]
    Core(#[from] qsu2_core::Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use qsu2_core::Error as E;
        match self {
            CliError::Input(_) | CliError::Json(_) | CliError::Csv(_) | CliError::Io(_) => EXIT_INPUT,
            CliError::Core(e) => match e {
                E::InvalidDeformation(_)
                | E::GuardRail { .. }
                | E::AlphaCount { .. }
                | E::NonFinite(_)
                | E::DegenerateGauge { .. }
                | E::PoleProximity { .. }
                | E::DimensionMismatch { .. }
                | E::InvalidInput(_) => EXIT_INPUT,
                _ => EXIT_VERIFICATION,
            },
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "qsu2", version, about = "SU_q(2) representations in the J_x-diagonal basis")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Emit s, r, K, R and the Casimir value.
    Build(BuildArgs),
    /// Run the full identity suite.
    Verify(VerifyArgs),
    /// Tabulate the admissible Casimir values.
    Casimir(SpinArgs),
    /// Eigenvalues of s or R beside their predicted values.
    Spectrum(SpectrumArgs),
    /// Compare the standard and triangular constructions.
    Oracle(SpinArgs),
    /// Convergence table of the t -> 0 contraction.
    Limit(LimitArgs),
    /// Residuals of the functional realisations.
    Heisenberg(HeisenbergArgs),
}

#[derive(Debug, Clone, Args)]
pub struct SpinArgs {
    #[arg(long = "two-l")]
    pub two_l: u32,
    #[arg(long, allow_negative_numbers = true)]
    pub t: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, Args)]
pub struct BuildArgs {
    #[command(flatten)]
    pub spin: SpinArgs,
    /// Comma-separated subdiagonal parameters (default: all 1).
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub alphas: Option<Vec<f64>>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Output file (JSON) or path prefix (CSV, one file per matrix).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub spin: SpinArgs,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub alphas: Option<Vec<f64>>,
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    /// Verify the matrices of a JSON file written by `build` instead.
    #[arg(long)]
    pub input: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Operator {
    #[value(name = "s")]
    S,
    #[value(name = "R", alias = "r")]
    R,
}

#[derive(Debug, Clone, Args)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub spin: SpinArgs,
    #[arg(long, value_enum)]
    pub operator: Operator,
}

#[derive(Debug, Clone, Args)]
pub struct LimitArgs {
    #[arg(long = "two-l")]
    pub two_l: u32,
    #[arg(long = "t-start", default_value_t = 0.08)]
    pub t_start: f64,
    #[arg(long, default_value_t = 3)]
    pub halvings: usize,
}

#[derive(Debug, Clone, Args)]
pub struct HeisenbergArgs {
    #[arg(long, allow_negative_numbers = true, default_value_t = qsu2_core::heisenberg::DEFAULT_T)]
    pub t: f64,
    #[arg(long = "F", allow_negative_numbers = true, default_value_t = qsu2_core::heisenberg::DEFAULT_F)]
    pub f: f64,
    #[arg(long, allow_negative_numbers = true, default_value_t = qsu2_core::heisenberg::DEFAULT_PHI)]
    pub phi: f64,
    /// `lo:hi:step` sample grid in x.
    #[arg(long, allow_hyphen_values = true)]
    pub grid: Option<String>,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
}

/// Validated parameters shared by `build` and `verify`.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub two_l: u32,
    pub t: f64,
    pub alphas: Option<Vec<f64>>,
    pub tol: f64,
    pub format: Format,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    /// Checks `tol > 0`, the deformation, the guard rail and the alpha count.
    pub fn validate(self) -> CliResult<Self> {
        if !(self.tol > 0.0) {
            return Err(CliError::Input(format!("tol must be positive, got {}", self.tol)));
        }
        let def = Deformation::new(self.t)?;
        def.check_guard_rail(self.spin())?;
        self.alpha_params()?;
        Ok(self)
    }

    pub fn spin(&self) -> Spin {
        Spin::new(self.two_l)
    }

    pub fn alpha_params(&self) -> CliResult<AlphaParams> {
        Ok(match &self.alphas {
            Some(v) => AlphaParams::new(self.spin(), v.clone())?,
            None => AlphaParams::ones(self.spin()),
        })
    }
}

/// Parses `lo:hi:step` into the points `lo, lo + step, ...` not beyond `hi`.
pub fn parse_grid(text: &str) -> CliResult<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    let bad = || CliError::Input(format!("grid must be lo:hi:step, got {text:?}"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let nums: Vec<f64> = parts
        .iter()
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<CliResult<_>>()?;
    let (lo, hi, step) = (nums[0], nums[1], nums[2]);
    if !(lo.is_finite() && hi.is_finite() && step.is_finite()) || step <= 0.0 || hi < lo {
        return Err(bad());
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    if n > 1_000_000 {
        return Err(CliError::Input(format!("grid has {n} points; at most 1000000 allowed")));
    }
    Ok((0..n).map(|i| lo + step * i as f64).collect())
}

/// Runs the tool with process stdout/stderr.
pub fn run<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with_io(argv, &mut stdout.lock(), &mut stderr.lock())
}

/// Runs the tool writing the report to `out` and diagnostics to `err`.
pub fn run_with_io<I, S>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(err, "{}", e.render());
                return EXIT_INPUT;
            }
            let _ = write!(out, "{}", e.render());
            return EXIT_OK;
        }
    };
    match commands::dispatch(&cli.command, out) {
        Ok(true) => EXIT_OK,
        Ok(false) => EXIT_VERIFICATION,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
