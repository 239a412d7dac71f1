use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

mod commands;

use commands::Rendered;

/// Symmetry operators of linear and nonlinear Schrödinger equations.
///
/// Exit status: 0 when every check passes, 1 when a check fails, 2 on
/// invalid input.
#[derive(Debug, Parser)]
#[command(name = "symop", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate the determining equations for order-n symmetry operators.
    Detgen(DetgenArgs),
    /// Solve for all symmetry operators of the free equation up to order n.
    Freesolve(FreesolveArgs),
    /// Verify a third-order symmetry operator for a one-dimensional potential.
    ThirdOrder(ThirdOrderArgs),
    /// Check catalogued Lie symmetries of a nonlinear Schrödinger equation.
    LieCheck(LieCheckArgs),
    /// Run the built-in verification battery.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Args)]
struct OutputArgs {
    /// Write output to this file instead of stdout.
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Leave wall-clock timing out of JSON reports.
    #[arg(long)]
    no_timing: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DetOutput {
    /// Bare determining system as JSON.
    Json,
    /// LaTeX `align*` block.
    Latex,
    /// Full JSON report.
    Report,
}

#[derive(Debug, Args)]
struct DetgenArgs {
    /// Operator order n.
    #[arg(long)]
    order: usize,
    /// Spatial dimension m.
    #[arg(long, default_value_t = 1)]
    dim: usize,
    /// Drop time derivatives (time-independent operators).
    #[arg(long)]
    stationary: bool,
    #[arg(long, value_enum, default_value_t = DetOutput::Json)]
    format: DetOutput,
    /// Cross-check the equations against a direct commutator expansion and
    /// emit a report.
    #[arg(long)]
    check: bool,
    /// Potential V(x) used by --check.
    #[arg(long, default_value = "0")]
    potential: String,
    /// Mass M used by --check.
    #[arg(long, default_value = "1")]
    mass: String,
    /// Extra polynomial degree of the --check ansatz.
    #[arg(long, default_value_t = 0)]
    margin: u32,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Debug, Args)]
struct FreesolveArgs {
    /// Maximum operator order n.
    #[arg(long)]
    order: usize,
    /// Spatial dimension m.
    #[arg(long, default_value_t = 1)]
    dim: usize,
    /// Mass M.
    #[arg(long, default_value = "1")]
    mass: String,
    /// Also tabulate dimensions for every order up to n against the closed-form count.
    #[arg(long)]
    counts: bool,
    /// Leave the operator list out of the report.
    #[arg(long)]
    no_operators: bool,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Debug, Args)]
struct ThirdOrderArgs {
    /// Potential family: W213, P214, E215 or E216.
    #[arg(long)]
    family: String,
    /// Family parameters, comma separated (omega4,omega5 for E216).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    omega: Vec<String>,
    /// Closed-form potential U(x); selects exact verification.
    #[arg(long, conflicts_with = "initial")]
    potential: Option<String>,
    /// With --potential, also run the pointwise numeric check.
    #[arg(long, requires = "potential")]
    numeric: bool,
    /// Initial state at the left end of --interval; selects ODE integration.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    initial: Option<Vec<f64>>,
    /// Integration interval a,b.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, num_args = 1)]
    interval: Option<Vec<f64>>,
    /// Write the integrated solution as CSV.
    #[arg(long, requires = "initial")]
    csv: Option<PathBuf>,
    /// Sample window in x for numeric checks, a,b.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    x_range: Option<Vec<f64>>,
    /// Sample window in t, a,b.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "0,1")]
    t_range: Vec<f64>,
    #[arg(long, default_value_t = 20)]
    nt: usize,
    #[arg(long, default_value_t = 20)]
    nx: usize,
    /// Tolerance on the maximum pointwise residual.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    /// Local error tolerance of the integrator.
    #[arg(long, default_value_t = 1e-13)]
    ode_tol: f64,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormArg {
    /// i ψ_t + Δψ + F = 0
    Schrodinger,
    /// ψ_t + Δψ + F = 0
    Heat,
}

#[derive(Debug, Args)]
struct LieCheckArgs {
    /// Table number; when given, the row must belong to it.
    #[arg(long)]
    table: Option<u32>,
    /// Row identifier such as 2.8 (E is the base equation).
    #[arg(long, required_unless_present_any = ["all", "sweep", "list"])]
    row: Option<String>,
    /// Spatial dimension m.
    #[arg(long, default_value_t = 1)]
    dim: usize,
    #[arg(long, default_value_t = 100)]
    samples: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Tolerance on the normalized residual.
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[arg(long, value_enum, default_value_t = FormArg::Schrodinger)]
    form: FormArg,
    /// Parameter override name=expr (repeatable).
    #[arg(long = "param", value_name = "NAME=EXPR")]
    params: Vec<String>,
    /// Concrete theta(t, x) instead of an opaque function.
    #[arg(long)]
    theta: Option<String>,
    /// Check the alternative sign variant of fields that carry one.
    #[arg(long)]
    printed: bool,
    /// Check every row (of --table, if given).
    #[arg(long, conflicts_with_all = ["row", "sweep", "list"])]
    all: bool,
    /// Run the negative-control sweep.
    #[arg(long, conflicts_with_all = ["row", "list"])]
    sweep: bool,
    /// List catalogue rows.
    #[arg(long, conflicts_with = "row")]
    list: bool,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 100)]
    samples: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Restrict the nonlinear checks to one space dimension.
    #[arg(long)]
    quick: bool,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Failed(String),
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Failed(_) => 1,
            CliError::Usage(_) | CliError::Io { .. } => 2,
        }
    }
}

fn write_output(text: &str, out: &OutputArgs) -> Result<(), CliError> {
    match &out.output {
        Some(p) => std::fs::write(p, text).map_err(|source| CliError::Io {
            path: p.display().to_string(),
            source,
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<bool, CliError> {
    let start = Instant::now();
    let (rendered, out) = match &cli.command {
        Command::Detgen(a) => (commands::detgen(a)?, &a.out),
        Command::Freesolve(a) => (commands::freesolve(a)?, &a.out),
        Command::ThirdOrder(a) => (commands::third_order(a)?, &a.out),
        Command::LieCheck(a) => (commands::lie_check(a)?, &a.out),
        Command::Verify(a) => (commands::verify(a)?, &a.out),
    };
    let (text, pass) = match rendered {
        Rendered::Text { text, pass } => (text, pass),
        Rendered::Report(r) => {
            let pass = r.pass();
            let r = if out.no_timing { *r } else { r.with_timing(start.elapsed()) };
            (r.to_json(), pass)
        }
    };
    write_output(&text, out)?;
    Ok(pass)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("symop: {e}");
            ExitCode::from(e.code())
        }
    }
}
