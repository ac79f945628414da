//! Command-line front end.
//!
//! [`run`] parses arguments, dispatches to a subcommand and maps the
//! outcome to an exit code: 0 on success, 1 when a verification fails and
//! 2 for usage, parse and runtime errors.

mod commands;
pub mod measure;
pub mod verify;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::arith::ArithError;
use crate::inverse::InverseError;
use crate::ram::RamError;
use crate::tables::TableError;
use crate::transform::TransformError;

pub use measure::{measure, MeasuredOp, MeasurementReport, Record, Verdicts};
pub use verify::{run_suite, Suite, SuiteConfig, SuiteReport};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("i/o: {0}")]
    Io(String),
    #[error(transparent)]
    Arith(#[from] ArithError),
    #[error(transparent)]
    Inverse(#[from] InverseError),
    #[error(transparent)]
    Ram(#[from] RamError),
    #[error(transparent)]
    Tables(#[from] TableError),
    #[error(transparent)]
    Transform(#[from] TransformError),
    #[error("verification failed: {0}")]
    Verification(String),
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Verification(_) => 1,
            _ => 2,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "cstpp", version, about = "Constant-time arithmetic after linear preprocessing on a metered RAM")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build the lookup tables for one reference integer and report their costs.
    Preprocess(PreprocessArgs),
    /// Execute RAM programs in sequence on one machine and print the trace.
    Run(RunArgs),
    /// Time an operation over several reference integers.
    Measure(MeasureArgs),
    /// Compile a restricted program, or the built-in product, to an addition expression.
    CompileExpr(CompileArgs),
    /// Run a self-checking suite.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct PreprocessArgs {
    /// Reference integer N.
    #[arg(long)]
    pub n: Option<u64>,
    /// Degree the tables are sized for.
    #[arg(long, default_value_t = 1)]
    pub d: usize,
    /// Also build the FIB and FACT sequence tables.
    #[arg(long)]
    pub sequences: bool,
    /// Write the tables to this file.
    #[arg(long)]
    pub dump: Option<PathBuf>,
    /// Read the tables from this file instead of building them.
    #[arg(long, conflicts_with_all = ["n", "sequences"])]
    pub load: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Program files, or `corpus:NAME` for a bundled program.
    #[arg(required = true)]
    pub programs: Vec<String>,
    /// Reference integer N.
    #[arg(long)]
    pub n: u64,
    /// Degree used for the content bound of the machine.
    #[arg(long, default_value_t = 1)]
    pub d: usize,
    /// Input stream for the last program, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub inputs: Vec<u64>,
    /// Preload every table of the table set under its own name.
    #[arg(long)]
    pub tables: bool,
    /// Also run the last program lowered to register level and compare traces.
    #[arg(long)]
    pub lower: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Standard,
    Reduced,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct MeasureArgs {
    /// Operation: add, sub, mul, div, mod, compare, pred, fib_inverse or fact_inverse.
    #[arg(long)]
    pub op: MeasuredOp,
    /// Number of base-N digits per operand.
    #[arg(long, default_value_t = 2)]
    pub d: usize,
    /// Reference integers, comma separated; defaults to 16, 64, …, 4096.
    #[arg(long, value_delimiter = ',')]
    pub n: Vec<u64>,
    /// Operand pairs drawn per reference integer.
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    /// Standard tables, or reduced tables of size about N^(1/c).
    #[arg(long, value_enum, default_value_t = ModeArg::Standard)]
    pub mode: ModeArg,
    /// Root order for reduced mode.
    #[arg(long, default_value_t = 2)]
    pub c: u32,
    /// Seed for operand sampling; echoed to stderr.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Builtin {
    Mul,
}

#[derive(Debug, Args)]
pub struct CompileArgs {
    /// Restricted program file, or `corpus:NAME` for a bundled one.
    #[arg(required_unless_present = "builtin", conflicts_with = "builtin")]
    pub source: Option<String>,
    /// Compile a built-in expression instead of a program.
    #[arg(long, value_enum)]
    pub builtin: Option<Builtin>,
    /// Reference integer N.
    #[arg(long, default_value_t = 32)]
    pub n: u64,
    /// Number of base-N operand digits; bundled programs know their own.
    #[arg(long)]
    pub degree: Option<usize>,
    /// Path length bound for symbolic execution.
    #[arg(long)]
    pub tau: Option<u64>,
    /// Check the expression against direct execution on every operand.
    #[arg(long)]
    pub verify: bool,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(value_enum)]
    pub suite: Suite,
    /// Seed for the randomized checks.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Random pairs per operation in the sampled oracle.
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
}

/// Parses `args` (program name first) and runs the command, writing results
/// to `out` and diagnostics to `err`. Returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{text}");
                2
            } else {
                let _ = write!(out, "{text}");
                0
            };
        }
    };
    match dispatch(cli.command, out, err) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(command: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    match command {
        Command::Preprocess(a) => commands::preprocess(&a, out),
        Command::Run(a) => commands::run_programs(&a, out),
        Command::Measure(a) => commands::measure(&a, out, err),
        Command::CompileExpr(a) => commands::compile_expr(&a, out),
        Command::Verify(a) => commands::verify(&a, out),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> (i32, String, String) {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = run(std::iter::once("cstpp").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn unknown_suite_is_a_usage_error() {
        let (code, _, err) = call(&["verify", "everything"]);
        assert_eq!(code, 2);
        assert!(err.contains("invalid value"), "{err}");
    }

    #[test]
    fn help_exits_zero() {
        let (code, out, _) = call(&["--help"]);
        assert_eq!(code, 0);
        assert!(out.contains("compile-expr"));
    }

    #[test]
    fn invalid_n_is_rejected() {
        let (code, _, err) = call(&["preprocess", "--n", "1"]);
        assert_eq!(code, 2);
        assert!(err.contains("at least 2"), "{err}");
    }
}
