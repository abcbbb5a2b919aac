//! Command-line front end: instance generation, pipeline runs with oracle
//! checks, false-positive measurement and build/query tradeoff sweeps.
//!
//! Every command writes its result to `--out` when given and to standard
//! output otherwise. Exit status: 0 when the command ran, 1 for usage or
//! input errors, 2 when a checked result disagrees with its oracle.

mod args;
mod measure;
mod selftest;
mod solve;

use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::Path;
use std::process::ExitCode;

pub use args::{Cli, Command, FpArgs, FpMode, GenArgs, GenSpec, Pipeline, SelftestArgs, SolveArgs, TradeoffArgs};
pub use measure::{cmd_fp_measure, cmd_tradeoff, FpMeasureRow, TradeoffRow, FP_CSV_HEADER, TRADEOFF_CSV_HEADER};
pub use selftest::{cmd_selftest, CheckResult};
pub use solve::{cmd_gen, cmd_solve, SolveOutcome};

/// Why a command did not complete normally.
#[derive(Debug)]
pub enum Failure {
    /// Bad flags, bad parameters or unreadable input.
    Usage(anyhow::Error),
    /// A result disagreed with its oracle or broke an invariant.
    Invariant(String),
}

impl Failure {
    pub fn usage(msg: impl fmt::Display) -> Self {
        Failure::Usage(anyhow::anyhow!("{msg}"))
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Invariant(_) => 2,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(e) => write!(f, "{e:#}"),
            Failure::Invariant(msg) => write!(f, "invariant violated: {msg}"),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Usage(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Usage(e.into())
    }
}

/// Writes `text` to `path`, or to `stdout` when there is none.
pub(crate) fn emit(path: Option<&Path>, stdout: &mut dyn Write, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| Failure::Usage(anyhow::anyhow!("writing {}: {e}", p.display()))),
        None => Ok(stdout.write_all(text.as_bytes())?),
    }
}

pub fn run(cli: Cli, stdout: &mut dyn Write) -> Result<(), Failure> {
    match cli.command {
        Command::Gen(a) => cmd_gen(&a, stdout),
        Command::Solve(a) => cmd_solve(&a, stdout).map(|_| ()),
        Command::FpMeasure(a) => cmd_fp_measure(&a, stdout).map(|_| ()),
        Command::Tradeoff(a) => cmd_tradeoff(&a, stdout).map(|_| ()),
        Command::Selftest(a) => cmd_selftest(&a, stdout).map(|_| ()),
    }
}

/// Caps the global thread pool at `FGL_THREADS` when it is set.
pub fn configure_threads(value: Option<&str>) -> Result<(), Failure> {
    let Some(raw) = value else { return Ok(()) };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| Failure::usage(format!("FGL_THREADS must be a positive integer, got '{raw}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Failure::usage(format!("thread pool: {e}")))
}

/// Full process entry: parse `argv`, run, map the outcome to an exit code.
pub fn main_with_args<I, T>(argv: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    use clap::Parser;
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let result = configure_threads(std::env::var("FGL_THREADS").ok().as_deref())
        .and_then(|()| run(cli, &mut io::stdout().lock()));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.exit_code())
        }
    }
}
