//! Command-line front end for `robust-ofo`: instance I/O, solver runs,
//! strategy comparison and CSV output.
//!
//! [`run`] parses arguments and returns the process exit code, so the binary
//! and the tests share one entry point.

pub mod bench;
pub mod cli;
pub mod commands;
pub mod trace;

use std::ffi::OsString;
use std::fmt;

use clap::error::ErrorKind;
use clap::Parser;

use robust_ofo::Verdict;

pub const EXIT_FEASIBLE: i32 = 0;
pub const EXIT_INFEASIBLE: i32 = 1;
pub const EXIT_UNDECIDED: i32 = 2;
/// Unparseable arguments or input files.
pub const EXIT_USAGE: i32 = 64;
/// Failure while solving (e.g. a NaN evaluation).
pub const EXIT_SOFTWARE: i32 = 70;

/// Error caused by the caller's arguments or inputs.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn exit_code(verdict: &Verdict) -> i32 {
    match verdict {
        Verdict::Feasible { .. } => EXIT_FEASIBLE,
        Verdict::Infeasible { .. } => EXIT_INFEASIBLE,
        Verdict::Undecided { .. } => EXIT_UNDECIDED,
    }
}

pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match cli::Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_USAGE,
            };
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default())
        .filter_level(level)
        .parse_default_env()
        .try_init();
    let result = match cli.command {
        cli::Command::Solve(args) => commands::solve(&args),
        cli::Command::GenPortfolio(args) => commands::gen_portfolio(&args),
        cli::Command::Bench(args) => commands::bench(&args),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                EXIT_USAGE
            } else {
                EXIT_SOFTWARE
            }
        }
    }
}
