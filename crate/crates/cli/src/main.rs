//! `mixllt` command-line driver.
//!
//! Exit status: 0 on success, 1 when an inequality or acceptance threshold
//! fails (artifacts are still written), 2 on usage and input errors.

// `!(x > 0.0)` guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod output;

use commands::{CharfnArgs, ConditionsArgs, GaussArgs, LltArgs, MixingArgs, SimulateArgs, ValidateArgs};
use output::{Format, Output};

#[derive(Debug, Parser)]
#[command(
    name = "mixllt",
    version,
    about = "Local limit theorem diagnostics for nonstationary Markov chains"
)]
struct Cli {
    /// Master seed for every random stream.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads, 0 for one per core. MIXLLT_THREADS takes precedence.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Directory for artifacts and the manifest.
    #[arg(long, global = true, default_value = "mixllt-out")]
    out: PathBuf,
    /// Encoding of grid data.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a chain spec and report its Doeblin constants and exact moments.
    Validate(ValidateArgs),
    /// Simulate paths of a chain.
    Simulate(SimulateArgs),
    /// Exact psi- and rho-mixing coefficients by lag, or of one joint distribution.
    Mixing(MixingArgs),
    /// Exact characteristic function against the product bound.
    Charfn(CharfnArgs),
    /// Finite-n diagnostics for the theorem's hypotheses.
    Conditions(ConditionsArgs),
    /// Monte Carlo check of the local limit theorem.
    Llt(LltArgs),
    /// Continued-fraction digits under the Gauss measure.
    Gauss(GaussArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Validate(_) => "validate",
            Command::Simulate(_) => "simulate",
            Command::Mixing(_) => "mixing",
            Command::Charfn(_) => "charfn",
            Command::Conditions(_) => "conditions",
            Command::Llt(_) => "llt",
            Command::Gauss(_) => "gauss",
        }
    }
}

/// A run that stopped short of exit status 0.
#[derive(Debug)]
pub struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<mixllt::Error> for Failure {
    fn from(e: mixllt::Error) -> Self {
        Failure::usage(e.to_string())
    }
}

fn thread_count(flag: usize) -> Result<usize, Failure> {
    match std::env::var("MIXLLT_THREADS") {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Failure::usage(format!("MIXLLT_THREADS must be a nonnegative integer, got {v:?}"))),
        Err(_) => Ok(flag),
    }
}

fn run(cli: Cli) -> Result<Option<String>, Failure> {
    let threads = thread_count(cli.threads)?;
    if threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Failure::usage(format!("thread pool: {e}")))?;
    }
    let mut out = Output::create(&cli.out, cli.format)?;
    let seed = cli.seed;
    let violation = match &cli.command {
        Command::Validate(a) => commands::validate(a, &mut out)?,
        Command::Simulate(a) => commands::simulate(a, seed, &mut out)?,
        Command::Mixing(a) => commands::mixing(a, &mut out)?,
        Command::Charfn(a) => commands::charfn(a, &mut out)?,
        Command::Conditions(a) => commands::conditions(a, &mut out)?,
        Command::Llt(a) => commands::llt(a, seed, &mut out)?,
        Command::Gauss(a) => commands::gauss(a, seed, &mut out)?,
    };
    let argv: Vec<String> = std::env::args().collect();
    out.finish(cli.command.name(), &argv, seed, rayon::current_num_threads())?;
    Ok(violation)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(None) => ExitCode::SUCCESS,
        Ok(Some(violation)) => {
            eprintln!("mixllt: violation: {violation}");
            ExitCode::from(1)
        }
        Err(f) => {
            eprintln!("mixllt: error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
