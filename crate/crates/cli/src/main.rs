//! `cosserat`: exact solutions, symmetry transforms, reconstruction and rod
//! simulation from the command line. Every run writes a `manifest.json` that
//! `cosserat replay` can execute again bit for bit.

mod commands;
mod family;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use cosserat_core::exprfield::{EvalError, ParseError};
use cosserat_core::reconstruct::ReconstructError;
use cosserat_core::rodsim::RodError;
use cosserat_core::symmetry::SymmetryError;
use cosserat_core::verify::VerifyError;

use commands::{Command, Globals};

const EXIT_FAILURE: u8 = 1;
const EXIT_PARSE: u8 = 2;
const EXIT_DOMAIN: u8 = 3;
const EXIT_SINGULAR: u8 = 4;
const EXIT_CFL: u8 = 5;

#[derive(Debug, Parser)]
#[command(name = "cosserat", version, about)]
struct Cli {
    /// Directory for outputs and the run manifest.
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    /// Seed for the random expression family.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Residual tolerance override for verify and transform.
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

/// Maps the first recognised error in the chain to its exit code.
fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<ParseError>() || cause.is::<serde_json::Error>() {
            return EXIT_PARSE;
        }
        if cause.is::<EvalError>() {
            return EXIT_DOMAIN;
        }
        if let Some(e) = cause.downcast_ref::<ReconstructError>() {
            return match e {
                ReconstructError::Singular { .. } => EXIT_SINGULAR,
                ReconstructError::Grid(VerifyError::InvalidGrid(_)) => EXIT_PARSE,
                _ => EXIT_DOMAIN,
            };
        }
        if let Some(e) = cause.downcast_ref::<RodError>() {
            return match e {
                RodError::Cfl { .. } => EXIT_CFL,
                RodError::Parse(_) => EXIT_PARSE,
                RodError::Output(_) => EXIT_FAILURE,
                _ => EXIT_DOMAIN,
            };
        }
        if let Some(e) = cause.downcast_ref::<VerifyError>() {
            return match e {
                VerifyError::Eval(_) => EXIT_DOMAIN,
                _ => EXIT_PARSE,
            };
        }
        if let Some(e) = cause.downcast_ref::<SymmetryError>() {
            return match e {
                SymmetryError::InitialDataDependsOnS { .. } => EXIT_PARSE,
                _ => EXIT_DOMAIN,
            };
        }
    }
    EXIT_FAILURE
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_FAILURE);
        }
    }
    let globals = Globals {
        out_dir: cli.out_dir,
        seed: cli.seed,
        tol: cli.tol,
    };
    match commands::run(cli.command, &globals) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
