//! Command-line front end: model I/O, divergence computation with optional
//! cross-checks, a scaling benchmark, the bundled signalling-network case
//! study, and maximum-likelihood fitting.

pub mod bench;
pub mod divergence_cmd;
pub mod fit;
pub mod report;
pub mod sachs;
pub mod svg;

pub use bench::{run_bench, BenchArgs, BenchFamily, BenchRow, BenchRun};
pub use divergence_cmd::{run_divergence, DivergenceArgs, DivergencePoint, DivergenceRun, Method};
pub use fit::{run_fit, FitArgs, FitRun};
pub use report::{InputDigest, RunReport};
pub use sachs::{
    run_sachs, Closer, SachsArgs, SachsRow, SachsRun, CANDIDATE_A_DELETIONS, CANDIDATE_B_DELETIONS,
};

use abdiv_core::Error;
use clap::Parser;

#[derive(Debug, Parser)]
#[command(
    name = "abdiv",
    version,
    about = "Divergences between decomposable graphical models",
    long_about = "Computes alpha-beta divergences between decomposable models \
                  exactly via junction-tree message passing, with brute-force \
                  and Monte Carlo baselines, benchmarks, and model fitting."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, clap::Subcommand)]
enum Command {
    /// Divergence between two models at a parameter point or on the preset grid.
    Divergence(DivergenceArgs),
    /// Runtime scaling of the exact engine against the baselines.
    BenchScaling(BenchArgs),
    /// Model selection between two simplifications of the bundled network.
    CasestudySachs(SachsArgs),
    /// Maximum-likelihood clique tables for a chordal structure.
    Fit(FitArgs),
}

/// Process exit code for an error: 3 when the divergence is undefined on
/// the given pair (zeros where the formula needs logs or negative powers),
/// 4 when a domain or table exceeds its cap, 2 for everything else
/// (parsing, validation, I/O).
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::LogOfZero(_)
        | Error::LogOfZeroOnSupport(_)
        | Error::NegativePowerOfZero(_)
        | Error::ZeroProbabilitySample(_) => 3,
        Error::TableTooLarge { .. } | Error::DomainTooLarge { .. } => 4,
        _ => 2,
    }
}

/// Parses arguments from the environment, runs the chosen command, prints
/// its rendered output, and returns the process exit code. Usage errors
/// exit with code 2 via clap.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests are not errors.
            let code = if e.exit_code() == 0 { 0 } else { 2 };
            let _ = e.print();
            return code;
        }
    };
    let rendered = match cli.command {
        Command::Divergence(args) => run_divergence(&args).map(|r| r.rendered),
        Command::BenchScaling(args) => run_bench(&args).map(|r| r.rendered),
        Command::CasestudySachs(args) => run_sachs(&args).map(|r| r.rendered),
        Command::Fit(args) => run_fit(&args).map(|r| r.rendered),
    };
    match rendered {
        Ok(text) => {
            print!("{text}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
