mod args;
mod commands;
mod error;
mod output;

use std::process::ExitCode;

use clap::{Parser, Subcommand};
use topoinf::Execution;

use commands::analyze::{AnalyzeArgs, ScoreArgs};
use commands::csbm::CsbmArgs;
use commands::dropedge::DropEdgeArgs;
use commands::pseudo::PseudoArgs;
use commands::rewire::RewireArgs;
use commands::verify::VerifyArgs;
use error::CliError;

/// Topological influence of edges on polynomial graph filters.
#[derive(Debug, Parser)]
#[command(name = "topoinf", version)]
struct Cli {
    /// Worker threads (default: all cores). 1 runs sequentially.
    #[arg(long, global = true, env = "TOPOINF_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compatibility between graph and labels under a filter.
    Analyze(AnalyzeArgs),
    /// TopoInf of every edge, ranked.
    Score(ScoreArgs),
    /// Remove edges by TopoInf, at random, or by label agreement.
    Rewire(RewireArgs),
    /// TopoInf-weighted edge dropping distribution and per-epoch samples.
    Dropedge(DropEdgeArgs),
    /// Generate a contextual stochastic block model dataset.
    GenCsbm(CsbmArgs),
    /// Train a linear SGC classifier and emit pseudo labels.
    Pseudo(PseudoArgs),
    /// Run built-in verification suites.
    Verify(VerifyArgs),
}

fn execution(threads: Option<usize>) -> Result<Execution, CliError> {
    match threads {
        Some(0) => Err(CliError::Validation("--threads must be at least 1".into())),
        Some(1) => Ok(Execution::Sequential),
        Some(_n) => {
            #[cfg(feature = "parallel")]
            rayon::ThreadPoolBuilder::new()
                .num_threads(_n)
                .build_global()
                .map_err(CliError::internal)?;
            Ok(Execution::Parallel)
        }
        None => Ok(Execution::Parallel),
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let exec = execution(cli.threads)?;
    match &cli.command {
        Command::Analyze(a) => commands::analyze::analyze(a, exec),
        Command::Score(a) => commands::analyze::score(a, exec),
        Command::Rewire(a) => commands::rewire::rewire(a, exec),
        Command::Dropedge(a) => commands::dropedge::dropedge(a, exec),
        Command::GenCsbm(a) => commands::csbm::gen_csbm(a),
        Command::Pseudo(a) => commands::pseudo::pseudo(a, exec),
        Command::Verify(a) => commands::verify::verify(a, exec),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
