// SPDX-License-Identifier: Apache-2.0

//! `arrtime`: runs scenario files and writes CSV/JSON results.
//!
//! Exit status is 0 on success, 1 for configuration or validation errors and
//! 2 for diagnostic outcomes (inconclusive classification, negative-momentum
//! leak).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod error;
mod expr;
mod output;
mod scenario;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::error::CliError;
use crate::output::OutDir;
use crate::scenario::Scenario;

/// Environment variable overriding the default output directory.
const OUT_ENV: &str = "ARRTIME_OUT_DIR";

#[derive(Parser)]
#[command(name = "arrtime", version, about = "Arrival-time distributions and flow quantization of 1-D observables")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classify the flow of the scenario's vector field.
    FlowClassify(Common),
    /// Arrival-time density with mover decomposition.
    Arrival {
        #[command(flatten)]
        common: Common,
        /// Cross-check the fast path against direct quadrature.
        #[arg(long)]
        oracle: bool,
    },
    /// Large-time momentum limit for an ensemble and a wave packet.
    ClassicalLimit(Common),
    /// Probability-current scan of a positive-momentum superposition.
    Backflow(Common),
}

#[derive(Args)]
struct Common {
    /// Scenario file (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory [default: $ARRTIME_OUT_DIR or ./out].
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Overrides the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
}

impl Common {
    fn out_dir(&self) -> PathBuf {
        self.out
            .clone()
            .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("out"))
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let common = match &cli.command {
        Command::FlowClassify(c) | Command::ClassicalLimit(c) | Command::Backflow(c) => c,
        Command::Arrival { common, .. } => common,
    };
    if let Some(n) = common.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    let scenario = Scenario::load(&common.config)?;
    let seed = common.seed.unwrap_or(scenario.seed);
    let mut out = OutDir::create(&common.out_dir())?;
    let result = match &cli.command {
        Command::FlowClassify(_) => commands::flow_classify(&scenario, &mut out),
        Command::Arrival { oracle, .. } => commands::arrival(&scenario, *oracle, &mut out),
        Command::ClassicalLimit(_) => commands::classical_limit(&scenario, seed, &mut out),
        Command::Backflow(_) => commands::backflow(&scenario, &mut out),
    };
    for path in out.written() {
        println!("wrote {}", path.display());
    }
    result
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("arrtime: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
