//! `sgq`: batch CLI over the scope-graph query library.
//!
//! Exit codes: 0 success, 1 semantic mismatch (diff/fuzz), 2 invalid input
//! or usage.

use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{ArgAction, Parser, Subcommand};

use scopegraph_query::cli::{
    cmd_bench, cmd_compile, cmd_diff, cmd_fuzz, cmd_resolve, BenchOptions, CliError, FuzzOptions,
    Mode,
};

#[derive(Parser)]
#[command(
    name = "sgq",
    version,
    about = "Scope graph query resolution and specialization"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Compile a query file into resolution-machine text.
    Compile {
        /// Query JSON file.
        query: PathBuf,
        /// Use the `else` combinator (default: only when the query's data
        /// equivalence is trivially true).
        #[arg(long = "else", action = ArgAction::SetTrue, overrides_with = "no_else")]
        use_else: bool,
        #[arg(long = "no-else", action = ArgAction::SetTrue)]
        no_else: bool,
        /// Eliminate common sub-environments (default on).
        #[arg(long = "cse", action = ArgAction::SetTrue, overrides_with = "no_cse")]
        cse: bool,
        #[arg(long = "no-cse", action = ArgAction::SetTrue)]
        no_cse: bool,
        /// Output file (stdout when omitted).
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Resolve a query against a graph.
    Resolve {
        graph: PathBuf,
        query: PathBuf,
        /// generic | specialized | bruteforce
        #[arg(long, default_value = "generic")]
        mode: String,
        /// Emit the full JSON report (environment, counters, wall time).
        #[arg(long, action = ArgAction::SetTrue)]
        json: bool,
    },
    /// Resolve in every mode and compare the answers.
    Diff {
        graph: PathBuf,
        query: PathBuf,
        /// Machine text file overriding the compiled query (harness
        /// self-test hook).
        #[arg(long)]
        machine: Option<PathBuf>,
    },
    /// Differential fuzzing over seeded random graphs and queries.
    Fuzz {
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        cases: u64,
        #[arg(long = "max-scopes", default_value_t = 12)]
        max_scopes: usize,
        #[arg(long = "max-labels", default_value_t = 3)]
        max_labels: usize,
        /// Directory for reproducer files on mismatch.
        #[arg(long = "reproducer-dir", default_value = ".")]
        reproducer_dir: PathBuf,
    },
    /// Timed generic-versus-specialized comparison with counters.
    Bench {
        graph: PathBuf,
        query: PathBuf,
        #[arg(long, default_value_t = 20)]
        iters: u64,
        #[arg(long, default_value_t = 5)]
        warmup: u64,
        /// CSV output file.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<ExitCode, CliError> {
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match cli.cmd {
        Cmd::Compile {
            query,
            use_else,
            no_else,
            cse: _,
            no_cse,
            out: out_path,
        } => {
            let use_else = match (use_else, no_else) {
                (true, _) => Some(true),
                (_, true) => Some(false),
                _ => None,
            };
            cmd_compile(&query, use_else, !no_cse, out_path.as_deref(), &mut out)?;
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Resolve {
            graph,
            query,
            mode,
            json,
        } => {
            let mode = Mode::from_str(&mode)?;
            cmd_resolve(&graph, &query, mode, json, &mut out)?;
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Diff {
            graph,
            query,
            machine,
        } => {
            let agree = cmd_diff(&graph, &query, machine.as_deref(), &mut out)?;
            Ok(if agree {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
        Cmd::Fuzz {
            seed,
            cases,
            max_scopes,
            max_labels,
            reproducer_dir,
        } => {
            let outcome = cmd_fuzz(
                &FuzzOptions {
                    seed,
                    cases,
                    max_scopes,
                    max_labels,
                    reproducer_dir,
                },
                &mut out,
            )?;
            Ok(if outcome.mismatch.is_none() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
        Cmd::Bench {
            graph,
            query,
            iters,
            warmup,
            csv,
        } => {
            cmd_bench(
                &graph,
                &query,
                &BenchOptions { iters, warmup, csv },
                &mut out,
            )?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("sgq: {err}");
            ExitCode::from(2)
        }
    }
}
