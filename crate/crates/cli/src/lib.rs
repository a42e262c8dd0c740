//! `lagsynth` command-line runner.
//!
//! Exit codes: 0 success, 1 computation failure, 2 usage or config error.
//! `LAGSYNTH_THREADS` caps the worker threads used inside a command.

pub mod commands;
pub mod config;
pub mod error;
pub mod io;
pub mod pipeline;
pub mod report;
pub mod svg;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use lagsynth::cv::Scheme;

use crate::config::Overrides;
use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "lagsynth", version, about = "Distributed-lag EEG-to-BOLD models: synthesize, fit, test, compare")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// TOML run configuration.
    #[arg(long, value_name = "PATH")]
    pub config: PathBuf,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    /// Overrides the config seed.
    #[arg(long, value_name = "N")]
    pub seed: Option<u64>,
    /// Overrides the config split scheme.
    #[arg(long, value_name = "inter|intra", value_parser = parse_scheme)]
    pub scheme: Option<Scheme>,
}

fn parse_scheme(s: &str) -> Result<Scheme, String> {
    s.parse().map_err(|e: lagsynth::Error| e.to_string())
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic scenario (S1, S2, S3, NULL) as dataset files.
    Synth {
        scenario: String,
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
        #[arg(long, value_name = "N")]
        seed: Option<u64>,
        /// Replace existing files.
        #[arg(long)]
        force: bool,
    },
    /// Nested cross-validated fit and held-out evaluation.
    Fit(RunArgs),
    /// Surrogate null distribution of the test correlation.
    Nulltest {
        #[command(flatten)]
        run: RunArgs,
        /// Overrides the config surrogate count.
        #[arg(long, value_name = "N")]
        surrogates: Option<usize>,
    },
    /// Compare against the SMR and MUC reference predictors.
    Baseline(RunArgs),
    /// Re-render summaries and plots from stored results.
    Report {
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
    },
    /// Check stored provenance against the config and inputs.
    Verify {
        #[arg(long, value_name = "PATH")]
        config: PathBuf,
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
    },
}

fn overrides(run: &RunArgs, surrogates: Option<usize>) -> Overrides {
    Overrides {
        seed: run.seed,
        scheme: run.scheme,
        surrogates,
    }
}

fn thread_cap() -> CliResult<Option<usize>> {
    match std::env::var("LAGSYNTH_THREADS") {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(CliError::usage(format!("LAGSYNTH_THREADS must be a positive integer, got `{v}`"))),
        },
    }
}

/// Run a parsed command and return the message to print.
pub fn execute(cmd: &Command) -> CliResult<String> {
    use commands::*;
    match cmd {
        Command::Synth { scenario, out, seed, force } => {
            let files = cmd_synth(scenario, out, *seed, *force)?;
            Ok(format!("wrote {} files to {}", files.len(), out.display()))
        }
        Command::Fit(run) => {
            let r = cmd_fit(&run.config, &run.out, overrides(run, None))?;
            let mut msg = format!("mean test r {:.4}, mse {:.4}", r.mean_r, r.mean_mse);
            if r.any_degenerate {
                msg.push_str(" (degenerate prediction: r reported as 0)");
            }
            Ok(msg)
        }
        Command::Nulltest { run, surrogates } => {
            let r = cmd_nulltest(&run.config, &run.out, overrides(run, *surrogates))?;
            Ok(r.subjects
                .iter()
                .map(|s| format!("{}: observed r {:.4}, p {:.4}, p(n+1) {:.4}", s.name, s.observed, s.p_value, s.p_value_conservative))
                .collect::<Vec<_>>()
                .join("\n"))
        }
        Command::Baseline(run) => {
            let r = cmd_baseline(&run.config, &run.out, overrides(run, None))?;
            Ok(report::baseline_summary(&r))
        }
        Command::Report { out } => Ok(format!("rendered {}", cmd_report(out)?.join(", "))),
        Command::Verify { config, out } => Ok(format!("verified {}", cmd_verify(config, out)?.join(", "))),
    }
}

/// Parse arguments, run, print, and return the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let result = thread_cap().and_then(|cap| match cap {
        None => execute(&cli.command),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::usage(format!("thread pool: {e}")))?
            .install(|| execute(&cli.command)),
    });
    match result {
        Ok(msg) => {
            println!("{msg}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
