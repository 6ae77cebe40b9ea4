//! `cea`: fit edge-flow models, rank unfair edges, remove discrimination and
//! run the synthetic experiments.

mod commands;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use commands::{DebiasArgs, Experiment, FitArgs, PrioritizeArgs};
use error::{CliError, CliResult};

#[derive(Parser)]
#[command(name = "cea", version, about = "Edge flows and edge unfairness for discrete causal Bayesian networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit every table to its input flows and report the weights.
    Fit {
        model: PathBuf,
        /// Use plain interventional distributions instead of scaled flows.
        #[arg(long)]
        no_scaling: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// CSV with one row per (node, input).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rank unfair edges by weighted unfairness and potential.
    Prioritize {
        model: PathBuf,
        /// Sensitive setting as NODE=LABEL; repeat for several nodes.
        #[arg(long, required = true)]
        sensitive: Vec<String>,
        /// Decision value as NODE=LABEL.
        #[arg(long)]
        decision: String,
        /// Weight of edge unfairness in the priority score.
        #[arg(long, default_value_t = 0.5)]
        wu: f64,
        /// Weight of potential in the priority score.
        #[arg(long, default_value_t = 0.5)]
        wp: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Minimize unfair-edge weights while keeping the joint distribution.
    Debias {
        model: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        utility_weight: f64,
        /// Decision value as NODE=LABEL for the summary; defaults to the last
        /// value of the last node in topological order.
        #[arg(long)]
        decision: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// CSV of the new joint distribution.
        #[arg(long)]
        out: PathBuf,
        /// Also write the de-biased network as a model file.
        #[arg(long)]
        model_out: Option<PathBuf>,
    },
    /// Run a synthetic experiment on the bail graph and write its CSV.
    Experiment {
        #[arg(value_enum)]
        name: ExperimentName,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = ".")]
        outdir: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ExperimentName {
    Mse,
    Finite,
    Probe,
}

fn configure_threads() -> CliResult<()> {
    let Ok(v) = std::env::var("CEA_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("CEA_THREADS must be a positive integer, got `{v}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(e.to_string()))
}

fn run(cli: Cli) -> CliResult<String> {
    configure_threads()?;
    match cli.command {
        Command::Fit {
            model,
            no_scaling,
            seed,
            out,
        } => commands::fit(FitArgs {
            model: &model,
            no_scaling,
            seed,
            out: out.as_deref(),
        }),
        Command::Prioritize {
            model,
            sensitive,
            decision,
            wu,
            wp,
            seed,
            out,
        } => commands::prioritize(PrioritizeArgs {
            model: &model,
            sensitive: &sensitive,
            decision: &decision,
            wu,
            wp,
            seed,
            out: out.as_deref(),
        }),
        Command::Debias {
            model,
            utility_weight,
            decision,
            seed,
            out,
            model_out,
        } => commands::debias(DebiasArgs {
            model: &model,
            utility_weight,
            decision: decision.as_deref(),
            seed,
            out: &out,
            model_out: model_out.as_deref(),
        }),
        Command::Experiment { name, seed, outdir } => {
            let which = match name {
                ExperimentName::Mse => Experiment::Mse,
                ExperimentName::Finite => Experiment::Finite,
                ExperimentName::Probe => Experiment::Probe,
            };
            commands::experiment(which, seed, &outdir)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
