//! Batch front-end: reads a JSON run configuration, runs one stage or the
//! whole analysis, and writes JSON/CSV artifacts plus `summary.txt`.
//!
//! Exit status: 0 on success (Monte Carlo anomalies become warnings in the
//! summary), 2 for malformed input, 3 when the elicitation is infeasible,
//! 1 for anything else. Nothing is written unless every stage succeeded.

mod config;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use relbelief::prediction::PredictionProblem;

use config::{CliError, Needs, Overrides, RunConfig};
use run::Stage;

#[derive(Debug, Parser)]
#[command(
    name = "relbelief",
    version,
    about = "Relative belief inference for binary regression"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    #[command(flatten)]
    opts: Options,
}

#[derive(Debug, Args)]
struct Options {
    /// Run configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Master seed; overrides the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Monte Carlo sample size; overrides the configuration.
    #[arg(long, global = true)]
    samples: Option<usize>,

    /// Grid spacing and bias offset; overrides the configuration.
    #[arg(long, global = true)]
    delta: Option<f64>,

    /// Virtual-certainty level; overrides the elicitation file.
    #[arg(long, global = true)]
    gamma: Option<f64>,

    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,

    /// Widen inference grids whose plausible region reaches an end.
    #[arg(long, global = true)]
    extend_grid: bool,

    /// Number of independent random streams.
    #[arg(long, global = true)]
    chunks: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Elicit the normal prior and check its coverage.
    Elicit,
    /// Bias against and in favor of the configured hypothesis.
    CheckBias,
    /// Prior-data conflict tail probability.
    CheckConflict,
    /// Marginal relative belief inference for every coefficient.
    Infer,
    /// Prediction of future Bernoulli successes under a uniform prior.
    Predict {
        /// Observed trials.
        #[arg(long)]
        n: u64,
        /// Observed successes.
        #[arg(long)]
        sum_x: u64,
        /// Future trials.
        #[arg(long)]
        f: u64,
    },
    /// elicit, check-bias, check-conflict and infer in sequence.
    Pipeline,
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let opts = cli.opts;
    let artifacts = match cli.command {
        Command::Predict { n, sum_x, f } => {
            let problem =
                PredictionProblem::new(n, sum_x, f).map_err(|e| CliError::Usage(e.to_string()))?;
            run::predict(problem)?
        }
        command => {
            let (stage, needs) = match command {
                Command::Elicit => (
                    Stage::Elicit,
                    Needs {
                        data: false,
                        tables: false,
                        inference: false,
                        hypothesis: false,
                    },
                ),
                Command::CheckBias => (
                    Stage::CheckBias,
                    Needs {
                        data: true,
                        tables: true,
                        inference: false,
                        hypothesis: true,
                    },
                ),
                Command::CheckConflict => (
                    Stage::CheckConflict,
                    Needs {
                        data: true,
                        tables: true,
                        inference: false,
                        hypothesis: false,
                    },
                ),
                Command::Infer => (
                    Stage::Infer,
                    Needs {
                        data: true,
                        tables: false,
                        inference: true,
                        hypothesis: false,
                    },
                ),
                Command::Pipeline => (
                    Stage::Pipeline,
                    Needs {
                        data: true,
                        tables: true,
                        inference: true,
                        hypothesis: true,
                    },
                ),
                Command::Predict { .. } => unreachable!(),
            };
            let path = opts
                .config
                .as_deref()
                .ok_or_else(|| CliError::Usage("--config is required for this command".into()))?;
            let overrides = Overrides {
                seed: opts.seed,
                n_samples: opts.samples,
                chunks: opts.chunks,
                delta: opts.delta,
                gamma: opts.gamma,
                extend_grid: opts.extend_grid,
            };
            let cfg = RunConfig::load(path, &overrides, needs)?;
            run::run_stage(stage, &cfg)?
        }
    };
    let names: Vec<String> = artifacts.names().map(String::from).collect();
    artifacts.write_to(&opts.out)?;
    for name in names.iter().map(String::as_str).chain(["summary.txt"]) {
        println!("{}", opts.out.join(name).display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
