use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use debias_cli::causal::{cmd_verify_causal, CausalArgs};
use debias_cli::config::load_config;
use debias_cli::report::{cmd_report, ReportArgs, ReportFormat};
use debias_cli::run::cmd_run;
use eval_harness::metrics::Aggregation;

#[derive(Parser)]
#[command(
    name = "debias",
    about = "Evaluates LLM debiasing prompt strategies and verifies the selection-mechanism model behind them"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum AggregationArg {
    Mean,
    Median,
}

impl From<AggregationArg> for Aggregation {
    fn from(a: AggregationArg) -> Self {
        match a {
            AggregationArg::Mean => Aggregation::Mean,
            AggregationArg::Median => Aggregation::Median,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Execute an evaluation run described by a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Check the decoupling property on a graph file, or test a single
    /// conditional-independence claim.
    VerifyCausal {
        #[arg(long)]
        graph: PathBuf,
        /// Role-map JSON file; overrides roles embedded in the graph file.
        #[arg(long)]
        roles: Option<PathBuf>,
        /// Search this many random prompt-selection tables for the lowest
        /// worst-premise mutual information.
        #[arg(long)]
        trials: Option<u32>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Two comma-separated variables to test for independence,
        /// e.g. "x1,x2"; exits nonzero when they come out dependent.
        #[arg(long)]
        independent: Option<String>,
        /// Evidence for the independence test, repeatable, each "node=value".
        #[arg(long)]
        given: Vec<String>,
        /// Mutual-information threshold in nats.
        #[arg(long, default_value_t = causal_core::tol::INDEPENDENCE_THRESHOLD)]
        threshold: f64,
    },
    /// Rebuild reports from a records file without querying any model.
    Report {
        #[arg(long)]
        records: PathBuf,
        #[arg(long, value_enum, default_value_t = ReportFormat::Both)]
        format: ReportFormat,
        /// Output directory; defaults to the records file's directory.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = AggregationArg::Mean)]
        aggregation: AggregationArg,
    },
}

fn dispatch(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Run { config } => {
            let config = load_config(&config)?;
            let outcome = cmd_run(&config)?;
            println!(
                "run {}: {} records, {} report sections -> {}",
                config.run_id(),
                outcome.records.len(),
                outcome.report.sections.len(),
                outcome.run_dir.display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::VerifyCausal {
            graph,
            roles,
            trials,
            seed,
            independent,
            given,
            threshold,
        } => {
            let outcome = cmd_verify_causal(&CausalArgs {
                graph,
                roles,
                trials,
                seed,
                independent,
                given,
                threshold,
            })?;
            print!("{}", outcome.text);
            Ok(if outcome.ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
        Command::Report {
            records,
            format,
            out,
            aggregation,
        } => {
            let written = cmd_report(&ReportArgs {
                records,
                format,
                out,
                aggregation: aggregation.into(),
            })?;
            for path in written {
                println!("wrote {}", path.display());
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
