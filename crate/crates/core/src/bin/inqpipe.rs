use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use inqpipe::config::{BackendKind, Overrides, RunConfig, StrategyName};
use inqpipe::pipeline::{cmd_agreement, cmd_evaluate, cmd_generate, cmd_pairs, cmd_report, cmd_select};

#[derive(Parser)]
#[command(name = "inqpipe", version, about = "Inquisitive question generation pipeline")]
#[command(after_help = "The service base URL is read from `endpoint` in the config or from INQPIPE_ENDPOINT.")]
struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// stub | service
    #[arg(long, global = true)]
    backend: Option<BackendKind>,
    /// Repeatable: base, span, type_s, type_r, type_o, per_type.
    #[arg(long = "strategy", global = true)]
    strategies: Vec<StrategyName>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate questions for the configured corpus split.
    Generate,
    /// Pick one question per instance and strategy.
    Select,
    /// Automatic metrics for one or more selection runs.
    Evaluate {
        /// Selection files, one per run (default: from the config).
        selections: Vec<PathBuf>,
    },
    /// Build ranker training pairs from expert rankings.
    Pairs,
    /// Inter-annotator agreement.
    Agreement,
    /// Write the table bundle.
    Report,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let mut config = match &cli.config {
        Some(p) => match RunConfig::load(p) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
        },
        None => RunConfig::default(),
    };
    config.apply(&Overrides {
        seed: cli.seed,
        backend: cli.backend,
        strategies: cli.strategies,
        out: cli.out,
    });
    let result = match &cli.command {
        Command::Generate => cmd_generate(&config),
        Command::Select => cmd_select(&config),
        Command::Evaluate { selections } => cmd_evaluate(&config, selections),
        Command::Pairs => cmd_pairs(&config),
        Command::Agreement => cmd_agreement(&config),
        Command::Report => cmd_report(&config),
    };
    match result {
        Ok(outcome) => {
            for p in &outcome.outputs {
                println!("{}", p.display());
            }
            if outcome.is_clean() {
                ExitCode::SUCCESS
            } else {
                eprintln!("{}: {} error(s) recorded", outcome.command, outcome.errors.len());
                ExitCode::FAILURE
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
