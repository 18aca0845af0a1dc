mod cmd;
mod config;
mod failure;
mod output;
mod pipeline;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};

use cmd::classify::ClassifyArgs;
use cmd::evaluate::EvaluateArgs;
use cmd::prompt::PromptArgs;
use config::PipelineConfig;
use pipeline::Context;

/// Chapter-level subject classification for scanned theses and dissertations.
#[derive(Debug, Parser)]
#[command(name = "etdchap", version)]
struct Cli {
    /// Pipeline configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads; 0 uses one per core.
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    /// More log output (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Detect and validate chapter page ranges.
    Segment,
    /// Write filtered per-segment text.
    Extract,
    /// Fit the native linear classifier on a stratified split.
    Train,
    /// Label chapters with the native model, a score endpoint or an LLM.
    Classify(ClassifyArgs),
    /// Render prompts (and optionally instruction-tuning records).
    Prompt(PromptArgs),
    /// Score a prediction file against ground truth.
    Evaluate(EvaluateArgs),
    /// Collect evaluated runs into one table.
    Report,
}

fn run(cli: Cli) -> Result<()> {
    let Some(path) = cli.config else {
        return Err(failure::fail(failure::Failure::Config, "--config is required"));
    };
    let cfg = PipelineConfig::load(&path)?;
    let ctx = Context::load(cfg, cli.jobs)?;
    match &cli.command {
        Command::Segment => cmd::segment::run(&ctx),
        Command::Extract => cmd::extract::run(&ctx),
        Command::Train => cmd::train::run(&ctx),
        Command::Classify(a) => cmd::classify::run(&ctx, a),
        Command::Prompt(a) => cmd::prompt::run(&ctx, a),
        Command::Evaluate(a) => cmd::evaluate::run(&ctx, a),
        Command::Report => cmd::report::run(&ctx),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(failure::exit_code(&err))
        }
    }
}
