use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use dropout_lab::evaluation::ClassifierId;
use dropout_lab::harness::{self, RunConfig, TaskId};
use dropout_lab::{Error, Result};

/// Temporal dropout-prediction experiment harness.
#[derive(Parser)]
#[command(name = "dropout-lab", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the state-prediction grid (has the user dropped out by week w?).
    State(RunArgs),
    /// Run the exact-week grid (does the user drop out in week w?).
    Exactweek(RunArgs),
    /// Run the feature-importance experiment (AdaBoost, filtered cohort).
    Importance(RunArgs),
    /// Generate the synthetic cohort and write its CSV logs + JSON.
    Synth(RunArgs),
    /// Run every task in the configured task set.
    All(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Configuration file (`key = value` lines; see the README).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed, overriding the config file.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory, overriding the config file.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated subset of logistic,forest,adaboost.
    #[arg(long)]
    classifiers: Option<String>,
    /// Disable SMOTE for every task.
    #[arg(long)]
    no_smote: bool,
    /// Include the features dropped during the original study.
    #[arg(long)]
    include_dropped_features: bool,
}

fn build_config(args: &RunArgs) -> Result<RunConfig> {
    let mut config = match &args.config {
        Some(path) => harness::load_config(path)?,
        None => RunConfig::synthetic_default(PathBuf::from("results"), 0),
    };
    if let Some(seed) = args.seed {
        config.seed = seed;
        if let harness::InputMode::Synthetic(synth) = &mut config.input {
            synth.seed = seed;
        }
    }
    if let Some(out) = &args.out {
        config.out_dir = out.clone();
    }
    if let Some(list) = &args.classifiers {
        let classifiers: Option<Vec<ClassifierId>> = list
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(ClassifierId::parse)
            .collect();
        config.classifiers = classifiers.ok_or_else(|| {
            Error::InvalidConfig(format!("bad --classifiers list {list:?}"))
        })?;
        if config.classifiers.is_empty() {
            return Err(Error::InvalidConfig("empty --classifiers list".into()));
        }
    }
    if args.no_smote {
        config.smote_override = Some(false);
    }
    if args.include_dropped_features {
        config.features.include_dropped = true;
    }
    Ok(config)
}

fn run_command(command: Command) -> Result<()> {
    let (args, tasks) = match &command {
        Command::State(a) => (a, Some(vec![TaskId::StateGrid])),
        Command::Exactweek(a) => (a, Some(vec![TaskId::ExactWeekGrid])),
        Command::Importance(a) => (a, Some(vec![TaskId::Importance])),
        Command::Synth(a) => (a, None),
        Command::All(a) => (a, Some(Vec::new())), // keep the configured set
    };
    let mut config = build_config(args)?;
    match tasks {
        None => harness::run_synth(&config),
        Some(tasks) => {
            if !tasks.is_empty() {
                config.tasks = tasks;
            }
            harness::run(&config)
        }
    }
}

fn main() {
    if let Ok(value) = std::env::var("DROPOUT_LAB_THREADS") {
        match value.parse::<usize>() {
            Ok(n) if n >= 1 => {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global();
            }
            _ => {
                eprintln!("error: DROPOUT_LAB_THREADS must be a positive integer, got {value:?}");
                std::process::exit(2);
            }
        }
    }
    let cli = Cli::parse();
    if let Err(e) = run_command(cli.command) {
        eprintln!("error: {e}");
        std::process::exit(harness::exit_code(&e));
    }
}
