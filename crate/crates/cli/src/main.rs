//! `ssplain` — train a reference CNN, generate explanation masks for it,
//! and run the post-hoc evaluation pipeline, all from the command line.

mod commands;
mod common;
mod manifest;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{evaluate, explain, sanity, sweep, train};

#[derive(Parser)]
#[command(
    name = "ssplain",
    version,
    about = "Sparse and smooth explanation masks for image classifiers",
    propagate_version = true
)]
struct Cli {
    /// Worker threads for per-image parallel work (default: all cores).
    /// Results are identical for any worker count.
    #[arg(long, global = true)]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train the reference classifier on an IDX dataset
    Train(train::TrainArgs),
    /// Produce an explanation map for one image
    Explain(explain::ExplainArgs),
    /// Run insertion/deletion sweeps and metric curves over a test set
    Evaluate(evaluate::EvaluateArgs),
    /// Model-parameter-randomization sanity check
    Sanity(sanity::SanityArgs),
    /// Sparsity-level and ablation sweeps
    Sweep(sweep::SweepArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(workers) = cli.workers {
        if workers == 0 {
            eprintln!("error: --workers must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global()
        {
            eprintln!("error: cannot size worker pool: {e}");
            return ExitCode::from(1);
        }
    }

    let result = match cli.command {
        Command::Train(args) => train::run(args),
        Command::Explain(args) => explain::run(args),
        Command::Evaluate(args) => evaluate::run(args),
        Command::Sanity(args) => sanity::run(args),
        Command::Sweep(args) => sweep::run(args),
    };

    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}
