//! `ecopo`: corpus generation, training, evaluation, sweeps and heat maps.

mod commands;
mod config;
mod manifest;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use commands::{
    EvalArgs, GenCorpusArgs, GradCheckArgs, HeatmapArgs, SweepArgs, SynthArgs, TrainArgs,
};

#[derive(Debug, Parser)]
#[command(
    name = "ecopo",
    version,
    about = "Contrastive probability training for character-level spell correction"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample clean sentences and a confusion set from a synthetic language.
    Synth(SynthArgs),
    /// Inject confusion-set substitutions into clean text.
    GenCorpus(GenCorpusArgs),
    /// Train a model and write a checkpoint with its loss trace.
    Train(TrainArgs),
    /// Score a checkpoint: sentence-level metrics and wrong-correction taxonomy.
    Eval(EvalArgs),
    /// Train and score over a grid of K, lambda1 or lambda2 values and seeds.
    Sweep(SweepArgs),
    /// Export probabilities of chosen characters at one position as CSV.
    Heatmap(HeatmapArgs),
    /// Compare analytic gradients with central finite differences.
    GradCheck(GradCheckArgs),
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Synth(a) => commands::run_synth(&a),
        Command::GenCorpus(a) => commands::run_gen_corpus(&a),
        Command::Train(a) => commands::run_train(&a),
        Command::Eval(a) => commands::run_eval(&a),
        Command::Sweep(a) => commands::run_sweep(&a),
        Command::Heatmap(a) => commands::run_heatmap(&a),
        Command::GradCheck(a) => commands::run_grad_check(&a),
    }
}

fn one_line(message: &str) -> String {
    message.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => match e.kind() {
            ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            _ => {
                let text = e.to_string();
                let first = text.lines().next().unwrap_or("invalid arguments");
                let first = first.strip_prefix("error: ").unwrap_or(first);
                eprintln!("error: {}", one_line(first));
                return ExitCode::from(2);
            }
        },
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", one_line(&format!("{e:#}")));
            ExitCode::FAILURE
        }
    }
}
