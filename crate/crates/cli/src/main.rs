//! `persgrad`: train, evaluate and monitor with persistence-gradient features.
//!
//! Exit status: 0 success, 2 input or configuration error, 3 resource limit,
//! 4 numeric divergence of the flow.

mod commands;
mod config;
mod data;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::Overrides;

#[derive(Parser)]
#[command(name = "persgrad", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a pipeline on labeled records and write model.json
    Train {
        #[command(flatten)]
        o: Overrides,
        /// Output directory
        #[arg(long)]
        out: PathBuf,
    },
    /// Classification report of a saved model on labeled records
    Evaluate {
        #[command(flatten)]
        o: Overrides,
        /// model.json written by train
        #[arg(long)]
        model: PathBuf,
        /// Output directory
        #[arg(long)]
        out: PathBuf,
    },
    /// Stratified k-fold accuracies
    Crossval {
        #[command(flatten)]
        o: Overrides,
        /// Output directory
        #[arg(long)]
        out: PathBuf,
    },
    /// Per-window true and predicted event ratios
    Timeseries {
        #[command(flatten)]
        o: Overrides,
        /// model.json written by train
        #[arg(long)]
        model: Option<PathBuf>,
        /// Use the true labels as predictions
        #[arg(long)]
        oracle: bool,
        /// Output directory
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate blob datasets and a ratio scenario
    Synth {
        #[command(flatten)]
        o: Overrides,
        /// Output directory
        #[arg(long)]
        out: PathBuf,
    },
    /// Wall-clock time of flow plus training per model and size
    Benchmark {
        #[command(flatten)]
        o: Overrides,
        /// Output directory
        #[arg(long)]
        out: PathBuf,
    },
    /// Persistence diagram of the input cloud, optionally after the flow
    DiagramDump {
        #[command(flatten)]
        o: Overrides,
        /// Highest homology dimension (0, 1 or 2)
        #[arg(long)]
        max_dim: Option<usize>,
        /// Also dump the diagram of the evolved cloud and the loss trace
        #[arg(long)]
        after_flow: bool,
        /// Output directory
        #[arg(long)]
        out: PathBuf,
    },
}

/// A failed command: message for stderr plus exit status.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn config(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<persgrad::Error> for Failure {
    fn from(e: persgrad::Error) -> Self {
        Self {
            code: e.exit_code() as u8,
            message: e.to_string(),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Train { o, out } => commands::train(o, out),
        Command::Evaluate { o, model, out } => commands::evaluate(o, model, out),
        Command::Crossval { o, out } => commands::crossval(o, out),
        Command::Timeseries { o, model, oracle, out } => commands::timeseries(o, model.as_deref(), *oracle, out),
        Command::Synth { o, out } => commands::synth(o, out),
        Command::Benchmark { o, out } => commands::benchmark(o, out),
        Command::DiagramDump {
            o,
            max_dim,
            after_flow,
            out,
        } => commands::diagram_dump(o, *max_dim, *after_flow, out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
