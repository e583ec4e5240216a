//! `printlab` command-line interface.
//!
//! Exit status: 0 on success, 1 when inputs fail validation, 2 on any other
//! failure.

mod consistency;
mod error;
mod hallucination;
mod metrics;
mod pipeline;
mod stylebank;

use std::path::Path;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

pub use error::CliError;

pub type CliResult = Result<(), CliError>;

#[derive(Debug, Parser)]
#[command(name = "printlab", version, about = "Identity-consistency evaluation for generated fingerprints")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Latent style bank ingest and queries.
    #[command(subcommand)]
    Stylebank(stylebank::StylebankCmd),
    /// Minutiae matching and local error reports.
    #[command(subcommand)]
    Consistency(consistency::ConsistencyCmd),
    /// Foreground mask IoU and hallucination reports.
    #[command(subcommand)]
    Hallucination(hallucination::HallucinationCmd),
    /// Verification and quality analytics.
    #[command(subcommand)]
    Metrics(metrics::MetricsCmd),
    /// Run a full evaluation manifest.
    Evaluate(pipeline::EvaluateArgs),
    /// Placement transforms.
    #[command(subcommand)]
    Placement(pipeline::PlacementCmd),
    /// Check a manifest for missing files and inconsistent inputs.
    Validate(pipeline::ValidateArgs),
    /// Write a synthetic evaluation corpus with known defects.
    Synth(pipeline::SynthArgs),
    /// Start the annotation service.
    Serve(pipeline::ServeArgs),
}

pub(crate) fn print_json<T: Serialize>(value: &T) -> CliResult {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

pub(crate) fn write_or_print(out: Option<&Path>, text: &str) -> CliResult {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub(crate) fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Stylebank(c) => stylebank::run(c),
        Command::Consistency(c) => consistency::run(c),
        Command::Hallucination(c) => hallucination::run(c),
        Command::Metrics(c) => metrics::run(c),
        Command::Evaluate(a) => pipeline::evaluate(a),
        Command::Placement(c) => pipeline::placement(c),
        Command::Validate(a) => pipeline::validate(a),
        Command::Synth(a) => pipeline::synth(a),
        Command::Serve(a) => pipeline::serve(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("printlab: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
