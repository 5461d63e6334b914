//! `rapid`: extract, check, evaluate and benchmark RAPiD features.

mod commands;
mod error;
mod settings;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::error::CliError;
use crate::settings::ConfigArgs;

#[derive(Debug, Parser)]
#[command(
    name = "rapid",
    version,
    about = "Range-aware pointwise distance distribution features for LiDAR scans"
)]
struct Cli {
    #[command(flatten)]
    config: ConfigArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write ring (R-RAPiD) and, with labels, class (C-RAPiD) feature containers
    Extract(commands::extract::ExtractArgs),
    /// Recompute features under random rigid motions and report the deviation
    CheckInvariance(commands::invariance::InvarianceArgs),
    /// Per-class IoU and mIoU of prediction label files against ground truth
    Eval(commands::eval::EvalArgs),
    /// Time each extraction stage and the scaling over worker counts
    Bench(commands::bench::BenchArgs),
    /// Render one region's feature matrix as a grayscale PGM image
    Heatmap(commands::heatmap::HeatmapArgs),
    /// Write synthetic street scans with labels
    Synth(commands::synth::SynthArgs),
    /// Run the embedding forward pass, losses and channel fusion on a scan
    Embed(commands::embed::EmbedArgs),
    /// Print the resolved configuration as TOML
    Config,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let result = cli.config.resolve().and_then(|config| match cli.command {
        Command::Extract(args) => commands::extract::run(&args, &config),
        Command::CheckInvariance(args) => commands::invariance::run(&args, &config),
        Command::Eval(args) => commands::eval::run(&args),
        Command::Bench(args) => commands::bench::run(&args, &config),
        Command::Heatmap(args) => commands::heatmap::run(&args),
        Command::Synth(args) => commands::synth::run(&args, &config),
        Command::Embed(args) => commands::embed::run(&args, &config),
        Command::Config => {
            print!("{}", config.to_toml_string());
            Ok(())
        }
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("rapid: {e}");
            ExitCode::from(CliError::exit_code(&e) as u8)
        }
    }
}
