use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fiberalign::fiber::JoinEngine;

mod commands;
mod config;
mod error;

use config::{Overrides, RunConfig, Settings};
use error::CliResult;

#[derive(Debug, Parser)]
#[command(name = "fiberalign", version, about = "Approximate fiber products and subspace decompositions for paired embeddings")]
struct Cli {
    /// JSON run configuration; flags take precedence over its fields
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory (created if missing)
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[arg(long, global = true)]
    engine: Option<JoinEngine>,

    #[arg(long, global = true)]
    eps: Option<f64>,

    #[arg(long, global = true)]
    eta: Option<f64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a synthetic Gaussian or planted-decomposition corpus
    Gen(commands::gen::GenArgs),
    /// Encode patch and token files and embed them into a corpus
    Embed(commands::embed::EmbedArgs),
    /// ε-join the image and text points of a corpus
    Join(commands::join::JoinArgs),
    /// Size of the approximate fiber product for Gaussian densities
    Size(commands::size::SizeArgs),
    /// Run the property checks and write one JSON report
    Verify(commands::verify::VerifyArgs),
    /// Learn a shared/image/text decomposition
    Decompose(commands::decompose::DecomposeArgs),
}

fn run(cli: Cli) -> CliResult<()> {
    let cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let settings = Settings::resolve(
        cfg,
        Overrides {
            seed: cli.seed,
            out: cli.out,
            engine: cli.engine,
            epsilon: cli.eps,
            eta: cli.eta,
        },
    )?;
    commands::ensure_dir(&settings.out)?;
    match cli.command {
        Command::Gen(a) => commands::gen::run(&settings, &a),
        Command::Embed(a) => commands::embed::run(&settings, &a),
        Command::Join(a) => commands::join::run(&settings, &a),
        Command::Size(a) => commands::size::run(&settings, &a),
        Command::Verify(a) => commands::verify::run(&settings, &a),
        Command::Decompose(a) => commands::decompose::run(&settings, &a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
