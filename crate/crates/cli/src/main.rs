mod cmd;
mod failure;
mod files;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::failure::CliResult;

/// Segmentation-proposal geometry toolkit: label generation, proposal
/// extraction, RoI masking, benchmark rotation and evaluation.
///
/// Numeric options may also be set through SPOTGEOM_* environment
/// variables; flags take precedence.
#[derive(Debug, Parser)]
#[command(name = "spotgeom", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    Labelgen(cmd::labelgen::LabelgenArgs),
    Propose(cmd::propose::ProposeArgs),
    Maskroi(cmd::maskroi::MaskroiArgs),
    Rotate(cmd::rotate::RotateArgs),
    Eval(cmd::eval::EvalArgs),
    Visualize(cmd::visualize::VisualizeArgs),
}

fn dispatch(cli: &Cli) -> CliResult {
    match &cli.command {
        Command::Labelgen(a) => cmd::labelgen::run(a),
        Command::Propose(a) => cmd::propose::run(a),
        Command::Maskroi(a) => cmd::maskroi::run(a),
        Command::Rotate(a) => cmd::rotate::run(a),
        Command::Eval(a) => cmd::eval::run(a),
        Command::Visualize(a) => cmd::visualize::run(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code as u8)
        }
    }
}
