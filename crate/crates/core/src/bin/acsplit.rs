use std::path::PathBuf;
use std::process::ExitCode;

use acsplit::cli::{self, Command, RunOptions};
use clap::{Parser, ValueEnum};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Cmd {
    /// Randomised checks of the flow and increment-map bounds.
    Lemmas,
    /// One trajectory with snapshots.
    Simulate,
    /// Mean-square convergence table on coupled paths.
    Strong,
    /// Weak-error increments and telescoped totals.
    Weak,
    /// Exceedance probabilities of the sup-norm thresholds.
    Localize,
}

#[derive(Debug, Parser)]
#[command(
    name = "acsplit",
    version,
    about = "Splitting schemes for the stochastic Allen-Cahn equation"
)]
struct Args {
    #[arg(value_enum)]
    command: Cmd,
    /// key = value configuration file
    #[arg(long)]
    config: PathBuf,
    /// Output directory (created if missing)
    #[arg(long)]
    out: PathBuf,
    /// Overrides master_seed from the config
    #[arg(long)]
    seed: Option<u64>,
    /// Exit with status 1 when the command's acceptance thresholds fail
    #[arg(long)]
    check: bool,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let command = match args.command {
        Cmd::Lemmas => Command::Lemmas,
        Cmd::Simulate => Command::Simulate,
        Cmd::Strong => Command::Strong,
        Cmd::Weak => Command::Weak,
        Cmd::Localize => Command::Localize,
    };
    let status = cli::run(&RunOptions {
        command,
        config: args.config,
        out_dir: args.out,
        seed: args.seed,
        check: args.check,
    });
    ExitCode::from(status as u8)
}
