//! `sgkit <command> --config <path> [--seed N] [--out <dir>]`
//!
//! Exit codes: 0 success, 1 verification failure (a check ran and
//! reported "no"), 2 input error (missing/malformed files or config).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use sgkit_cli::commands;
use sgkit_cli::load_run;

#[derive(Parser)]
#[command(name = "sgkit", version, about = "Scene-graph generation toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Run-configuration JSON file.
    #[arg(long)]
    config: PathBuf,
    /// Override the config file's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate pseudo-label triplets from captions and score them
    /// against the planted truth.
    GenerateTargets(CommonArgs),
    /// Run the two-pass interaction-guided query selection per image.
    SelectQueries(CommonArgs),
    /// Hungarian-match prediction nodes to ground-truth nodes per image.
    Match(CommonArgs),
    /// Evaluate the distillation losses on stored edge-feature sets.
    DistillCheck(CommonArgs),
    /// Compare every analytic gradient against finite differences.
    Gradcheck(CommonArgs),
    /// Score predictions against ground truth (recall@K, mean recall@K).
    Evaluate(CommonArgs),
}

impl Command {
    fn common(&self) -> &CommonArgs {
        match self {
            Command::GenerateTargets(a)
            | Command::SelectQueries(a)
            | Command::Match(a)
            | Command::DistillCheck(a)
            | Command::Gradcheck(a)
            | Command::Evaluate(a) => a,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let args = cli.command.common();
    let run = match load_run(&args.config, args.seed, args.out.clone()) {
        Ok(run) => run,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let result = match &cli.command {
        Command::GenerateTargets(_) => commands::cmd_generate_targets(&run),
        Command::SelectQueries(_) => commands::cmd_select_queries(&run),
        Command::Match(_) => commands::cmd_match(&run),
        Command::DistillCheck(_) => commands::cmd_distill_check(&run),
        Command::Gradcheck(_) => commands::cmd_gradcheck(&run),
        Command::Evaluate(_) => commands::cmd_evaluate(&run),
    };
    match result {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
