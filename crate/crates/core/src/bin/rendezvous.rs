use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rendezvous::experiment::{run, Command, ExperimentConfig, Overrides};

#[derive(Parser)]
#[command(version, about = "Rendezvous sensing experiments: solve, simulate and tabulate")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve the grid Bellman recursion and export the value grid
    Solve(Args),
    /// Belief paths of nested periodic policies and wait-and-watch on one adverse path
    Beliefs(Args),
    /// Information gain and survival of the first sample against its date
    Tradeoff(Args),
    /// Risk of every configured policy
    Simulate(Args),
    /// Paired risk differences between configured policies
    Compare(Args),
}

#[derive(clap::Args)]
struct Args {
    /// Experiment configuration (TOML)
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Output directory, overriding `output.dir`
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Master seed, overriding `run.seed`
    #[arg(long)]
    seed: Option<u64>,
    /// Episode count, overriding `run.episodes`
    #[arg(long)]
    episodes: Option<u64>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let (command, args) = match cli.command {
        Cmd::Solve(a) => (Command::Solve, a),
        Cmd::Beliefs(a) => (Command::Beliefs, a),
        Cmd::Tradeoff(a) => (Command::Tradeoff, a),
        Cmd::Simulate(a) => (Command::Simulate, a),
        Cmd::Compare(a) => (Command::Compare, a),
    };
    let overrides = Overrides {
        seed: args.seed,
        episodes: args.episodes,
        out: args.out,
    };
    let result = ExperimentConfig::from_path(&args.config).and_then(|cfg| run(command, &cfg, &overrides));
    match result {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 1 } else { 2 })
        }
    }
}
