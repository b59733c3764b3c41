//! Runs an experiment configuration the way the command line does.
//!
//! cargo run --example run_config -- configs/chain.toml simulate

use std::path::PathBuf;

use rendezvous::experiment::{run, Command, ExperimentConfig, Overrides};

fn main() -> rendezvous::Result<()> {
    let mut args = std::env::args().skip(1);
    let config = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs/chain.toml"));
    let command = match args.next().as_deref() {
        None | Some("simulate") => Command::Simulate,
        Some("solve") => Command::Solve,
        Some("beliefs") => Command::Beliefs,
        Some("tradeoff") => Command::Tradeoff,
        Some("compare") => Command::Compare,
        Some(other) => panic!("unknown command {other}"),
    };
    let cfg = ExperimentConfig::from_path(&config)?;
    let out = std::env::temp_dir().join(format!("rendezvous-{}", command.name()));
    let overrides = Overrides {
        episodes: Some(500),
        out: Some(out),
        ..Default::default()
    };
    for file in run(command, &cfg, &overrides)? {
        println!("{}", file.display());
    }
    Ok(())
}
