use clap::Parser;
use oprisk::cli::{execute, Overrides};
use std::path::PathBuf;

/// Loss distribution approach engine for operational risk.
#[derive(Parser)]
#[command(version)]
struct Args {
    /// Run configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Master seed; overrides the configured one.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; overrides the configured one.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long)]
    threads: Option<usize>,
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let a = Args::parse();
    std::process::exit(execute(&a.config, &Overrides { seed: a.seed, out: a.out, threads: a.threads }));
}
