use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

mod commands;
mod config;
mod report;

/// Batch verification runs for the HLS functional, its conformal symmetries
/// and inversion positivity.
#[derive(Debug, Parser)]
#[command(name = "confpos", version)]
struct Args {
    /// JSON run configuration
    #[arg(long)]
    config: PathBuf,
    /// directory receiving report.csv, summary.txt and any field CSVs
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// worker threads (defaults to one per core)
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    verbose: bool,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let level = if args.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    ExitCode::from(run(&args) as u8)
}

fn run(args: &Args) -> i32 {
    let cfg = match config::read_config(&args.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = args.threads {
        if n == 0 {
            eprintln!("error: --threads must be positive");
            return 2;
        }
        pool = pool.num_threads(n);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    log::info!("running {} with {} threads", cfg.command.as_str(), pool.current_num_threads());
    let outcome = pool.install(|| commands::run(&cfg, &args.out));
    let report = match outcome {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    if let Err(e) = report.write(&args.out, cfg.command.as_str()) {
        eprintln!("error: cannot write reports to {}: {e}", args.out.display());
        return 2;
    }
    for v in report.verdicts() {
        log::info!("{}: {}", v.check, if v.pass { "pass" } else { "fail" });
    }
    if report.passed() {
        0
    } else {
        1
    }
}
