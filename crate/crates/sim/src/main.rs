use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use vxsim::config::{parse_unvalidated, Mode};
use vxsim::run::{run, RunOptions};

/// Five-level condensate vortex simulator.
#[derive(Debug, Parser)]
#[command(name = "sim", version)]
struct Args {
    /// Configuration file in `key = value` form.
    #[arg(long)]
    config: PathBuf,
    /// Overrides `run.mode`.
    #[arg(long)]
    mode: Option<Mode>,
    /// Overrides `run.output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Accept a time step above the stability advisory.
    #[arg(long)]
    override_dt: bool,
}

fn threads() -> Result<usize, String> {
    let available = std::thread::available_parallelism().map_or(1, |n| n.get());
    match std::env::var("VXSIM_THREADS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(n.min(available.max(1))),
            _ => Err(format!("VXSIM_THREADS must be a positive integer, got `{v}`")),
        },
        Err(_) => Ok(available),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let args = Args::parse();
    let text = match std::fs::read_to_string(&args.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {}: {e}", args.config.display());
            return ExitCode::from(2);
        }
    };
    let mut parsed = match parse_unvalidated(&text) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {}: {e}", args.config.display());
            return ExitCode::from(2);
        }
    };
    if let Some(mode) = args.mode {
        parsed.config.run.mode = mode;
    }
    if let Some(out) = args.out {
        parsed.config.run.output_dir = out;
    }
    if args.override_dt {
        parsed.config.run.override_dt = true;
    }
    let config = match parsed.validate() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {}: {e}", args.config.display());
            return ExitCode::from(2);
        }
    };
    let threads = match threads() {
        Ok(n) => n,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match run(&config, RunOptions { threads }) {
        Ok(outcome) => {
            print!("{}", outcome.report.to_text());
            for f in &outcome.failures {
                eprintln!("invariant failed: {f}");
            }
            ExitCode::from(outcome.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
