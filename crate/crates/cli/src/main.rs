use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use margin_lab_cli::{execute, load_config, output_dir, Command, Outcome, EXIT_CONFIG, EXIT_OK, EXIT_VERIFY_FAILED};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Sub {
    Gen,
    Run,
    RunNn,
    Perceptron,
    Verify,
    Bench,
}

impl From<Sub> for Command {
    fn from(s: Sub) -> Self {
        match s {
            Sub::Gen => Command::Gen,
            Sub::Run => Command::Run,
            Sub::RunNn => Command::RunNn,
            Sub::Perceptron => Command::Perceptron,
            Sub::Verify => Command::Verify,
            Sub::Bench => Command::Bench,
        }
    }
}

/// Adaptive-stepsize gradient descent on separable data: runs, benchmarks
/// and bound verification.
#[derive(Debug, Parser)]
#[command(name = "margin-lab", version)]
struct Args {
    #[arg(value_enum)]
    command: Sub,
    /// `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (default: the config's `out`, else `.`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the seed of random datasets and random data orders.
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            return ExitCode::from(code as u8);
        }
    };
    if let Some(n) = std::env::var("MARGIN_LAB_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        if n > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
    let mut cfg = match load_config(args.command.into(), args.config.as_deref()) {
        Ok(c) => c,
        Err(errs) => {
            for e in errs {
                eprintln!("config error: {e}");
            }
            return ExitCode::from(EXIT_CONFIG as u8);
        }
    };
    if let Some(seed) = args.seed {
        cfg.apply_seed(seed);
    }
    let dir = output_dir(&cfg, args.out);
    match execute(&cfg, &dir) {
        Ok((Outcome::Success, _)) => ExitCode::from(EXIT_OK as u8),
        Ok((Outcome::VerificationFailed, _)) => ExitCode::from(EXIT_VERIFY_FAILED as u8),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_CONFIG as u8)
        }
    }
}
