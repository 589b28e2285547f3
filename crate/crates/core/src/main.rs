use std::io::{self, BufRead, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use meadowcalc::cli::Session;

/// Exact probability calculus over the signed meadow of rationals.
#[derive(Parser)]
#[command(version)]
struct Args {
    /// Script to run in batch mode; reads commands from stdin when absent.
    script: Option<PathBuf>,
    /// Largest event space accepted by `check`, `search` and `laws ba`.
    #[arg(long, default_value_t = 3)]
    max_atoms: usize,
    /// Seed for `random pf`.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let mut session = Session::new(args.max_atoms, args.seed);
    match args.script {
        Some(path) => {
            let text = match std::fs::read_to_string(&path) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("cannot read {}: {e}", path.display());
                    return ExitCode::from(2);
                }
            };
            let report = session.run_script(&text);
            print!("{}", report.text());
            if report.failed {
                ExitCode::FAILURE
            } else {
                ExitCode::SUCCESS
            }
        }
        None => {
            let stdin = io::stdin();
            let mut out = io::stdout();
            let mut failed = false;
            for line in stdin.lock().lines() {
                let Ok(line) = line else { break };
                for l in session.run_line(&line) {
                    failed |= l.starts_with("FAIL");
                    let _ = writeln!(out, "{l}");
                }
                let _ = out.flush();
            }
            if failed {
                ExitCode::FAILURE
            } else {
                ExitCode::SUCCESS
            }
        }
    }
}
