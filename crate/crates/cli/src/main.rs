mod args;
mod commands;

use std::io::Write;
use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = args::Cli::parse();
    if let Some(n) = cli.global.threads {
        if n == 0 {
            eprintln!("error: --threads must be positive");
            return ExitCode::from(2);
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().expect("thread pool is configured once");
    }
    let report = match commands::run(&cli) {
        Ok(r) => r,
        Err(f) => {
            eprintln!("error: {}", f.message());
            return ExitCode::from(f.code() as u8);
        }
    };
    let written = match &cli.global.out {
        Some(path) => std::fs::write(path, &report.text).map_err(|e| format!("cannot write {}: {e}", path.display())),
        None => std::io::stdout().lock().write_all(report.text.as_bytes()).map_err(|e| e.to_string()),
    };
    if let Err(e) = written {
        eprintln!("error: {e}");
        return ExitCode::from(1);
    }
    match report.failure {
        Some(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code() as u8)
        }
        None => ExitCode::SUCCESS,
    }
}
