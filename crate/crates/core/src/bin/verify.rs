//! `verify <suite> [--backend exact|float] [--tol 1e-9] [--seed N] [--out report.json] [--format json|md]`
//!
//! Exit status: 0 when every check passes, 1 on a check failure, 2 on a usage or I/O error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use cubic_disc::reports::{run_suite, Backend, DEFAULT_TOL, SUITES};

#[derive(Clone, Copy, Debug, ValueEnum)]
enum BackendArg {
    Exact,
    Float,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Json,
    Md,
}

#[derive(Parser, Debug)]
#[command(name = "verify", version, about = "Run verification suites for cubic-discriminant structures")]
struct Args {
    /// One of: preliminaries, irrep, orbit, models, bianchi, all.
    suite: String,
    /// Scalar backend; defaults to $CUBIC_DISC_BACKEND, else exact.
    #[arg(long, value_enum)]
    backend: Option<BackendArg>,
    /// Relative tolerance (float backend only; default 1e-9).
    #[arg(long)]
    tol: Option<f64>,
    /// Seed for sampled checks.
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Write the report here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

fn usage_error(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("verify: {msg}");
    ExitCode::from(2)
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    if !SUITES.contains(&args.suite.as_str()) {
        return usage_error(format!("unknown suite {:?} (expected one of {})", args.suite, SUITES.join(", ")));
    }
    let backend = match args.backend {
        Some(BackendArg::Exact) => Backend::Exact,
        Some(BackendArg::Float) => Backend::Float,
        None => match std::env::var("CUBIC_DISC_BACKEND") {
            Ok(v) => match v.parse() {
                Ok(b) => b,
                Err(e) => return usage_error(e),
            },
            Err(_) => Backend::Exact,
        },
    };
    let tol = match (backend, args.tol) {
        (Backend::Exact, Some(_)) => return usage_error("--tol applies to the float backend only"),
        (Backend::Exact, None) => None,
        (Backend::Float, t) => Some(t.unwrap_or(DEFAULT_TOL)),
    };
    let report = match run_suite(&args.suite, backend, args.seed, tol) {
        Ok(r) => r,
        Err(e) => return usage_error(e),
    };
    let text = match args.format {
        Format::Json => report.to_json(),
        Format::Md => report.to_markdown(),
    };
    match &args.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, &text) {
                return usage_error(format!("cannot write {}: {e}", path.display()));
            }
            eprintln!("{}: {} ({} checks)", args.suite, if report.passed { "pass" } else { "FAIL" }, report.checks.len());
        }
        None => println!("{text}"),
    }
    if report.passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
