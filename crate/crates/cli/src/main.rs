use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod config;
mod report;

use commands::{error_report, Overrides};
use config::Format;
use report::{emit, Failure, EXIT_CONFIG};

/// Bound states, hypervirial identities and Feynman-Hellmann checks for radial problems.
#[derive(Parser)]
#[command(name = "hvl", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve for one bound state and write it with sampled R(r).
    Solve(Args),
    /// Solve, then evaluate the identities listed under [[checks]].
    Check(Args),
    /// Solve across a range of one parameter.
    Scan(Args),
    /// Compare dE/dlambda with its expectation-value form.
    Fh(Args),
    /// Write a closed-form state and its moments.
    Oracle(Args),
}

#[derive(clap::Args)]
struct Args {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Replaces every check tolerance.
    #[arg(long)]
    tolerance: Option<f64>,
    /// Drops the boundary term from virial checks.
    #[arg(long)]
    disable_extra_term: bool,
}

fn run(name: &str, args: &Args) -> u8 {
    let cfg = match config::load(&args.config) {
        Ok(c) => c,
        Err(f) => return fail(name, args.out.as_deref(), &f),
    };
    let out = args.out.clone().or_else(|| cfg.output.path.clone());
    if let Some(t) = args.tolerance {
        if !(t.is_finite() && t > 0.0) {
            return fail(
                name,
                out.as_deref(),
                &Failure::config(format!("--tolerance must be positive, got {t}")),
            );
        }
    }
    let format = args.format.unwrap_or(cfg.output.format);
    let ov = Overrides {
        tolerance: args.tolerance,
        disable_extra_term: args.disable_extra_term,
    };
    let result = match name {
        "solve" => commands::solve(&cfg, format),
        "check" => commands::check(&cfg, format, ov),
        "scan" => commands::scan(&cfg, format, ov),
        "fh" => commands::fh(&cfg, format, ov),
        _ => commands::oracle(&cfg, format),
    };
    match result {
        Ok(o) => match emit(out.as_deref(), &o.bytes) {
            Ok(()) => o.exit_code,
            Err(f) => {
                eprintln!("hvl {name}: {}", f.message);
                f.exit_code
            }
        },
        Err(f) => fail(name, out.as_deref(), &f),
    }
}

fn fail(name: &str, out: Option<&std::path::Path>, f: &Failure) -> u8 {
    eprintln!("hvl {name}: error [{}]: {}", f.kind, f.message);
    if let Err(e) = emit(out, &error_report(name, f)) {
        eprintln!("hvl {name}: {}", e.message);
    }
    f.exit_code
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let (name, args) = match &cli.command {
        Command::Solve(a) => ("solve", a),
        Command::Check(a) => ("check", a),
        Command::Scan(a) => ("scan", a),
        Command::Fh(a) => ("fh", a),
        Command::Oracle(a) => ("oracle", a),
    };
    ExitCode::from(run(name, args))
}
