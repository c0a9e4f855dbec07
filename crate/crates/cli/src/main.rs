//! `onsager`: command-line front end for the spectral energy-equality diagnostics.

mod commands;
mod manifest;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use onsager_core::Error;

#[derive(Debug, Parser)]
#[command(name = "onsager", version, about = "Spectral diagnostics for energy equality of 3D periodic flows")]
struct Cli {
    /// Print the embedded tolerances and constants, then exit.
    #[arg(long)]
    print_defaults: bool,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the pseudo-spectral solver and write a trajectory directory.
    Simulate(commands::SimulateArgs),
    /// Flux, dissipation and truncated balance residuals per (t, q).
    Flux(commands::FluxArgs),
    /// Besov norm series of a trajectory and its time norm.
    Norms(commands::NormsArgs),
    /// Region label and criterion verdicts at one (beta, p).
    Classify(commands::ClassifyArgs),
    /// Region labels over a rational grid of (1/beta, 1/p).
    Regions(commands::RegionsArgs),
    /// Cascade heuristic table.
    Cascade(commands::CascadeArgs),
    /// Write one synthetic snapshot.
    Synth(commands::SynthArgs),
    /// Fit a norm series against the Type-I rate.
    CheckType1(commands::CheckType1Args),
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io { .. } | Error::Format { .. } => 2,
        _ => 1,
    }
}

fn configure_threads() -> Result<(), Error> {
    let Ok(v) = std::env::var("ONSAGER_THREADS") else { return Ok(()) };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::Precondition(format!("ONSAGER_THREADS must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Precondition(format!("thread pool: {e}")))
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
    if cli.print_defaults {
        print!("{}", onsager_core::defaults::DEFAULTS_TOML);
        return ExitCode::SUCCESS;
    }
    let Some(command) = cli.command else {
        eprintln!("error: a subcommand is required (see --help)");
        return ExitCode::from(1);
    };
    let result = configure_threads().and_then(|()| match command {
        Command::Simulate(a) => commands::simulate(a),
        Command::Flux(a) => commands::flux(a),
        Command::Norms(a) => commands::norms(a),
        Command::Classify(a) => commands::classify(a),
        Command::Regions(a) => commands::regions(a),
        Command::Cascade(a) => commands::cascade(a),
        Command::Synth(a) => commands::synth(a),
        Command::CheckType1(a) => commands::check_type1(a),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
