mod args;
mod commands;

use std::process::ExitCode;

use anyhow::Result;
use clap::Parser;

use args::{Cli, Command};
use commands::{Metadata, UsageError};

fn category(err: &anyhow::Error) -> &'static str {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<loopgas_core::Error>() {
            return e.category();
        }
        if cause.is::<UsageError>() {
            return "usage";
        }
        if cause.is::<std::io::Error>() {
            return "io";
        }
        if cause.is::<serde_json::Error>() {
            return "io";
        }
    }
    "internal"
}

fn run(cli: Cli) -> Result<()> {
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(UsageError("--threads must be at least 1".into()).into());
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()?;
    }
    let meta = Metadata {
        command_line: std::env::args().collect::<Vec<_>>().join(" "),
        seed: None,
    };
    match &cli.command {
        Command::Sample(a) => commands::sample(a, &meta),
        Command::Montecarlo(a) => commands::montecarlo(a, &meta),
        Command::Enumerate(a) => commands::enumerate(a, &meta),
        Command::Fit(a) => commands::fit(a, &meta),
        Command::Predict(a) => commands::predict(a, &meta),
        Command::Validate(a) => commands::validate_maps(a, &meta),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let cat = category(&e);
            eprintln!("error[{cat}]: {e:#}");
            if cat == "usage" {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
