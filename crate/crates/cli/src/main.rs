use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use pilotgeom::simulate::ReuseMode;
use pilotgeom_cli::config::{parse_config, Command, Overrides};
use pilotgeom_cli::{commands, init_threads, CliError};

#[derive(Debug, Parser)]
#[command(
    name = "pilotgeom",
    version,
    about = "Fractional pilot reuse analysis and Monte Carlo validation"
)]
struct Args {
    #[arg(value_enum)]
    command: Command,
    /// JSON configuration; omitted or empty means defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    realizations: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_parser = parse_mode)]
    mode: Option<ReuseMode>,
}

fn parse_mode(s: &str) -> Result<ReuseMode, String> {
    s.parse().map_err(|e: pilotgeom::Error| e.to_string())
}

fn run(args: Args) -> Result<bool, CliError> {
    init_threads()?;
    let over = Overrides {
        seed: args.seed,
        realizations: args.realizations,
        mode: args.mode,
        output_dir: args.out,
    };
    let spec = parse_config(args.command, args.config.as_deref(), &over)?;
    let outcome = commands::run(&spec)?;
    for f in &outcome.files {
        println!("{}", f.display());
    }
    Ok(outcome.all_passed)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Args::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            log::error!("one or more checks failed");
            ExitCode::FAILURE
        }
        Err(e) => {
            log::error!("{e}");
            ExitCode::from(2)
        }
    }
}
