use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hioco_cli::acceptance;
use hioco_cli::presets::{preset, NAMES};
use hioco_cli::runner::{plan, run_config, summary_table};
use hioco_cli::{CliError, ExperimentConfig};
use log::{error, info};

#[derive(Debug, Parser)]
#[command(name = "hioco", version, about = "Hierarchical online convex optimization simulator")]
struct Cli {
    /// Overrides the scenario seed (and with it every derived stream).
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,

    /// Built-in configuration used when no config file is given.
    #[arg(long, global = true, value_parser = clap::builder::PossibleValuesParser::new(NAMES))]
    preset: Option<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run every point of a configuration and write traces and reports.
    Run { config: Option<PathBuf> },
    /// As `run`, plus an aggregated comparison table `sweep.csv`.
    Sweep { config: Option<PathBuf> },
    /// Run the acceptance suite.
    Accept,
}

fn load(config: Option<&Path>, preset_name: Option<&str>, seed: Option<u64>) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match (config, preset_name) {
        (Some(path), None) => ExperimentConfig::load(path)?,
        (None, Some(name)) => preset(name)?,
        (Some(_), Some(_)) => {
            return Err(CliError::Config("give either a config file or --preset, not both".into()))
        }
        (None, None) => return Err(CliError::Config("a config file or --preset is required".into())),
    };
    if let Some(seed) = seed {
        info!("seed overridden: {} -> {seed}", cfg.scenario.seed);
        cfg.scenario.seed = seed;
    }
    Ok(cfg)
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Run { config } | Command::Sweep { config } => {
            let aggregate = matches!(cli.command, Command::Sweep { .. });
            let cfg = load(config.as_deref(), cli.preset.as_deref(), cli.seed)?;
            let plan = plan(cfg)?;
            info!("{} point(s), writing to {}", plan.points.len(), cli.out_dir.display());
            let summary = run_config(&plan, &cli.out_dir, aggregate)?;
            print!("{}", summary_table(&summary.outcomes));
            summary.into_result().map(|_| ())
        }
        Command::Accept => {
            let verdicts = acceptance::run_all();
            for v in &verdicts {
                println!("{}", v.line());
            }
            let failed: Vec<String> = verdicts.iter().filter(|v| !v.passed).map(|v| v.id.to_string()).collect();
            if failed.is_empty() {
                Ok(())
            } else {
                Err(CliError::Acceptance(format!("criteria {}", failed.join(", "))))
            }
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            error!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
