mod commands;
mod config;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use orbitdemand::domain::OperatorGroup;

use crate::commands::Ctx;
use crate::config::RunConfig;

/// Bad configuration or input that the user has to fix.
#[derive(Debug)]
pub struct InputError(pub String);

impl std::fmt::Display for InputError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InputError {}

#[derive(Debug, Clone, Copy, Default, ValueEnum)]
pub enum OperatorArg {
    Commercial,
    Civil,
    Defense,
    #[default]
    All,
}

impl OperatorArg {
    pub fn groups(self) -> Vec<OperatorGroup> {
        match self {
            Self::Commercial => vec![OperatorGroup::Commercial],
            Self::Civil => vec![OperatorGroup::Civil],
            Self::Defense => vec![OperatorGroup::Defense],
            Self::All => OperatorGroup::MODELED.to_vec(),
        }
    }
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Fit the shell-choice models and write one JSON file per operator.
    EstimateChoice,
    /// Fit the launch-total models with cross-validated ridge penalties.
    EstimateCount,
    /// Run the coupled model over a year range or a scenario file.
    Simulate,
    /// Run a counterfactual and its baseline and write both plus deltas.
    Scenario,
    /// Project from an observed state and compare with observations.
    Validate,
    /// Write a seeded synthetic dataset with its generating models.
    GenSynthetic,
}

#[derive(Debug, Clone, Parser)]
#[command(name = "orbitdemand", version, about = "Coupled orbital debris and launch demand model")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Run configuration (TOML); paths inside resolve against its directory.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t)]
    pub operator: OperatorArg,
    #[arg(long, global = true)]
    pub from: Option<i32>,
    #[arg(long, global = true)]
    pub to: Option<i32>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub spec: Option<PathBuf>,
    #[arg(long, global = true)]
    pub baseline: Option<PathBuf>,
}

fn is_input_error(err: &anyhow::Error) -> bool {
    use orbitdemand::Error as E;
    err.chain().any(|cause| {
        if cause.is::<InputError>() {
            return true;
        }
        match cause.downcast_ref::<E>() {
            Some(E::Io { source, .. }) => source.kind() == std::io::ErrorKind::NotFound,
            Some(
                E::Parse { .. }
                | E::Csv { .. }
                | E::Json { .. }
                | E::InvalidInput(_)
                | E::DimensionMismatch { .. }
                | E::IndexOutOfRange { .. },
            ) => true,
            _ => false,
        }
    })
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::in_dir(&std::env::current_dir()?),
    };
    let ctx = Ctx { cfg, cli };
    match ctx.cli.command {
        Command::EstimateChoice => commands::estimate_choice(&ctx),
        Command::EstimateCount => commands::estimate_count(&ctx),
        Command::Simulate => commands::simulate(&ctx),
        Command::Scenario => commands::scenario(&ctx),
        Command::Validate => commands::validate(&ctx),
        Command::GenSynthetic => commands::gen_synthetic(&ctx),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(if is_input_error(&e) { 2 } else { 1 })
        }
    }
}
