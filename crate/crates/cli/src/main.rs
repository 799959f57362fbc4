//! `banditlab` — experiment front end for the rested Markovian bandit
//! laboratory.
//!
//! Commands: `inspect`, `simulate`, `bound`, `lower-bound`,
//! `deviation-check`. Exit codes: 0 success, 1 configuration error
//! (including usage errors), 2 numerical failure (invalid chain,
//! non-convergent eigensolve, stalled stopping rule).

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use banditlab_core::{AnalysisError, ChainError, SimError, StoppingRule};

use commands::DeviationParams;
use config::ExperimentConfig;

#[derive(Debug)]
pub enum CliError {
    /// Bad configuration or usage; exit code 1.
    Config(String),
    /// Numerical failure; exit code 2.
    Numerical(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(msg) | CliError::Numerical(msg) => f.write_str(msg),
        }
    }
}

impl std::error::Error for CliError {}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 1,
            CliError::Numerical(_) => 2,
        }
    }
}

impl From<ChainError> for CliError {
    fn from(e: ChainError) -> Self {
        CliError::Numerical(e.to_string())
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        match e {
            AnalysisError::StoppingRuleStalled { .. } => CliError::Numerical(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "banditlab",
    version,
    about = "UCB on rested Markovian bandits: simulate regret and evaluate the model's bounds"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Report per-arm derived quantities and instance aggregates.
    Inspect(CommonArgs),
    /// Run seeded Monte Carlo regret trajectories; emits CSV.
    Simulate(CommonArgs),
    /// Evaluate the regret-bound constants; emits a JSON report.
    Bound(BoundArgs),
    /// Evaluate the asymptotic lower-bound coefficient of a theta family.
    LowerBound(CommonArgs),
    /// Validate the occupation-time tail bound and the stopping-time
    /// occupancy deviation empirically.
    DeviationCheck(DeviationArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// JSON experiment configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Bundled instance: S1 or S2.
    #[arg(long)]
    preset: Option<String>,
    /// Theta list for the two-state family, e.g. --thetas 0.5,1,7,5,3
    #[arg(long, value_delimiter = ',')]
    thetas: Option<Vec<f64>>,
    /// Exploration constant of the UCB index.
    #[arg(long = "L")]
    l: Option<f64>,
    #[arg(long)]
    horizon: Option<u64>,
    #[arg(long)]
    runs: Option<u64>,
    /// Base seed; run r draws from stream (seed, r).
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated checkpoint horizons; logarithmic grid when omitted.
    #[arg(long, value_delimiter = ',')]
    checkpoints: Option<Vec<u64>>,
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BoundArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Horizons to evaluate the bound at (default: the configured horizon).
    #[arg(long, value_delimiter = ',')]
    horizons: Option<Vec<u64>>,
}

#[derive(Args)]
struct DeviationArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Arm index (1-based) to validate; every arm when omitted.
    #[arg(long)]
    arm: Option<usize>,
    /// Steps per occupation-time trajectory.
    #[arg(long, default_value_t = 500)]
    steps: u64,
    /// Deviations gamma for the tail bound.
    #[arg(long, value_delimiter = ',', default_values_t = vec![10.0, 25.0, 50.0])]
    gammas: Vec<f64>,
    /// States (0-based) forming the subset A.
    #[arg(long, value_delimiter = ',', default_values_t = vec![1_usize])]
    subset: Vec<usize>,
    /// Stopping rule: first-return, fixed:<n>, or hit:<state>.
    #[arg(long, default_value = "first-return")]
    rule: String,
}

impl CommonArgs {
    /// Loads the config file (or defaults) and applies the flag overrides.
    fn effective_config(&self) -> Result<ExperimentConfig, CliError> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::from_file(path)?,
            None => ExperimentConfig::default(),
        };
        if self.preset.is_some() && self.thetas.is_some() {
            return Err(CliError::Config(
                "--preset and --thetas both set; pick one instance source".to_string(),
            ));
        }
        if let Some(preset) = &self.preset {
            cfg.preset = Some(preset.clone());
            cfg.thetas = None;
            cfg.arms = None;
        }
        if let Some(thetas) = &self.thetas {
            cfg.thetas = Some(thetas.clone());
            cfg.preset = None;
            cfg.arms = None;
        }
        if let Some(l) = self.l {
            cfg.policy.l = l;
        }
        if let Some(horizon) = self.horizon {
            cfg.horizon = horizon;
        }
        if let Some(runs) = self.runs {
            cfg.runs = runs;
        }
        if let Some(seed) = self.seed {
            cfg.base_seed = seed;
        }
        if let Some(cps) = &self.checkpoints {
            cfg.checkpoints = Some(cps.clone());
        }
        if let Some(out) = &self.out {
            cfg.output = Some(out.clone());
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn parse_rule(text: &str) -> Result<StoppingRule, CliError> {
    if text == "first-return" {
        return Ok(StoppingRule::FirstReturn);
    }
    if let Some(n) = text.strip_prefix("fixed:") {
        let n: u64 = n
            .parse()
            .map_err(|_| CliError::Config(format!("rule: bad horizon in `{text}`")))?;
        return Ok(StoppingRule::FixedHorizon(n));
    }
    if let Some(s) = text.strip_prefix("hit:") {
        let s: usize = s
            .parse()
            .map_err(|_| CliError::Config(format!("rule: bad state in `{text}`")))?;
        return Ok(StoppingRule::FirstHit(s));
    }
    Err(CliError::Config(format!(
        "rule: `{text}` is not first-return, fixed:<n>, or hit:<state>"
    )))
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Inspect(args) => commands::cmd_inspect(&args.effective_config()?),
        Command::Simulate(args) => commands::cmd_simulate(&args.effective_config()?),
        Command::Bound(args) => {
            let cfg = args.common.effective_config()?;
            let horizons = args.horizons.unwrap_or_else(|| vec![cfg.horizon]);
            if horizons.is_empty() || horizons.contains(&0) {
                return Err(CliError::Config(
                    "horizons must be nonempty positive integers".to_string(),
                ));
            }
            commands::cmd_bound(&cfg, &horizons)
        }
        Command::LowerBound(args) => commands::cmd_lower_bound(&args.effective_config()?),
        Command::DeviationCheck(args) => {
            let cfg = args.common.effective_config()?;
            let params = DeviationParams {
                arm: match args.arm {
                    Some(0) => {
                        return Err(CliError::Config(
                            "arm indices are 1-based; 0 is out of range".to_string(),
                        ))
                    }
                    Some(i) => Some(i - 1),
                    None => None,
                },
                steps: args.steps,
                gammas: args.gammas,
                subset: args.subset,
                rule: parse_rule(&args.rule)?,
            };
            commands::cmd_deviation_check(&cfg, &params)
        }
    }
}

fn main() -> ExitCode {
    // clap's own exit code for usage errors is 2, which this tool reserves
    // for numerical failures; remap usage errors to 1.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e)
            if matches!(
                e.kind(),
                ErrorKind::DisplayHelp
                    | ErrorKind::DisplayVersion
                    | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand
            ) =>
        {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprint!("{e}");
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}
