//! `npc-ewa`: runs regret, online-to-batch, barycenter estimation and
//! geometry verification experiments from a config file or flags.
//!
//! Exit codes: 0 when every asserted bound holds, 1 on a violation (the
//! counterexample goes to stderr) or a failed computation, 2 on bad input.

mod config;
mod experiment;

use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{Config, ConfigError};
use experiment::{Outcome, RunError};

#[derive(Parser)]
#[command(name = "npc-ewa", version, about = "EWA forecasting and barycenters in NPC spaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run {
        #[arg(value_name = "CONFIG")]
        file: PathBuf,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Check the geometric inequalities on a space (or `all`).
    Verify {
        /// Space spec such as `spider:3`, or `all`.
        #[arg(value_name = "SPACE")]
        target: Option<String>,
        #[arg(long)]
        trials: Option<usize>,
        /// Number of consecutive seeds, starting at --seed.
        #[arg(long)]
        seeds: Option<usize>,
        /// Write per-trial slacks as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Play the EWA forecaster against random or greedy outcomes.
    Regret {
        /// Number of random constant experts.
        #[arg(short = 'K', long)]
        experts: Option<usize>,
        #[arg(short = 'T', long)]
        rounds: Option<usize>,
        /// A number or `auto` (1 / (2 D^2)).
        #[arg(long)]
        beta: Option<String>,
        /// `random` or `greedy`.
        #[arg(long)]
        adversary: Option<String>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Online-to-batch excess risk against its bound.
    Batch(BatchArgs),
    /// Barycenter estimation error against the excess risk.
    Estimate(BatchArgs),
}

#[derive(Args)]
struct BatchArgs {
    /// Sample sizes, comma separated.
    #[arg(short = 'n', long = "n")]
    n: Option<String>,
    #[arg(long)]
    draws: Option<usize>,
    #[arg(long)]
    mc_samples: Option<usize>,
    /// A number or `auto` (1 / (2 D^2)).
    #[arg(long)]
    beta: Option<String>,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct CommonArgs {
    /// Config file; flags override its keys.
    #[arg(long, short = 'c')]
    config: Option<PathBuf>,
    /// Space spec such as `hyperboloid:2`.
    #[arg(long)]
    space: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    radius: Option<f64>,
    #[arg(long)]
    diameter: Option<f64>,
    /// CSV destination; stdout when absent.
    #[arg(long, short = 'o')]
    output: Option<PathBuf>,
    /// Any config key, as `section.key=value`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

fn load(path: &PathBuf) -> Result<Config, ConfigError> {
    let text =
        fs::read_to_string(path).map_err(|e| ConfigError::new(None, format!("cannot read {}: {e}", path.display())))?;
    Config::parse(&text).map_err(|e| match e.origin {
        Some(config::Origin::Line(n)) => ConfigError::new(None, format!("{}:{n}: {}", path.display(), e.message)),
        _ => e,
    })
}

fn apply(config: &mut Config, common: &CommonArgs) -> Result<(), ConfigError> {
    if let Some(v) = &common.space {
        config.set("space.spec", v);
    }
    if let Some(v) = common.seed {
        config.set("experiment.seed", v.to_string());
    }
    if let Some(v) = common.radius {
        config.set("space.radius", v.to_string());
    }
    if let Some(v) = common.diameter {
        config.set("space.diameter", v.to_string());
    }
    if let Some(v) = &common.output {
        config.set("experiment.output", v.display().to_string());
    }
    for a in &common.set {
        config.set_assignment(a)?;
    }
    Ok(())
}

fn build(command: Command) -> Result<Config, ConfigError> {
    let (mut config, common) = match &command {
        Command::Run { file, common } => (load(file)?, common),
        Command::Verify { common, .. } | Command::Regret { common, .. } => (Config::default(), common),
        Command::Batch(b) | Command::Estimate(b) => (Config::default(), &b.common),
    };
    if let Some(path) = &common.config {
        if matches!(command, Command::Run { .. }) {
            return Err(ConfigError::new(
                None,
                "`run` takes its config as the positional argument",
            ));
        }
        config = load(path)?;
    }
    let kind = match &command {
        Command::Run { .. } => None,
        Command::Verify { .. } => Some("verify"),
        Command::Regret { .. } => Some("regret"),
        Command::Batch(_) => Some("batch"),
        Command::Estimate(_) => Some("estimate"),
    };
    if let Some(k) = kind {
        config.set("experiment.kind", k);
    }
    apply(&mut config, common)?;
    match &command {
        Command::Verify {
            target,
            trials,
            seeds,
            csv,
            ..
        } => {
            if let Some(v) = target {
                config.set("space.spec", v);
            }
            if config.get("space.spec").is_none() {
                config.set("space.spec", "all");
            }
            if let Some(v) = trials {
                config.set("verify.trials", v.to_string());
            }
            if let Some(v) = seeds {
                config.set("verify.seeds", v.to_string());
            }
            if let Some(v) = csv {
                config.set("experiment.output", v.display().to_string());
            }
        }
        Command::Regret {
            experts,
            rounds,
            beta,
            adversary,
            ..
        } => {
            if let Some(v) = experts {
                config.set("regret.experts", v.to_string());
            }
            if let Some(v) = rounds {
                config.set("regret.rounds", v.to_string());
            }
            if let Some(v) = beta {
                config.set("regret.beta", v);
            }
            if let Some(v) = adversary {
                config.set("regret.adversary", v);
            }
        }
        Command::Batch(b) | Command::Estimate(b) => {
            if let Some(v) = &b.n {
                config.set("batch.n", v);
            }
            if let Some(v) = b.draws {
                config.set("batch.draws", v.to_string());
            }
            if let Some(v) = b.mc_samples {
                config.set("batch.mc_samples", v.to_string());
            }
            if let Some(v) = &b.beta {
                config.set("batch.beta", v);
            }
        }
        Command::Run { .. } => {}
    }
    Ok(config)
}

fn emit(outcome: &Outcome) -> io::Result<()> {
    let mut stdout = io::stdout().lock();
    let mut stderr = io::stderr().lock();
    // the report shares stdout only when the CSV goes elsewhere
    let csv_on_stdout = outcome.csv.is_some() && outcome.output.is_none();
    if let Some(csv) = &outcome.csv {
        match &outcome.output {
            Some(path) => fs::write(path, csv)?,
            None => stdout.write_all(csv.as_bytes())?,
        }
    }
    for line in &outcome.report {
        if csv_on_stdout {
            writeln!(stderr, "{line}")?;
        } else {
            writeln!(stdout, "{line}")?;
        }
    }
    for v in &outcome.violations {
        writeln!(stderr, "violation: {v}")?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = match build(cli.command) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match experiment::run(&config) {
        Ok(outcome) => {
            if let Err(e) = emit(&outcome) {
                eprintln!("error: {e}");
                return ExitCode::from(1);
            }
            if outcome.violations.is_empty() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(RunError::Config(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(RunError::Runtime(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn argument_definitions_are_consistent() {
        Cli::command().debug_assert();
    }
}
