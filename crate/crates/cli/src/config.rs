//! Experiment configuration: a JSON file merged with command-line flags
//! (flags win).

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Parser, Debug)]
#[command(name = "aqpu", version, about = "Autonomous quantum processing unit experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Clone)]
pub enum Command {
    /// Bell program (H, CNOT) evolved in time.
    Bell(Flags),
    /// Final Bell infidelity over a list of clock accuracies.
    Sweep(Flags),
    /// First-tick density and concentration diagnostics of one clock.
    ClockStats(Flags),
    /// Compilation error against clock error for an R_z target over {H, T}.
    Tradeoff(Flags),
    /// Superposed punch card against the analytic SWITCH output.
    Switch(Flags),
    /// Bell program with reversible ticks next to the irreversible run.
    Reversible(Flags),
}

impl Command {
    pub fn kind(&self) -> Experiment {
        match self {
            Self::Bell(_) => Experiment::Bell,
            Self::Sweep(_) => Experiment::Sweep,
            Self::ClockStats(_) => Experiment::ClockStats,
            Self::Tradeoff(_) => Experiment::Tradeoff,
            Self::Switch(_) => Experiment::Switch,
            Self::Reversible(_) => Experiment::Reversible,
        }
    }

    pub fn flags(&self) -> &Flags {
        match self {
            Self::Bell(f) | Self::Sweep(f) | Self::ClockStats(f) | Self::Tradeoff(f) | Self::Switch(f) | Self::Reversible(f) => f,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Bell,
    Sweep,
    ClockStats,
    Tradeoff,
    Switch,
    Reversible,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Self::Bell => "bell",
            Self::Sweep => "sweep",
            Self::ClockStats => "clock-stats",
            Self::Tradeoff => "tradeoff",
            Self::Switch => "switch",
            Self::Reversible => "reversible",
        }
    }
}

/// Flags shared by every subcommand; each experiment reads the ones it needs.
#[derive(Args, Debug, Clone, Default)]
pub struct Flags {
    /// JSON config file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// full | block | iid | ideal | mc
    #[arg(long)]
    pub solver: Option<String>,
    /// CSV output path; the JSON summary goes next to it with a .json extension.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Explicit JSON summary path.
    #[arg(long)]
    pub summary: Option<PathBuf>,
    #[arg(long)]
    pub rtol: Option<f64>,
    #[arg(long)]
    pub atol: Option<f64>,
    /// Clock accuracy N (number of Erlang stages D).
    #[arg(long)]
    pub accuracy: Option<usize>,
    /// Comma-separated accuracies for sweep and switch.
    #[arg(long, value_delimiter = ',')]
    pub accuracies: Option<Vec<usize>>,
    /// erlang | biased-erlang
    #[arg(long)]
    pub clock_model: Option<String>,
    /// Tick rate Γ = 1/τ.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Per-stage entropy of the biased-Erlang clock.
    #[arg(long)]
    pub delta_sigma: Option<f64>,
    /// Entropy per tick; makes the ticks reversible.
    #[arg(long)]
    pub delta_sigma_tick: Option<f64>,
    #[arg(long)]
    pub t_end: Option<f64>,
    /// Number of evenly spaced output times.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Monte Carlo trajectories.
    #[arg(long)]
    pub trajectories: Option<usize>,
    /// Longest compiled program.
    #[arg(long)]
    pub l_max: Option<usize>,
    /// R_z angle of the compilation target.
    #[arg(long)]
    pub angle: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClockConfig {
    pub model: Option<String>,
    pub d: Option<usize>,
    pub gamma: Option<f64>,
    pub delta_sigma: Option<f64>,
    pub delta_sigma_tick: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Option<Experiment>,
    #[serde(default)]
    pub clock: ClockConfig,
    pub solver: Option<String>,
    pub rtol: Option<f64>,
    pub atol: Option<f64>,
    pub seed: Option<u64>,
    pub trajectories: Option<usize>,
    pub t_end: Option<f64>,
    pub samples: Option<usize>,
    pub accuracies: Option<Vec<usize>>,
    pub l_max: Option<usize>,
    pub angle: Option<f64>,
    pub out: Option<PathBuf>,
    pub summary: Option<PathBuf>,
}

fn over<T>(slot: &mut Option<T>, flag: &Option<T>)
where
    T: Clone,
{
    if flag.is_some() {
        *slot = flag.clone();
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config("config", format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::config("config", format!("{}: {e}", path.display())))
    }

    /// File values (if any) with flags applied on top; checks the file's
    /// experiment kind against the subcommand.
    pub fn resolve(kind: Experiment, flags: &Flags) -> Result<Self, CliError> {
        let mut c = match &flags.config {
            Some(p) => Self::load(p)?,
            None => Self::default(),
        };
        if let Some(k) = c.experiment {
            if k != kind {
                return Err(CliError::config("experiment", format!("config is for '{}', subcommand is '{}'", k.name(), kind.name())));
            }
        }
        c.experiment = Some(kind);
        over(&mut c.seed, &flags.seed);
        over(&mut c.solver, &flags.solver);
        over(&mut c.out, &flags.out);
        over(&mut c.summary, &flags.summary);
        over(&mut c.rtol, &flags.rtol);
        over(&mut c.atol, &flags.atol);
        over(&mut c.clock.d, &flags.accuracy);
        over(&mut c.accuracies, &flags.accuracies);
        over(&mut c.clock.model, &flags.clock_model);
        over(&mut c.clock.gamma, &flags.gamma);
        over(&mut c.clock.delta_sigma, &flags.delta_sigma);
        over(&mut c.clock.delta_sigma_tick, &flags.delta_sigma_tick);
        over(&mut c.t_end, &flags.t_end);
        over(&mut c.samples, &flags.samples);
        over(&mut c.trajectories, &flags.trajectories);
        over(&mut c.l_max, &flags.l_max);
        over(&mut c.angle, &flags.angle);
        Ok(c)
    }
}
