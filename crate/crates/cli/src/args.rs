//! Command-line flags. Flags override values from `--config`.

use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::error::{CliError, Result};
use crate::spec::{parse_lambda_grid, Command, ExperimentSpec, PathLossKind};

#[derive(Debug, Parser)]
#[command(name = "fme", version, about = "Factorial moment expansion of interference in wireless networks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Cmd,
}

#[derive(Debug, Subcommand)]
pub enum Cmd {
    /// Expansion terms, partial sums and error bounds over a λ grid.
    Series(Flags),
    /// Monte Carlo success probability over a λ grid.
    Simulate(Flags),
    /// Highest-order partial sum next to the simulation, with an agreement flag.
    Compare(Flags),
    /// Every partial sum next to the simulation.
    Sweep(Flags),
    /// Third and fourth terms for Nakagami fading against closed forms.
    Tables(Flags),
}

impl Cmd {
    fn split(&self) -> (Command, &Flags) {
        match self {
            Cmd::Series(f) => (Command::Series, f),
            Cmd::Simulate(f) => (Command::Simulate, f),
            Cmd::Compare(f) => (Command::Compare, f),
            Cmd::Sweep(f) => (Command::Sweep, f),
            Cmd::Tables(f) => (Command::Tables, f),
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// TOML experiment file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// ppp, matern:P, ginibre, ginibre-scaled:s2, modified-ginibre:tau or sine.
    #[arg(long)]
    pub model: Option<String>,
    /// Interferer fading: rayleigh, nakagami:m, lognormal:mu:sigma2 or unit.
    #[arg(long)]
    pub fading: Option<String>,
    /// Desired-link fading; defaults to the interferer fading.
    #[arg(long)]
    pub desired_fading: Option<String>,
    /// singular or bounded.
    #[arg(long)]
    pub pathloss: Option<String>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long, conflicts_with = "theta")]
    pub nu: Option<f64>,
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long)]
    pub link_distance: Option<f64>,
    #[arg(long)]
    pub noise: Option<f64>,
    /// Comma-separated densities.
    #[arg(long, conflicts_with = "lambda_grid")]
    pub lambda: Option<String>,
    /// start:stop:count
    #[arg(long)]
    pub lambda_grid: Option<String>,
    #[arg(long)]
    pub order: Option<usize>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Initial Monte Carlo samples per expansion term.
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub rmax: Option<f64>,
    #[arg(long)]
    pub target_rel_se: Option<f64>,
    /// Simulation window radius.
    #[arg(long)]
    pub window: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl Cli {
    /// Experiment from the config file (if any) with the flags applied on top.
    pub fn into_spec(self) -> Result<ExperimentSpec> {
        let (command, f) = self.command.split();
        let mut spec = match &f.config {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
                ExperimentSpec::from_toml(&text)?
            }
            None => ExperimentSpec::default(),
        };
        spec.command = command;
        f.apply(&mut spec)?;
        Ok(spec)
    }
}

impl Flags {
    pub fn apply(&self, spec: &mut ExperimentSpec) -> Result<()> {
        if let Some(v) = &self.model {
            spec.model = v.clone();
        }
        if let Some(v) = &self.fading {
            spec.fading = v.clone();
        }
        if let Some(v) = &self.desired_fading {
            spec.desired_fading = Some(v.clone());
        }
        if let Some(v) = &self.pathloss {
            spec.pathloss = match v.to_ascii_lowercase().as_str() {
                "singular" => PathLossKind::Singular,
                "bounded" => PathLossKind::Bounded,
                _ => return Err(CliError::config(format!("unknown path loss `{v}`; expected singular or bounded"))),
            };
        }
        if let Some(v) = self.alpha {
            spec.alpha = v;
        }
        if let Some(v) = self.nu {
            spec.nu = Some(v);
            spec.theta = None;
        }
        if let Some(v) = self.theta {
            spec.theta = Some(v);
            spec.nu = None;
        }
        if let Some(v) = self.link_distance {
            spec.link_distance = v;
        }
        if let Some(v) = self.noise {
            spec.noise = v;
        }
        if let Some(v) = self.lambda.as_deref().or(self.lambda_grid.as_deref()) {
            spec.lambda = parse_lambda_grid(v)?;
        }
        if let Some(v) = self.order {
            spec.order = v;
        }
        if let Some(v) = self.trials {
            spec.trials = v;
        }
        if let Some(v) = self.seed {
            spec.seed = v;
        }
        if let Some(v) = self.samples {
            spec.samples = v;
        }
        if let Some(v) = self.rmax {
            spec.rmax = Some(v);
        }
        if let Some(v) = self.target_rel_se {
            spec.target_rel_se = Some(v);
        }
        if let Some(v) = self.window {
            spec.window = Some(v);
        }
        if let Some(v) = &self.out {
            spec.out = Some(v.clone());
        }
        Ok(())
    }
}
