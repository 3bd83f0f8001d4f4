use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "olsnet", version, about = "AC optimal load shedding and per-bus neural decision rules")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

/// Settings shared by every subcommand; each overrides the config file.
#[derive(Debug, Args)]
pub struct Global {
    /// TOML run configuration.
    #[arg(long, global = true, env = "OLS_CONFIG")]
    pub config: Option<PathBuf>,
    /// MATPOWER case file (bundled IEEE 14-bus when absent).
    #[arg(long, global = true)]
    pub case: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Total real demand after uniform stressing, MW.
    #[arg(long, global = true)]
    pub total_mw: Option<f64>,
    #[arg(long, global = true)]
    pub output_dir: Option<PathBuf>,
    /// Load centers, comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    pub buses: Option<Vec<u32>>,
    #[arg(long, global = true)]
    pub per_scenario: Option<usize>,
    /// Number of random double outages.
    #[arg(long, global = true)]
    pub double: Option<usize>,
    /// Number of random triple outages.
    #[arg(long, global = true)]
    pub triple: Option<usize>,
    /// Skip the single-outage group.
    #[arg(long, global = true)]
    pub no_single: bool,
    #[arg(long, global = true)]
    pub max_epochs: Option<usize>,
    /// More log output; repeat for debug.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate a case file and print its size.
    Parse,
    /// Solve one power flow.
    Pf(Network),
    /// Solve one optimal load shedding problem.
    Ols(Network),
    /// Print the outage scenarios of each group as JSON.
    Scenarios,
    /// Generate per-bus datasets under the output directory.
    Dataset,
    /// Train a model on one bus dataset.
    Train {
        #[arg(long)]
        dataset: PathBuf,
        /// Model path; defaults to `<dataset stem>_model.json`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Report occurrence and RMSE of a model on its dataset.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Shedding decision for one raw feature row.
    Predict {
        #[arg(long)]
        model: PathBuf,
        /// Comma-separated features in dataset column order.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        features: Vec<f64>,
    },
    /// Generate, train and evaluate everything.
    Pipeline,
}

#[derive(Debug, Args)]
pub struct Network {
    /// Branches to take out, as `from-to`; repeatable.
    #[arg(long = "outage", value_parser = parse_pair)]
    pub outages: Vec<(u32, u32)>,
    /// Use the case demand as given instead of stressing it.
    #[arg(long)]
    pub unstressed: bool,
    /// Write the per-bus solution as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

fn parse_pair(s: &str) -> Result<(u32, u32), String> {
    let (a, b) = s.split_once('-').ok_or_else(|| format!("expected `from-to`, got `{s}`"))?;
    let a = a.trim().parse().map_err(|e| format!("bad bus `{a}`: {e}"))?;
    let b = b.trim().parse().map_err(|e| format!("bad bus `{b}`: {e}"))?;
    Ok((a, b))
}
