use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use kpzlab::busemann::Model;
use kpzlab::experiments::{
    AppendixConfig, CoalescenceConfig, EndpointExperimentConfig, IndependenceConfig, MarginalsConfig,
    QueueingFuzzConfig,
};
use kpzlab::semiring::Temperature;

#[derive(Debug, Parser)]
#[command(name = "kpzlab", version, about = "Seeded experiments on last-passage percolation and directed polymers")]
#[command(arg_required_else_help = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

/// Options shared by every subcommand.
#[derive(Clone, Debug, Args)]
pub struct Common {
    /// Base seed of all random streams.
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Output directory for the report and its manifest.
    #[arg(long, env = "KPZLAB_OUT", default_value = "kpzlab-out")]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Worker threads (default: all cores); results do not depend on it.
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Independence of coupled Busemann increment blocks.
    Independence(IndependenceArgs),
    /// Endpoint probabilities of the point-to-line polymer.
    EndpointScaling(EndpointArgs),
    /// Queueing identities on random and near-tie instances.
    QueueingFuzz(QueueingArgs),
    /// Running-maximum tail bounds for random walks.
    AppendixBounds(AppendixArgs),
    /// Marginal laws of single coupled increments.
    Marginals(MarginalsArgs),
    /// Stabilization of finite-N Busemann estimates.
    Coalescence(CoalescenceArgs),
}

impl Command {
    pub fn common(&self) -> &Common {
        match self {
            Command::Independence(a) => &a.common,
            Command::EndpointScaling(a) => &a.common,
            Command::QueueingFuzz(a) => &a.common,
            Command::AppendixBounds(a) => &a.common,
            Command::Marginals(a) => &a.common,
            Command::Coalescence(a) => &a.common,
        }
    }
}

#[derive(Debug, Args)]
pub struct IndependenceArgs {
    /// Number of blocks; must match the number of directions.
    #[arg(long = "K")]
    pub k: Option<usize>,
    /// Directions, comma separated; all equal runs the control.
    #[arg(long, value_delimiter = ',')]
    pub rho: Option<Vec<f64>>,
    /// Path spec: staircase:n, horizontal:n, vertical:n, explicit:e1,-e2,...
    #[arg(long)]
    pub path: Option<String>,
    #[arg(long)]
    pub replicas: Option<usize>,
    /// Models: cgm, polymer.
    #[arg(long, value_delimiter = ',')]
    pub model: Option<Vec<Model>>,
    /// Left margin of the coupled construction.
    #[arg(long)]
    pub margin: Option<i64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[command(flatten)]
    pub common: Common,
}

impl IndependenceArgs {
    pub fn config(&self) -> Result<IndependenceConfig, String> {
        let mut c = IndependenceConfig { seed: self.common.seed, ..Default::default() };
        if let Some(r) = &self.rho {
            c.rhos = r.clone();
        }
        if let Some(k) = self.k {
            if k != c.rhos.len() {
                return Err(format!("--K {k} does not match {} directions", c.rhos.len()));
            }
        }
        set(&mut c.path, &self.path);
        set(&mut c.replicas, &self.replicas);
        set(&mut c.models, &self.model);
        set(&mut c.alpha, &self.alpha);
        if self.margin.is_some() {
            c.margin = self.margin;
        }
        Ok(c)
    }
}

#[derive(Debug, Args)]
pub struct EndpointArgs {
    #[arg(long = "N", value_delimiter = ',')]
    pub n: Option<Vec<u64>>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub delta: Option<Vec<f64>>,
    /// Offsets of the one-sided windows.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub m: Option<Vec<i64>>,
    #[arg(long)]
    pub replicas: Option<usize>,
    /// Inverse-gamma shape of the bulk weights.
    #[arg(long)]
    pub mu: Option<f64>,
    #[command(flatten)]
    pub common: Common,
}

impl EndpointArgs {
    pub fn config(&self) -> Result<EndpointExperimentConfig, String> {
        let mut c = EndpointExperimentConfig { seed: self.common.seed, ..Default::default() };
        set(&mut c.n, &self.n);
        set(&mut c.delta, &self.delta);
        set(&mut c.m, &self.m);
        set(&mut c.replicas, &self.replicas);
        set(&mut c.mu, &self.mu);
        Ok(c)
    }
}

#[derive(Debug, Args)]
pub struct QueueingArgs {
    #[arg(long, value_delimiter = ',')]
    pub width: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    pub levels: Option<Vec<usize>>,
    /// Uncontaminated instances required per family.
    #[arg(long)]
    pub seeds: Option<usize>,
    /// Temperatures: zero, positive.
    #[arg(long, value_delimiter = ',')]
    pub temperature: Option<Vec<Temperature>>,
    #[arg(long)]
    pub near_ties: Option<usize>,
    #[command(flatten)]
    pub common: Common,
}

impl QueueingArgs {
    pub fn config(&self) -> Result<QueueingFuzzConfig, String> {
        let mut c = QueueingFuzzConfig { seed: self.common.seed, ..Default::default() };
        set(&mut c.widths, &self.width);
        set(&mut c.levels, &self.levels);
        set(&mut c.seeds, &self.seeds);
        set(&mut c.temperatures, &self.temperature);
        set(&mut c.near_tie_instances, &self.near_ties);
        Ok(c)
    }
}

#[derive(Debug, Args)]
pub struct AppendixArgs {
    /// Walk length of the upper-tail check.
    #[arg(long)]
    pub n: Option<u64>,
    /// Walks of the upper-tail check.
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub t: Option<Vec<f64>>,
    /// Log-gamma shapes of the upper-tail check.
    #[arg(long, value_delimiter = ',')]
    pub shape: Option<Vec<f64>>,
    /// Walk length N of the lower-tail check (compared with 4N).
    #[arg(long = "N")]
    pub lower_n: Option<u64>,
    #[arg(long)]
    pub lower_trials: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub l: Option<Vec<f64>>,
    #[arg(long)]
    pub q0: Option<f64>,
    /// Window parameter of the log-gamma difference step.
    #[arg(long)]
    pub delta: Option<f64>,
    #[command(flatten)]
    pub common: Common,
}

impl AppendixArgs {
    pub fn config(&self) -> Result<AppendixConfig, String> {
        let mut c = AppendixConfig { seed: self.common.seed, ..Default::default() };
        set(&mut c.upper_n, &self.n);
        set(&mut c.upper_trials, &self.trials);
        set(&mut c.t_grid, &self.t);
        set(&mut c.upper_shapes, &self.shape);
        set(&mut c.lower_n, &self.lower_n);
        set(&mut c.lower_trials, &self.lower_trials);
        set(&mut c.l_grid, &self.l);
        set(&mut c.q0, &self.q0);
        set(&mut c.diff_delta, &self.delta);
        Ok(c)
    }
}

#[derive(Debug, Args)]
pub struct MarginalsArgs {
    #[arg(long, value_delimiter = ',')]
    pub rho: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub model: Option<Vec<Model>>,
    /// Path specs, e.g. horizontal:1,vertical:1 (separate with ';').
    #[arg(long, value_delimiter = ';')]
    pub path: Option<Vec<String>>,
    #[arg(long)]
    pub replicas: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[command(flatten)]
    pub common: Common,
}

impl MarginalsArgs {
    pub fn config(&self) -> Result<MarginalsConfig, String> {
        let mut c = MarginalsConfig { seed: self.common.seed, ..Default::default() };
        set(&mut c.rhos, &self.rho);
        set(&mut c.models, &self.model);
        set(&mut c.paths, &self.path);
        set(&mut c.replicas, &self.replicas);
        set(&mut c.alpha, &self.alpha);
        Ok(c)
    }
}

#[derive(Debug, Args)]
pub struct CoalescenceArgs {
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long = "N", value_delimiter = ',')]
    pub n: Option<Vec<u64>>,
    #[arg(long)]
    pub replicas: Option<usize>,
    #[command(flatten)]
    pub common: Common,
}

impl CoalescenceArgs {
    pub fn config(&self) -> Result<CoalescenceConfig, String> {
        let mut c = CoalescenceConfig { seed: self.common.seed, ..Default::default() };
        set(&mut c.rho, &self.rho);
        set(&mut c.n, &self.n);
        set(&mut c.replicas, &self.replicas);
        Ok(c)
    }
}

fn set<T: Clone>(field: &mut T, value: &Option<T>) {
    if let Some(v) = value {
        *field = v.clone();
    }
}
