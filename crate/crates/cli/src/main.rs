//! `yardsale`: run the agent, Boltzmann and Fokker-Planck dynamics of the
//! Yard-Sale model, and analyze their output.
//!
//! Exit codes: 0 on success, 2 for usage or configuration errors, 1 for
//! runtime failures (stability aborts, failed H-theorem checks, I/O).

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{Config, EtaKind, GridKind};

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Failed(String),
    Core(yardsale::Error),
}

impl From<yardsale::Error> for CliError {
    fn from(e: yardsale::Error) -> Self {
        Self::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Core(e.into())
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Config(m) => write!(f, "configuration error: {m}"),
            Self::Failed(m) => write!(f, "{m}"),
            Self::Core(e) => write!(f, "{e}"),
        }
    }
}

#[derive(Parser)]
#[command(name = "yardsale", version, about = "Wealth-distribution kinetics of the Yard-Sale exchange model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Settings shared by the run subcommands. Flags override the config file,
/// which overrides the built-in defaults.
#[derive(Args, Debug, Clone)]
struct RunArgs {
    /// TOML configuration (a run manifest works too)
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed [default: 1]
    #[arg(long)]
    seed: Option<u64>,
    /// Parent directory for run directories
    #[arg(long, default_value = "runs")]
    out: PathBuf,
    /// Run label used in the directory name [default: run]
    #[arg(long)]
    label: Option<String>,
    /// Independent agent replicas [default: 8]
    #[arg(long)]
    replicas: Option<usize>,
    /// Record interval: transactions for agents, steps for the solvers
    /// [defaults: 10000, 10, 100]
    #[arg(long)]
    record_every: Option<u64>,
    /// Grid spacing [default: log]
    #[arg(long, value_enum)]
    grid: Option<GridKind>,
    /// Grid nodes [default: 512]
    #[arg(long)]
    nodes: Option<usize>,
    /// Half-width of the transfer-fraction law [default: 0.1]
    #[arg(long)]
    beta0: Option<f64>,
    /// Shape of the transfer-fraction law [default: uniform]
    #[arg(long, value_enum)]
    eta: Option<EtaKind>,
    /// Fokker-Planck diffusion constant [default: second moment of eta]
    #[arg(long)]
    gamma: Option<f64>,
}

impl RunArgs {
    fn resolve(&self) -> Result<Config, CliError> {
        let mut c = match &self.config {
            Some(path) => Config::load(path)?,
            None => Config::default(),
        };
        if let Some(v) = self.seed {
            c.seed = v;
        }
        if let Some(v) = &self.label {
            c.label = v.clone();
        }
        if let Some(v) = self.replicas {
            c.agents.replicas = v;
        }
        if let Some(v) = self.record_every {
            let steps = usize::try_from(v).map_err(|_| CliError::Config("--record-every too large".into()))?;
            c.agents.record_every = v;
            c.boltzmann.record_every = steps;
            c.fp.record_every = steps;
        }
        if let Some(v) = self.grid {
            c.grid.spacing = v;
        }
        if let Some(v) = self.nodes {
            c.grid.nodes = v;
        }
        if let Some(v) = self.beta0 {
            c.eta.beta0 = v;
        }
        if let Some(v) = self.eta {
            c.eta.kind = v;
        }
        if let Some(v) = self.gamma {
            c.fp.gamma = v;
        }
        Ok(c)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo ensemble of agents trading by the Yard-Sale rule
    SimulateAgents(RunArgs),
    /// Integrate the Boltzmann equation on a wealth grid
    SolveBoltzmann(RunArgs),
    /// Integrate the nonlocal Fokker-Planck equation
    SolveFp(RunArgs),
    /// Check Gini traces for monotonicity, compare them, fit Pareto tails
    Analyze {
        /// Trace CSV (`t,G,N,W,dGdt` or `t,G_mean,G_stderr`); repeat to compare
        #[arg(long = "trace")]
        traces: Vec<PathBuf>,
        /// Wealth samples for a Pareto fit
        #[arg(long)]
        samples: Option<PathBuf>,
        /// Distribution CSV (`w,P`) for a Pareto fit
        #[arg(long)]
        distribution: Option<PathBuf>,
        /// Pareto cutoff; chosen by minimum KS distance for samples if absent
        #[arg(long)]
        w_min: Option<f64>,
        /// Allowed decrease per increment for deterministic traces
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
        /// Allowed decrease in standard errors for ensemble traces
        #[arg(long, default_value_t = 3.0)]
        sigmas: f64,
        /// Also require a final G of at least 0.95
        #[arg(long)]
        condensation: bool,
    },
    /// Bin a file of wealth samples onto a grid
    Ingest {
        /// One wealth value per line
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Print N, W and the Gini coefficient of samples or a `w,P` distribution
    Metrics {
        #[arg(long)]
        input: PathBuf,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::SimulateAgents(a) => commands::simulate_agents(&a.resolve()?, &a.out),
        Command::SolveBoltzmann(a) => commands::solve_boltzmann(&a.resolve()?, &a.out),
        Command::SolveFp(a) => commands::solve_fp(&a.resolve()?, &a.out),
        Command::Analyze { traces, samples, distribution, w_min, tol, sigmas, condensation } => {
            commands::analyze(&commands::AnalyzeArgs { traces, samples, distribution, w_min, tol, sigmas, condensation })
        }
        Command::Ingest { input, run } => commands::ingest(&run.resolve()?, &input, &run.out),
        Command::Metrics { input } => commands::metrics(&input),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                CliError::Config(_) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}
