//! Run configuration: a TOML file with one table per module, overridden by
//! command-line flags. The resolved configuration is written back as the run
//! manifest and can be fed to `--config` to repeat a run exactly.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use yardsale::agent::InitialCondition;
use yardsale::boltzmann::Integrator;
use yardsale::fp::Closure;
use yardsale::{BetaDistribution, BetaKind, WealthGrid};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum GridKind {
    Linear,
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum EtaKind {
    Uniform,
    Twopoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub spacing: GridKind,
    pub nodes: usize,
    /// First positive node of a log grid.
    pub w_first: f64,
    pub w_max: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { spacing: GridKind::Log, nodes: 512, w_first: 1e-4, w_max: 1e5 }
    }
}

impl GridConfig {
    pub fn build(&self) -> Result<Arc<WealthGrid>, CliError> {
        let grid = match self.spacing {
            GridKind::Linear => WealthGrid::linear(self.w_max, self.nodes),
            GridKind::Log => WealthGrid::log_with_zero_cell(self.w_first, self.w_max, self.nodes),
        };
        grid.map(Arc::new).map_err(|e| CliError::Config(format!("[grid] {e}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EtaConfig {
    pub kind: EtaKind,
    pub beta0: f64,
}

impl Default for EtaConfig {
    fn default() -> Self {
        Self { kind: EtaKind::Uniform, beta0: 0.1 }
    }
}

impl EtaConfig {
    pub fn build(&self) -> Result<BetaDistribution, CliError> {
        let kind = match self.kind {
            EtaKind::Uniform => BetaKind::Uniform,
            EtaKind::Twopoint => BetaKind::TwoPoint,
        };
        BetaDistribution::new(kind, self.beta0).map_err(|e| CliError::Config(format!("[eta] {e}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgentsConfig {
    pub n_agents: usize,
    pub transactions: u64,
    pub record_every: u64,
    pub replicas: usize,
}

impl Default for AgentsConfig {
    fn default() -> Self {
        Self { n_agents: 1000, transactions: 1_000_000, record_every: 10_000, replicas: 8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoltzmannSection {
    pub steps: usize,
    /// Time step; 0 picks the solver's suggestion for the initial state.
    pub dt: f64,
    pub quadrature_points: usize,
    pub integrator: Integrator,
    pub record_every: usize,
    pub checkpoint_every: usize,
    pub estimate_errors: bool,
}

impl Default for BoltzmannSection {
    fn default() -> Self {
        Self {
            steps: 500,
            dt: 0.0,
            quadrature_points: 16,
            integrator: Integrator::Euler,
            record_every: 10,
            checkpoint_every: 0,
            estimate_errors: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FpSection {
    /// Diffusion constant; 0 takes the second moment of `eta`.
    pub gamma: f64,
    pub closure: Closure,
    /// Time step; 0 picks the state-independent stability bound.
    pub dt: f64,
    pub t_end: f64,
    pub record_every: usize,
    pub checkpoint_every: usize,
}

impl Default for FpSection {
    fn default() -> Self {
        Self { gamma: 0.0, closure: Closure::C, dt: 0.0, t_end: 100.0, record_every: 100, checkpoint_every: 0 }
    }
}

/// Provenance table written into manifests; ignored on input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunInfo {
    pub command: String,
    pub version: String,
    pub created: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub label: String,
    pub seed: u64,
    pub initial: InitialCondition,
    pub eta: EtaConfig,
    pub grid: GridConfig,
    pub agents: AgentsConfig,
    pub boltzmann: BoltzmannSection,
    pub fp: FpSection,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub run: Option<RunInfo>,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            label: "run".into(),
            seed: 1,
            initial: InitialCondition::Exponential { mean: 1.0 },
            eta: EtaConfig::default(),
            grid: GridConfig::default(),
            agents: AgentsConfig::default(),
            boltzmann: BoltzmannSection::default(),
            fp: FpSection::default(),
            run: None,
        }
    }
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn parse(text: &str) -> Result<Self, toml::de::Error> {
        let mut config: Self = toml::from_str(text)?;
        config.run = None;
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn gamma(&self) -> Result<f64, CliError> {
        Ok(if self.fp.gamma > 0.0 { self.fp.gamma } else { self.eta.build()?.gamma() })
    }
}
