//! Direct Monte Carlo simulation of the Yard-Sale exchange rule.
//!
//! Wealth is held as integer multiples of a power-of-two quantum chosen so the
//! initial total is about `2^60` quanta. Transfers move whole quanta, so total
//! wealth is conserved exactly and no balance can go negative.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::beta::BetaDistribution;
use crate::error::{param, Error, Result};
use crate::gini::sample_gini_sorted;
use crate::trace::{GiniRecord, GiniTrace};

const TOTAL_QUANTA_LOG2: i32 = 60;

#[derive(Debug, Clone)]
pub struct AgentEnsemble {
    units: Vec<u64>,
    quantum: f64,
    seed: u64,
    rng: ChaCha8Rng,
    transactions: u64,
}

impl AgentEnsemble {
    /// Ensemble with the given wealths, each rounded to the nearest quantum.
    pub fn from_wealths(wealths: &[f64], seed: u64) -> Result<Self> {
        Self::with_rng(wealths, seed, ChaCha8Rng::seed_from_u64(seed))
    }

    fn with_rng(wealths: &[f64], seed: u64, rng: ChaCha8Rng) -> Result<Self> {
        if wealths.len() < 2 {
            return Err(Error::TooFewSamples { need: 2, got: wealths.len() });
        }
        if wealths.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(param("wealths", "must be finite and non-negative"));
        }
        let total: f64 = wealths.iter().sum();
        if !(total > 0.0) {
            return Err(Error::ZeroWealth);
        }
        let exponent = (total.log2() - TOTAL_QUANTA_LOG2 as f64).floor() as i32;
        let quantum = 2f64.powi(exponent);
        let units = wealths.iter().map(|w| (w / quantum).round() as u64).collect();
        Ok(Self { units, quantum, seed, rng, transactions: 0 })
    }

    pub fn len(&self) -> usize {
        self.units.len()
    }

    pub fn is_empty(&self) -> bool {
        self.units.is_empty()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn transactions_elapsed(&self) -> u64 {
        self.transactions
    }

    pub fn wealth(&self, i: usize) -> f64 {
        self.units[i] as f64 * self.quantum
    }

    pub fn wealths(&self) -> Vec<f64> {
        self.units.iter().map(|&u| u as f64 * self.quantum).collect()
    }

    /// Exact total in quanta.
    pub fn total_units(&self) -> u128 {
        self.units.iter().map(|&u| u as u128).sum()
    }

    pub fn total_wealth(&self) -> f64 {
        self.total_units() as f64 * self.quantum
    }

    pub fn min_wealth(&self) -> f64 {
        self.units.iter().copied().min().unwrap_or(0) as f64 * self.quantum
    }

    /// Moves `β·min(w_i, w_j)` from agent `i` to agent `j` (negative `β`
    /// reverses the direction).
    pub fn transact(&mut self, i: usize, j: usize, beta: f64) -> Result<()> {
        let n = self.units.len();
        for index in [i, j] {
            if index >= n {
                return Err(Error::AgentIndex { index, len: n });
            }
        }
        if i == j {
            return Err(Error::SameAgent(i));
        }
        if !(beta > -1.0 && beta < 1.0) {
            return Err(param("beta", format!("must lie in (-1, 1), got {beta}")));
        }
        self.transfer(i, j, beta);
        Ok(())
    }

    #[inline]
    fn transfer(&mut self, i: usize, j: usize, beta: f64) {
        let m = self.units[i].min(self.units[j]);
        let delta = ((beta.abs() * m as f64).round() as u64).min(m);
        let (from, to) = if beta >= 0.0 { (i, j) } else { (j, i) };
        self.units[from] -= delta;
        self.units[to] += delta;
    }

    /// One transaction between a uniformly chosen pair of distinct agents.
    pub fn step(&mut self, beta: &BetaDistribution) {
        let n = self.units.len();
        let i = self.rng.random_range(0..n);
        let mut j = self.rng.random_range(0..n - 1);
        if j >= i {
            j += 1;
        }
        let b = beta.sample(&mut self.rng);
        self.transfer(i, j, b);
        self.transactions += 1;
    }

    pub fn advance(&mut self, beta: &BetaDistribution, transactions: u64) {
        for _ in 0..transactions {
            self.step(beta);
        }
    }

    pub fn gini(&self) -> Result<f64> {
        let mut sorted = self.wealths();
        sorted.sort_by(f64::total_cmp);
        sample_gini_sorted(&sorted)
    }

    /// Elapsed time in sweeps of `n/2` transactions (one transaction per agent
    /// on average).
    pub fn sweeps(&self) -> f64 {
        self.transactions as f64 / (0.5 * self.units.len() as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InitialCondition {
    Equal { w0: f64 },
    Pareto { alpha: f64, w_min: f64 },
    Exponential { mean: f64 },
}

impl InitialCondition {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &'static str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(param(name, format!("must be positive, got {v}")))
            }
        };
        match *self {
            Self::Equal { w0 } => positive("w0", w0),
            Self::Pareto { alpha, w_min } => positive("alpha", alpha).and(positive("w_min", w_min)),
            Self::Exponential { mean } => positive("mean", mean),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<f64> {
        match *self {
            Self::Equal { w0 } => vec![w0; n],
            // Inverse CDF on u in (0, 1].
            Self::Pareto { alpha, w_min } => (0..n)
                .map(|_| w_min * (1.0 - rng.random::<f64>()).powf(-1.0 / alpha))
                .collect(),
            Self::Exponential { mean } => (0..n)
                .map(|_| -mean * (1.0 - rng.random::<f64>()).ln())
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n_agents: usize,
    pub initial: InitialCondition,
    pub beta: BetaDistribution,
    pub n_transactions: u64,
    pub record_every: u64,
    pub n_replicas: usize,
    pub seed: u64,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_agents < 2 {
            return Err(param("n_agents", format!("need at least 2, got {}", self.n_agents)));
        }
        if self.n_transactions == 0 {
            return Err(param("n_transactions", "must be positive"));
        }
        if self.record_every == 0 {
            return Err(param("record_every", "must be positive"));
        }
        if self.n_replicas == 0 {
            return Err(param("n_replicas", "must be positive"));
        }
        self.initial.validate()
    }
}

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of replica `r`, independent of how many replicas are run.
pub fn replica_seed(master: u64, replica: u64) -> u64 {
    mix64(master ^ mix64(replica))
}

#[derive(Debug, Clone)]
pub struct ReplicaRun {
    pub replica: usize,
    pub seed: u64,
    pub trace: GiniTrace,
    pub final_state: AgentEnsemble,
}

/// Mean and standard error of `G` across replicas at common record times.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleTrace {
    pub t: Vec<f64>,
    pub g_mean: Vec<f64>,
    pub g_stderr: Vec<f64>,
    /// Standard error of the replica-paired increment `G(t_{k+1}) - G(t_k)`.
    pub increment_stderr: Vec<f64>,
    pub replicas: usize,
}

impl EnsembleTrace {
    pub fn from_traces(traces: &[&GiniTrace]) -> Result<Self> {
        let first = traces.first().ok_or(Error::TooFewSamples { need: 1, got: 0 })?;
        let t = first.times();
        if traces.iter().any(|tr| tr.times() != t) {
            return Err(Error::ConfigMismatch("replica traces have different record times".into()));
        }
        let r = traces.len() as f64;
        let stats = |values: &[f64]| -> (f64, f64) {
            let mean = values.iter().sum::<f64>() / r;
            if values.len() < 2 {
                return (mean, 0.0);
            }
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (r - 1.0);
            (mean, (var / r).sqrt())
        };
        let mut g_mean = Vec::with_capacity(t.len());
        let mut g_stderr = Vec::with_capacity(t.len());
        for k in 0..t.len() {
            let values: Vec<f64> = traces.iter().map(|tr| tr.records()[k].g).collect();
            let (m, s) = stats(&values);
            g_mean.push(m);
            g_stderr.push(s);
        }
        let increment_stderr = (1..t.len())
            .map(|k| {
                let inc: Vec<f64> = traces
                    .iter()
                    .map(|tr| tr.records()[k].g - tr.records()[k - 1].g)
                    .collect();
                stats(&inc).1
            })
            .collect();
        Ok(Self { t, g_mean, g_stderr, increment_stderr, replicas: traces.len() })
    }

    /// Mean trace with finite-difference rates, for the H-theorem harness.
    pub fn mean_trace(&self, n: f64, w: f64) -> Result<GiniTrace> {
        let mut trace = GiniTrace::from_records(
            self.t
                .iter()
                .zip(&self.g_mean)
                .map(|(&t, &g)| GiniRecord { t, g, n, w, dgdt: 0.0 })
                .collect(),
        )?;
        trace.fill_finite_difference_rates();
        Ok(trace)
    }
}

#[derive(Debug, Clone)]
pub struct SimOutput {
    pub replicas: Vec<ReplicaRun>,
    pub ensemble: EnsembleTrace,
}

fn run_replica(config: &SimConfig, replica: usize) -> Result<ReplicaRun> {
    let seed = replica_seed(config.seed, replica as u64);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let wealths = config.initial.sample(config.n_agents, &mut rng);
    let mut ensemble = AgentEnsemble::with_rng(&wealths, seed, rng)?;
    let mut trace = GiniTrace::new();
    let record = |e: &AgentEnsemble, trace: &mut GiniTrace| -> Result<()> {
        trace.push(GiniRecord {
            t: e.sweeps(),
            g: e.gini()?,
            n: e.len() as f64,
            w: e.total_wealth(),
            dgdt: 0.0,
        })
    };
    record(&ensemble, &mut trace)?;
    while ensemble.transactions_elapsed() < config.n_transactions {
        let chunk = config
            .record_every
            .min(config.n_transactions - ensemble.transactions_elapsed());
        ensemble.advance(&config.beta, chunk);
        record(&ensemble, &mut trace)?;
    }
    trace.fill_finite_difference_rates();
    Ok(ReplicaRun { replica, seed, trace, final_state: ensemble })
}

/// Runs every replica (in parallel) and aggregates their traces.
pub fn run(config: &SimConfig) -> Result<SimOutput> {
    config.validate()?;
    let replicas: Vec<ReplicaRun> = (0..config.n_replicas)
        .into_par_iter()
        .map(|r| run_replica(config, r))
        .collect::<Result<_>>()?;
    let traces: Vec<&GiniTrace> = replicas.iter().map(|r| &r.trace).collect();
    let ensemble = EnsembleTrace::from_traces(&traces)?;
    Ok(SimOutput { replicas, ensemble })
}
