//! Post-processing of Gini traces: monotonicity checks, Pareto tail fits and
//! comparison of the agent, Boltzmann and Fokker-Planck dynamics.

use std::fmt;
use std::sync::Arc;

use crate::agent::{self, InitialCondition, SimConfig};
use crate::beta::BetaDistribution;
use crate::boltzmann::{self, BoltzmannConfig, RunOptions};
use crate::dist::WealthDistribution;
use crate::error::{param, Error, Result};
use crate::fp::{self, FpConfig};
use crate::grid::WealthGrid;
use crate::trace::GiniTrace;

pub const MIN_TAIL_SAMPLES: f64 = 50.0;
pub const CONDENSED_GINI: f64 = 0.95;
const TAIL_FLOOR: f64 = 1e-6;

/// How far below zero an increment of `G` may fall before it counts as a
/// decrease.
#[derive(Debug, Clone, PartialEq)]
pub enum TolerancePolicy {
    /// Deterministic solvers: `ΔG_k < -tol` fails.
    Absolute(f64),
    /// Stochastic ensembles: `ΔG_k < -sigmas · stderr[k]` fails, with one
    /// standard error per increment.
    Stderr { stderr: Vec<f64>, sigmas: f64 },
}

impl TolerancePolicy {
    fn threshold(&self, k: usize) -> f64 {
        match self {
            Self::Absolute(tol) => *tol,
            Self::Stderr { stderr, sigmas } => sigmas * stderr[k],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Increment {
    /// Index of the later record.
    pub index: usize,
    pub t: f64,
    pub delta: f64,
    pub threshold: f64,
    pub violated: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HTheoremReport {
    pub increments: Vec<Increment>,
    pub violations: Vec<usize>,
    pub initial_g: f64,
    pub final_g: f64,
    pub passed: bool,
}

impl HTheoremReport {
    pub fn min_increment(&self) -> f64 {
        self.increments.iter().map(|i| i.delta).fold(f64::INFINITY, f64::min)
    }
}

impl fmt::Display for HTheoremReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "H-theorem: {} ({} increments, {} violations)",
            if self.passed { "pass" } else { "FAIL" },
            self.increments.len(),
            self.violations.len()
        )?;
        writeln!(f, "G: {:.6} -> {:.6}, min increment {:.3e}", self.initial_g, self.final_g, self.min_increment())?;
        for &k in &self.violations {
            let inc = &self.increments[k - 1];
            writeln!(f, "  decrease at record {k} (t = {}): dG = {:.3e}, threshold {:.3e}", inc.t, inc.delta, inc.threshold)?;
        }
        Ok(())
    }
}

/// Checks every recorded increment of `G` against the tolerance policy.
pub fn verify_h_theorem(trace: &GiniTrace, policy: &TolerancePolicy) -> Result<HTheoremReport> {
    let records = trace.records();
    if records.len() < 2 {
        return Err(Error::TooFewSamples { need: 2, got: records.len() });
    }
    match policy {
        TolerancePolicy::Absolute(tol) if !(*tol >= 0.0) => {
            return Err(param("tol", format!("must be non-negative, got {tol}")));
        }
        TolerancePolicy::Stderr { stderr, .. } if stderr.len() != records.len() - 1 => {
            return Err(param(
                "stderr",
                format!("need one value per increment ({}), got {}", records.len() - 1, stderr.len()),
            ));
        }
        _ => {}
    }
    let increments: Vec<Increment> = records
        .windows(2)
        .enumerate()
        .map(|(k, p)| {
            let delta = p[1].g - p[0].g;
            let threshold = policy.threshold(k);
            Increment { index: k + 1, t: p[1].t, delta, threshold, violated: delta < -threshold }
        })
        .collect();
    let violations: Vec<usize> = increments.iter().filter(|i| i.violated).map(|i| i.index).collect();
    Ok(HTheoremReport {
        passed: violations.is_empty(),
        violations,
        initial_g: records[0].g,
        final_g: records[records.len() - 1].g,
        increments,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticReport {
    pub h_theorem: HTheoremReport,
    pub threshold: f64,
    /// Increments over the last quarter of the records, all within tolerance.
    pub tail_non_decreasing: bool,
    pub passed: bool,
}

/// Long-run check: monotone throughout and final `G` at least `threshold`.
pub fn verify_condensation(trace: &GiniTrace, policy: &TolerancePolicy, threshold: f64) -> Result<AsymptoticReport> {
    let h_theorem = verify_h_theorem(trace, policy)?;
    let n = h_theorem.increments.len();
    let tail_non_decreasing = h_theorem.increments[n - (n / 4).max(1)..].iter().all(|i| !i.violated);
    let passed = h_theorem.passed && tail_non_decreasing && h_theorem.final_g >= threshold;
    Ok(AsymptoticReport { h_theorem, threshold, tail_non_decreasing, passed })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParetoFit {
    pub alpha: f64,
    /// `α/√n`; absent for fits to a density.
    pub stderr: Option<f64>,
    pub w_min: f64,
    /// Samples above the cutoff, or grid nodes above it for a density.
    pub tail_count: f64,
    /// RMS residual of a straight-line fit of `ln A(w)` against `ln w` over
    /// the tail. Small for a power law.
    pub loglog_residual: f64,
    /// Slope of that line; `-α` for a power law.
    pub loglog_slope: f64,
    /// Kolmogorov-Smirnov distance between the tail and the fitted law.
    pub ks_distance: f64,
}

fn line_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let rss: f64 = x.iter().zip(y).map(|(a, b)| (b - my - slope * (a - mx)).powi(2)).sum();
    (slope, (rss / n).sqrt())
}

fn check_cutoff(w_min: f64) -> Result<()> {
    if w_min > 0.0 && w_min.is_finite() {
        Ok(())
    } else {
        Err(param("w_min", format!("must be positive, got {w_min}")))
    }
}

fn fit_sorted_tail(tail: &[f64], w_min: f64) -> Result<ParetoFit> {
    let n = tail.len() as f64;
    if n < MIN_TAIL_SAMPLES {
        return Err(Error::InsufficientTail { tail: n, need: MIN_TAIL_SAMPLES });
    }
    let log_sum: f64 = tail.iter().map(|w| (w / w_min).ln()).sum();
    if !(log_sum > 0.0) {
        return Err(Error::InsufficientTail { tail: 0.0, need: MIN_TAIL_SAMPLES });
    }
    let alpha = n / log_sum;
    let mut ks: f64 = 0.0;
    let (mut x, mut y) = (Vec::with_capacity(tail.len()), Vec::with_capacity(tail.len()));
    for (i, w) in tail.iter().enumerate() {
        let model = 1.0 - (w_min / w).powf(alpha);
        ks = ks.max((model - i as f64 / n).abs()).max((model - (i + 1) as f64 / n).abs());
        x.push((w / w_min).ln());
        y.push(((n - i as f64) / n).ln());
    }
    let (slope, residual) = line_fit(&x, &y);
    Ok(ParetoFit {
        alpha,
        stderr: Some(alpha / n.sqrt()),
        w_min,
        tail_count: n,
        loglog_residual: residual,
        loglog_slope: slope,
        ks_distance: ks,
    })
}

fn sorted(samples: &[f64]) -> Result<Vec<f64>> {
    if let Some(i) = samples.iter().position(|w| !w.is_finite() || *w < 0.0) {
        return Err(param("samples", format!("entry {i} is negative or non-finite")));
    }
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    Ok(s)
}

/// Maximum-likelihood Pareto exponent `n / Σ ln(w_i/w_min)` over samples
/// `w_i ≥ w_min`.
pub fn pareto_fit_samples(samples: &[f64], w_min: f64) -> Result<ParetoFit> {
    check_cutoff(w_min)?;
    let s = sorted(samples)?;
    let start = s.partition_point(|&w| w < w_min);
    fit_sorted_tail(&s[start..], w_min)
}

/// Fit with the cutoff chosen among `candidates` sample values (evenly spaced
/// in rank, leaving at least [`MIN_TAIL_SAMPLES`] above) by minimum KS distance.
pub fn pareto_fit_auto(samples: &[f64], candidates: usize) -> Result<ParetoFit> {
    let s = sorted(samples)?;
    let need = MIN_TAIL_SAMPLES as usize;
    let positive = s.partition_point(|&w| w <= 0.0);
    if s.len() < positive + need {
        return Err(Error::InsufficientTail { tail: (s.len() - positive) as f64, need: MIN_TAIL_SAMPLES });
    }
    let last = s.len() - need;
    let count = candidates.max(1).min(last - positive + 1);
    let mut best: Option<ParetoFit> = None;
    for c in 0..count {
        let idx = positive + if count > 1 { c * (last - positive) / (count - 1) } else { 0 };
        let w_min = s[idx];
        let start = s.partition_point(|&w| w < w_min);
        let Ok(fit) = fit_sorted_tail(&s[start..], w_min) else { continue };
        if best.as_ref().is_none_or(|b| fit.ks_distance < b.ks_distance) {
            best = Some(fit);
        }
    }
    best.ok_or(Error::InsufficientTail { tail: 0.0, need: MIN_TAIL_SAMPLES })
}

/// Continuous analogue of the sample fit, `α = M / ∫ P ln(w/w_min)` over the
/// tail `w ≥ w_min` of mass `M`. The tail must span at least
/// [`MIN_TAIL_SAMPLES`] grid nodes with positive density.
pub fn pareto_fit_distribution(dist: &WealthDistribution, w_min: f64) -> Result<ParetoFit> {
    check_cutoff(w_min)?;
    let grid = dist.grid();
    if w_min >= grid.w_max() {
        return Err(Error::InsufficientTail { tail: 0.0, need: MIN_TAIL_SAMPLES });
    }
    let nodes = grid.nodes();
    let p = dist.density();
    let start = nodes.partition_point(|&w| w < w_min);
    let tail_nodes = (start..nodes.len()).filter(|&i| p[i] > 0.0).count() as f64;
    if tail_nodes < MIN_TAIL_SAMPLES {
        return Err(Error::InsufficientTail { tail: tail_nodes, need: MIN_TAIL_SAMPLES });
    }
    let below = dist.cumulative_agents(w_min)?;
    let total = dist.moments().n;
    let mass = total - below;
    let weights = grid.weights();
    // Mass-weighted log over tail nodes, with the partial cell at the cutoff
    // folded into the first tail node.
    let mut log_sum = 0.0;
    let mut assigned = 0.0;
    for i in start..nodes.len() {
        let m = p[i] * weights[i];
        log_sum += m * (nodes[i] / w_min).ln();
        assigned += m;
    }
    log_sum *= mass / assigned;
    if !(mass > 0.0 && log_sum > 0.0) {
        return Err(Error::InsufficientTail { tail: 0.0, need: MIN_TAIL_SAMPLES });
    }
    let alpha = mass / log_sum;

    let mut ks: f64 = 0.0;
    let (mut x, mut y) = (Vec::new(), Vec::new());
    for &w in &nodes[start..] {
        let above = dist.survival(w)? * total;
        // The last decades before w_max are dominated by truncation.
        if above <= TAIL_FLOOR * mass {
            break;
        }
        let empirical = 1.0 - above / mass;
        ks = ks.max((1.0 - (w_min / w).powf(alpha) - empirical).abs());
        x.push((w / w_min).ln());
        y.push((above / mass).ln());
    }
    let (slope, residual) = line_fit(&x, &y);
    Ok(ParetoFit {
        alpha,
        stderr: None,
        w_min,
        tail_count: tail_nodes,
        loglog_residual: residual,
        loglog_slope: slope,
        ks_distance: ks,
    })
}

/// A `G(t)` curve on a common time axis, with optional standard errors.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub label: String,
    pub t: Vec<f64>,
    pub g: Vec<f64>,
    pub stderr: Option<Vec<f64>>,
}

impl Curve {
    pub fn from_trace(label: impl Into<String>, trace: &GiniTrace) -> Self {
        Self { label: label.into(), t: trace.times(), g: trace.ginis(), stderr: None }
    }

    fn at(&self, t: f64) -> Option<(f64, f64)> {
        let n = self.t.len();
        if n == 0 || t < self.t[0] || t > self.t[n - 1] {
            return None;
        }
        let k = self.t.partition_point(|&x| x <= t).clamp(1, n - 1);
        let (a, b) = (k - 1, k);
        let theta = if self.t[b] > self.t[a] { (t - self.t[a]) / (self.t[b] - self.t[a]) } else { 0.0 };
        let lerp = |v: &[f64]| v[a] + theta * (v[b] - v[a]);
        Some((lerp(&self.g), self.stderr.as_deref().map_or(0.0, lerp)))
    }

    fn horizon(&self) -> (f64, f64) {
        (self.t[0], self.t[self.t.len() - 1])
    }

    /// Slope of `G` over the first recorded interval.
    pub fn initial_slope(&self) -> f64 {
        (self.g[1] - self.g[0]) / (self.t[1] - self.t[0])
    }

    fn time_scaled(&self, s: f64) -> Self {
        Self { t: self.t.iter().map(|t| t * s).collect(), ..self.clone() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairDeviation {
    pub a: String,
    pub b: String,
    pub max_abs: f64,
    /// Time of the largest deviation.
    pub at: f64,
    /// Largest deviation in units of the combined standard error, when
    /// either curve carries errors.
    pub max_sigmas: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    /// Common time axis: the union of record times inside the shared horizon.
    pub t: Vec<f64>,
    pub curves: Vec<Curve>,
    pub pairs: Vec<PairDeviation>,
}

impl fmt::Display for ComparisonReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "comparison over t in [{}, {}]", self.t[0], self.t[self.t.len() - 1])?;
        for p in &self.pairs {
            write!(f, "  {} vs {}: max |dG| = {:.3e} at t = {}", p.a, p.b, p.max_abs, p.at)?;
            if let Some(s) = p.max_sigmas {
                write!(f, " ({s:.2} combined stderr)")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Aligns the curves on their common horizon and reports the largest
/// pairwise deviation of `G`.
pub fn compare_curves(curves: &[Curve]) -> Result<ComparisonReport> {
    if curves.is_empty() {
        return Err(Error::TooFewSamples { need: 1, got: 0 });
    }
    for c in curves {
        if c.t.len() < 2 || c.g.len() != c.t.len() || c.stderr.as_ref().is_some_and(|s| s.len() != c.t.len()) {
            return Err(param("curves", format!("curve `{}` needs at least two aligned records", c.label)));
        }
    }
    let lo = curves.iter().map(|c| c.horizon().0).fold(f64::NEG_INFINITY, f64::max);
    let hi = curves.iter().map(|c| c.horizon().1).fold(f64::INFINITY, f64::min);
    if !(hi >= lo) {
        return Err(Error::ConfigMismatch("curves have no common time horizon".into()));
    }
    let mut t: Vec<f64> = curves.iter().flat_map(|c| c.t.iter().copied()).filter(|&x| x >= lo && x <= hi).collect();
    t.sort_by(f64::total_cmp);
    t.dedup();
    let mut pairs = Vec::new();
    for (i, a) in curves.iter().enumerate() {
        for b in &curves[i + 1..] {
            let mut dev = PairDeviation { a: a.label.clone(), b: b.label.clone(), max_abs: 0.0, at: t[0], max_sigmas: None };
            let errors = a.stderr.is_some() || b.stderr.is_some();
            for &x in &t {
                let ((ga, sa), (gb, sb)) = (a.at(x).expect("inside horizon"), b.at(x).expect("inside horizon"));
                let d = (ga - gb).abs();
                if d > dev.max_abs {
                    dev.max_abs = d;
                    dev.at = x;
                }
                let combined = (sa * sa + sb * sb).sqrt();
                if errors && combined > 0.0 {
                    let s = d / combined;
                    dev.max_sigmas = Some(dev.max_sigmas.map_or(s, |m: f64| m.max(s)));
                }
            }
            pairs.push(dev);
        }
    }
    Ok(ComparisonReport { t, curves: curves.to_vec(), pairs })
}

/// How agent time (sweeps) is mapped onto continuum time.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum TimeAlignment {
    /// One sweep is one time unit.
    #[default]
    Sweeps,
    /// Agent times scaled so its initial slope of `G` matches the first
    /// deterministic curve. A calibration, not an identity.
    SlopeMatched,
}

#[derive(Debug, Clone)]
pub struct CompareSetup {
    pub initial: InitialCondition,
    pub beta: BetaDistribution,
    pub grid: Arc<WealthGrid>,
    pub agent: Option<SimConfig>,
    pub boltzmann: Option<(BoltzmannConfig, RunOptions)>,
    pub fp: Option<(FpConfig, usize)>,
    pub alignment: TimeAlignment,
}

#[derive(Debug, Clone)]
pub struct Comparison {
    pub report: ComparisonReport,
    /// Factor applied to agent times.
    pub agent_time_scale: f64,
}

/// Grid density for an agent initial condition, normalized to one agent.
pub fn initial_distribution(initial: &InitialCondition, grid: Arc<WealthGrid>) -> Result<WealthDistribution> {
    initial.validate()?;
    match *initial {
        InitialCondition::Equal { w0 } => WealthDistribution::atom(grid, w0, 1.0),
        InitialCondition::Pareto { alpha, w_min } => WealthDistribution::pareto(grid, alpha, w_min, 1.0).map(|(d, _)| d),
        InitialCondition::Exponential { mean } => WealthDistribution::exponential(grid, mean, 1.0),
    }
}

fn check_setup(setup: &CompareSetup) -> Result<()> {
    if let Some(a) = &setup.agent {
        if a.initial != setup.initial {
            return Err(Error::ConfigMismatch("agent initial condition differs from the shared one".into()));
        }
        if a.beta != setup.beta {
            return Err(Error::ConfigMismatch("agent transfer-fraction law differs from the shared one".into()));
        }
    }
    if let Some((b, _)) = &setup.boltzmann {
        if b.beta != setup.beta {
            return Err(Error::ConfigMismatch("Boltzmann transfer-fraction law differs from the shared one".into()));
        }
    }
    if let Some((f, _)) = &setup.fp {
        let gamma = setup.beta.gamma();
        if (f.gamma - gamma).abs() > 1e-12 * gamma {
            return Err(Error::ConfigMismatch(format!(
                "Fokker-Planck gamma {} differs from the second moment {gamma} of the shared law",
                f.gamma
            )));
        }
    }
    if setup.agent.is_none() && setup.boltzmann.is_none() && setup.fp.is_none() {
        return Err(Error::ConfigMismatch("nothing to compare".into()));
    }
    Ok(())
}

/// Runs every configured dynamics from the shared initial condition and
/// compares the resulting `G(t)` curves.
pub fn cross_compare(setup: &CompareSetup) -> Result<Comparison> {
    check_setup(setup)?;
    let mut deterministic = Vec::new();
    if setup.boltzmann.is_some() || setup.fp.is_some() {
        let initial = initial_distribution(&setup.initial, setup.grid.clone())?;
        if let Some((config, options)) = &setup.boltzmann {
            let run = boltzmann::solve(&initial, config, *options)?;
            deterministic.push(Curve::from_trace("boltzmann", &run.trace));
        }
        if let Some((config, record_every)) = &setup.fp {
            let run = fp::solve(&initial, config, *record_every, 0)?;
            deterministic.push(Curve::from_trace("fokker-planck", &run.trace));
        }
    }
    let mut curves = Vec::new();
    let mut agent_time_scale = 1.0;
    if let Some(config) = &setup.agent {
        let out = agent::run(config)?;
        let e = &out.ensemble;
        let curve = Curve { label: "agents".into(), t: e.t.clone(), g: e.g_mean.clone(), stderr: Some(e.g_stderr.clone()) };
        if setup.alignment == TimeAlignment::SlopeMatched {
            if let Some(reference) = deterministic.first() {
                let (a, b) = (curve.initial_slope(), reference.initial_slope());
                if a > 0.0 && b > 0.0 {
                    agent_time_scale = a / b;
                }
            }
        }
        curves.push(curve.time_scaled(agent_time_scale));
    }
    curves.extend(deterministic);
    Ok(Comparison { report: compare_curves(&curves)?, agent_time_scale })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::GiniRecord;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn trace(g: &[f64]) -> GiniTrace {
        GiniTrace::from_records(
            g.iter()
                .enumerate()
                .map(|(i, &g)| GiniRecord { t: i as f64, g, n: 1.0, w: 1.0, dgdt: 0.0 })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn constant_and_increasing_traces_pass() {
        let tol = TolerancePolicy::Absolute(1e-9);
        assert!(verify_h_theorem(&trace(&[0.3; 6]), &tol).unwrap().passed);
        assert!(verify_h_theorem(&trace(&[0.1, 0.2, 0.4, 0.5]), &tol).unwrap().passed);
        assert!(verify_h_theorem(&trace(&[0.1]), &tol).is_err());
    }

    #[test]
    fn injected_decrease_is_located() {
        let tol = 1e-6;
        let mut g: Vec<f64> = (0..20).map(|i| 0.3 + 0.01 * i as f64).collect();
        g[12] = g[11] - 10.0 * tol;
        let report = verify_h_theorem(&trace(&g), &TolerancePolicy::Absolute(tol)).unwrap();
        assert!(!report.passed);
        assert_eq!(report.violations, vec![12]);
        assert!(report.to_string().contains("record 12"));
    }

    #[test]
    fn stderr_policy_scales_per_increment() {
        let g = [0.5, 0.49, 0.6];
        let loose = TolerancePolicy::Stderr { stderr: vec![0.004, 0.004], sigmas: 3.0 };
        assert!(verify_h_theorem(&trace(&g), &loose).unwrap().passed);
        let tight = TolerancePolicy::Stderr { stderr: vec![0.003, 0.004], sigmas: 3.0 };
        assert_eq!(verify_h_theorem(&trace(&g), &tight).unwrap().violations, vec![1]);
        let short = TolerancePolicy::Stderr { stderr: vec![0.1], sigmas: 3.0 };
        assert!(verify_h_theorem(&trace(&g), &short).is_err());
    }

    #[test]
    fn condensation_needs_the_threshold() {
        let tol = TolerancePolicy::Absolute(0.0);
        assert!(verify_condensation(&trace(&[0.5, 0.9, 0.96]), &tol, CONDENSED_GINI).unwrap().passed);
        assert!(!verify_condensation(&trace(&[0.5, 0.9, 0.94]), &tol, CONDENSED_GINI).unwrap().passed);
    }

    fn pareto_samples(n: usize, alpha: f64, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| (1.0 - rng.random::<f64>()).powf(-1.0 / alpha)).collect()
    }

    #[test]
    fn mle_recovers_the_exponent() {
        let fit = pareto_fit_samples(&pareto_samples(100_000, 2.0, 11), 1.0).unwrap();
        let se = fit.stderr.unwrap();
        assert!((se - 2.0 / 100_000f64.sqrt()).abs() < 1e-3);
        assert!((fit.alpha - 2.0).abs() < 3.0 * se, "alpha {} se {se}", fit.alpha);
        assert!((fit.loglog_slope + 2.0).abs() < 0.1);
        assert!(fit.loglog_residual < 0.1, "{}", fit.loglog_residual);
    }

    #[test]
    fn exponential_tail_is_not_a_power_law() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s: Vec<f64> = (0..100_000).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
        let fit = pareto_fit_samples(&s, 0.5).unwrap();
        assert!(fit.loglog_residual > 0.3, "{}", fit.loglog_residual);
        let pareto = pareto_fit_samples(&pareto_samples(100_000, 2.0, 5), 1.0).unwrap();
        assert!(fit.ks_distance > 10.0 * pareto.ks_distance);
    }

    #[test]
    fn empty_tail_is_rejected() {
        let s = vec![1.0; 200];
        assert!(matches!(pareto_fit_samples(&s, 2.0), Err(Error::InsufficientTail { .. })));
        assert!(pareto_fit_samples(&s[..40], 0.5).is_err());
    }

    #[test]
    fn ks_cutoff_finds_the_power_law_onset() {
        // Uniform bulk on [0, 1) below a Pareto tail from 1.
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut s: Vec<f64> = (0..20_000).map(|_| rng.random::<f64>()).collect();
        s.extend(pareto_samples(20_000, 1.5, 10));
        let fit = pareto_fit_auto(&s, 200).unwrap();
        assert!(fit.w_min > 0.95 && fit.w_min < 2.0, "cutoff {}", fit.w_min);
        assert!((fit.alpha - 1.5).abs() < 0.1, "alpha {}", fit.alpha);
    }

    #[test]
    fn density_fit_on_a_pareto_grid() {
        let grid = Arc::new(WealthGrid::log_with_zero_cell(1e-3, 1e8, 1024).unwrap());
        let (d, _) = WealthDistribution::pareto(grid, 2.0, 1.0, 1.0).unwrap();
        let fit = pareto_fit_distribution(&d, 1.0).unwrap();
        assert!((fit.alpha - 2.0).abs() < 0.02, "alpha {}", fit.alpha);
        assert!(fit.loglog_residual < 0.05, "{}", fit.loglog_residual);
        assert!(fit.stderr.is_none());
    }

    #[test]
    fn self_comparison_is_exact() {
        let c = Curve::from_trace("x", &trace(&[0.1, 0.2, 0.3]));
        let r = compare_curves(&[c.clone(), Curve { label: "y".into(), ..c }]).unwrap();
        assert_eq!(r.pairs[0].max_abs, 0.0);
    }

    #[test]
    fn mismatched_setups_are_rejected() {
        let grid = Arc::new(WealthGrid::linear(10.0, 64).unwrap());
        let beta = BetaDistribution::uniform(0.1).unwrap();
        let setup = CompareSetup {
            initial: InitialCondition::Exponential { mean: 1.0 },
            beta,
            grid,
            agent: None,
            boltzmann: None,
            fp: Some((FpConfig { gamma: 0.01, dt: 0.01, t_end: 0.1, closure: Default::default() }, 1)),
            alignment: TimeAlignment::Sweeps,
        };
        assert!(matches!(cross_compare(&setup), Err(Error::ConfigMismatch(_))));
        let fixed = CompareSetup {
            fp: Some((FpConfig { gamma: beta.gamma(), dt: 0.01, t_end: 0.1, closure: Default::default() }, 1)),
            ..setup
        };
        let c = cross_compare(&fixed).unwrap();
        assert_eq!(c.report.curves.len(), 1);
    }
}
