//! Nonlocal Fokker-Planck limit `∂P/∂t = ∂²/∂w² (γ w²/2 · K(w) · P)`.
//!
//! `K` is the diffusion closure: the nonlocal coefficient `C(w)` itself, or
//! `1 - C(w)`, which is what the small-β expansion of the collision operator
//! produces (see [`Closure`]). The second derivative is differenced in flux
//! form with zero flux through both ends, so `N` is conserved to rounding and
//! `W` changes only by the value of `γ w²K P/2` at `w_max`.

use serde::{Deserialize, Serialize};

use crate::dist::{Moments, RateField, WealthDistribution};
use crate::error::{param, Error, Result};
use crate::gini::gini_via_lorenz;
use crate::grid::WealthGrid;
use crate::trace::{GiniRecord, GiniTrace};

/// Explicit diffusion stability constant.
pub const CFL: f64 = 0.4;
/// Largest tolerated boundary flux, in units of `γ N` per unit time.
pub const BOUNDARY_FLUX_LIMIT: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Closure {
    /// `K = C`.
    #[default]
    C,
    /// `K = 1 - C`, the diffusion coefficient `⟨Δw²⟩ / (γ w²)` of one
    /// transaction against the current population.
    OneMinusC,
}

/// `C(w_i) = (1/N) ∫_0^{w_i} P(x) (1 - x²/w_i²) dx` on the grid nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct NonlocalCoefficient {
    values: Vec<f64>,
}

impl NonlocalCoefficient {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn closure(&self, closure: Closure) -> Vec<f64> {
        match closure {
            Closure::C => self.values.clone(),
            Closure::OneMinusC => self.values.iter().map(|c| 1.0 - c).collect(),
        }
    }
}

fn coefficient_raw(grid: &WealthGrid, p: &[f64]) -> Vec<f64> {
    let nodes = grid.nodes();
    let n_agents = grid.integrate(p);
    let cum_p = grid.cumulative(p);
    let px2: Vec<f64> = p.iter().zip(nodes).map(|(v, w)| v * w * w).collect();
    let cum_px2 = grid.cumulative(&px2);
    nodes
        .iter()
        .enumerate()
        .map(|(i, &w)| {
            if w == 0.0 {
                0.0
            } else {
                ((cum_p[i] - cum_px2[i] / (w * w)) / n_agents).clamp(0.0, 1.0)
            }
        })
        .collect()
}

pub fn compute_c(dist: &WealthDistribution) -> NonlocalCoefficient {
    NonlocalCoefficient { values: coefficient_raw(dist.grid(), dist.density()) }
}

/// `u_i = γ w_i²/2 · K_i · P_i`.
fn diffused(grid: &WealthGrid, p: &[f64], gamma: f64, closure: Closure) -> Vec<f64> {
    let k = NonlocalCoefficient { values: coefficient_raw(grid, p) }.closure(closure);
    grid.nodes()
        .iter()
        .zip(p)
        .zip(&k)
        .map(|((w, v), k)| 0.5 * gamma * w * w * k * v)
        .collect()
}

fn rhs_raw(grid: &WealthGrid, p: &[f64], gamma: f64, closure: Closure) -> Vec<f64> {
    let u = diffused(grid, p, gamma, closure);
    let h = grid.widths();
    let q = grid.weights();
    let n = u.len();
    let flux: Vec<f64> = (0..n - 1).map(|i| (u[i + 1] - u[i]) / h[i]).collect();
    (0..n)
        .map(|i| {
            let right = if i + 1 < n { flux[i] } else { 0.0 };
            let left = if i > 0 { flux[i - 1] } else { 0.0 };
            (right - left) / q[i]
        })
        .collect()
}

pub fn fp_rhs(dist: &WealthDistribution, gamma: f64, closure: Closure) -> Result<RateField> {
    check_gamma(gamma)?;
    RateField::new(dist.shared_grid().clone(), rhs_raw(dist.grid(), dist.density(), gamma, closure))
}

/// Closed-form production `dG/dt = (γ/NW) ∫ P² w² K dw`, non-negative by
/// construction.
pub fn fp_gini_rate(dist: &WealthDistribution, gamma: f64, closure: Closure) -> Result<f64> {
    check_gamma(gamma)?;
    let m = dist.moments();
    let u = diffused(dist.grid(), dist.density(), gamma, closure);
    let acc: f64 = u
        .iter()
        .zip(dist.density())
        .zip(dist.grid().weights())
        .map(|((u, p), q)| u * p * q)
        .sum();
    Ok(2.0 * acc / (m.n * m.w))
}

fn bound_for(grid: &WealthGrid, gamma: f64, k: impl Fn(usize) -> f64) -> f64 {
    let h = grid.widths();
    let q = grid.weights();
    let n = grid.len();
    let mut stiffest: f64 = 0.0;
    for i in 1..n {
        let w = grid.nodes()[i];
        let d = 0.5 * gamma * w * w * k(i);
        let inv = if i + 1 < n { 1.0 / h[i - 1] + 1.0 / h[i] } else { 1.0 / h[i - 1] };
        stiffest = stiffest.max(d * inv / q[i]);
    }
    if stiffest > 0.0 {
        2.0 * CFL / stiffest
    } else {
        f64::INFINITY
    }
}

/// Largest stable explicit step, `CFL · min h_{i-1} h_i / (γ w_i² K_i)`.
pub fn stability_bound(dist: &WealthDistribution, gamma: f64, closure: Closure) -> Result<f64> {
    check_gamma(gamma)?;
    let k = compute_c(dist).closure(closure);
    Ok(bound_for(dist.grid(), gamma, |i| k[i]))
}

/// The bound with `K = 1`, valid for every state on `grid` since both
/// closures lie in `[0, 1]`.
pub fn uniform_stability_bound(grid: &WealthGrid, gamma: f64) -> Result<f64> {
    check_gamma(gamma)?;
    Ok(bound_for(grid, gamma, |_| 1.0))
}

/// What the zero-flux truncation at `w_max` suppresses: the agent flux an
/// unbounded domain would carry outward, and the wealth that leaks through the
/// boundary term `γ w²K P/2` per unit time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryFlux {
    pub agents: f64,
    pub wealth: f64,
}

impl BoundaryFlux {
    /// True when either flux exceeds [`BOUNDARY_FLUX_LIMIT`]` · γ N`.
    pub fn truncated(&self, gamma: f64, n_agents: f64) -> bool {
        let limit = BOUNDARY_FLUX_LIMIT * gamma * n_agents;
        self.agents.abs() > limit || self.wealth.abs() > limit
    }
}

pub fn boundary_flux(dist: &WealthDistribution, gamma: f64, closure: Closure) -> Result<BoundaryFlux> {
    check_gamma(gamma)?;
    let u = diffused(dist.grid(), dist.density(), gamma, closure);
    let n = u.len();
    let h = dist.grid().widths()[n - 2];
    Ok(BoundaryFlux { agents: -(u[n - 1] - u[n - 2]) / h, wealth: u[n - 1] })
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma.is_finite() {
        Ok(())
    } else {
        Err(param("gamma", format!("must be positive, got {gamma}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FpConfig {
    pub gamma: f64,
    pub dt: f64,
    pub t_end: f64,
    #[serde(default)]
    pub closure: Closure,
}

impl FpConfig {
    pub fn validate(&self) -> Result<()> {
        check_gamma(self.gamma)?;
        if !(self.dt >= 0.0 && self.dt.is_finite()) {
            return Err(param("dt", format!("must be non-negative, got {}", self.dt)));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(param("t_end", format!("must be non-negative, got {}", self.t_end)));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        if self.dt > 0.0 {
            (self.t_end / self.dt - 1e-9).ceil().max(0.0) as usize
        } else {
            0
        }
    }
}

fn step_raw(grid: &WealthGrid, p: &[f64], config: &FpConfig) -> Result<Vec<f64>> {
    let rhs = rhs_raw(grid, p, config.gamma, config.closure);
    let mut next: Vec<f64> = p.iter().zip(&rhs).map(|(v, r)| v + config.dt * r).collect();
    if next.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("Fokker-Planck update"));
    }
    // Under the stability bound the update is a non-negative combination;
    // only rounding can dip below zero.
    for v in next.iter_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    Ok(next)
}

/// One explicit flux-form step. Fails if `dt` exceeds [`stability_bound`].
pub fn step_fp(dist: &WealthDistribution, config: &FpConfig) -> Result<WealthDistribution> {
    config.validate()?;
    let bound = stability_bound(dist, config.gamma, config.closure)?;
    if config.dt > bound {
        return Err(Error::StabilityBound { dt: config.dt, bound });
    }
    dist.with_density(step_raw(dist.grid(), dist.density(), config)?)
}

/// Diagnostics recorded alongside the trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FpRecord {
    pub step: usize,
    pub t: f64,
    /// Agents below `0.01 · W/N`, as a fraction of `N`.
    pub poor_fraction: f64,
    pub second_moment: f64,
    pub boundary: BoundaryFlux,
}

#[derive(Debug, Clone)]
pub struct FpRun {
    pub trace: GiniTrace,
    pub records: Vec<FpRecord>,
    pub checkpoints: Vec<(usize, WealthDistribution)>,
    pub final_state: WealthDistribution,
    pub initial_moments: Moments,
    /// Some record had a boundary flux above the truncation limit.
    pub truncated: bool,
}

impl FpRun {
    pub fn relative_drift(&self) -> Moments {
        let m = self.final_state.moments();
        Moments {
            n: (m.n - self.initial_moments.n).abs() / self.initial_moments.n,
            w: (m.w - self.initial_moments.w).abs() / self.initial_moments.w,
        }
    }
}

pub fn poor_fraction(dist: &WealthDistribution) -> Result<f64> {
    let m = dist.moments();
    let cut = (0.01 * m.w / m.n).min(dist.grid().w_max());
    Ok(dist.cumulative_agents(cut)? / m.n)
}

/// Integrates to `t_end`, recording every `record_every` steps and keeping a
/// state copy every `checkpoint_every` steps (0 = never). The stability bound
/// is checked before every step.
pub fn solve(
    initial: &WealthDistribution,
    config: &FpConfig,
    record_every: usize,
    checkpoint_every: usize,
) -> Result<FpRun> {
    config.validate()?;
    if record_every == 0 {
        return Err(param("record_every", "must be positive"));
    }
    let steps = config.steps();
    let mut state = initial.clone();
    let mut trace = GiniTrace::new();
    let mut records = Vec::new();
    let mut checkpoints = Vec::new();
    let mut truncated = false;

    let mut observe = |step: usize, state: &WealthDistribution, trace: &mut GiniTrace| -> Result<()> {
        let t = step as f64 * config.dt;
        let m = state.moments();
        let rate = fp_gini_rate(state, config.gamma, config.closure)?;
        trace.push(GiniRecord { t, g: gini_via_lorenz(state)?, n: m.n, w: m.w, dgdt: rate })?;
        let boundary = boundary_flux(state, config.gamma, config.closure)?;
        truncated |= boundary.truncated(config.gamma, m.n);
        records.push(FpRecord {
            step,
            t,
            poor_fraction: poor_fraction(state)?,
            second_moment: state.second_moment(),
            boundary,
        });
        Ok(())
    };

    observe(0, &state, &mut trace)?;
    if checkpoint_every > 0 {
        checkpoints.push((0, state.clone()));
    }
    for step in 1..=steps {
        state = step_fp(&state, config)?;
        if step % record_every == 0 || step == steps {
            observe(step, &state, &mut trace)?;
        }
        if checkpoint_every > 0 && (step % checkpoint_every == 0 || step == steps) {
            checkpoints.push((step, state.clone()));
        }
    }
    Ok(FpRun { trace, records, checkpoints, final_state: state, initial_moments: initial.moments(), truncated })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    fn exp_state(n: usize) -> WealthDistribution {
        let grid = Arc::new(WealthGrid::log_with_zero_cell(1e-4, 200.0, n).unwrap());
        WealthDistribution::exponential(grid, 1.0, 1.0).unwrap()
    }

    #[test]
    fn coefficient_of_an_atom() {
        let grid = Arc::new(WealthGrid::linear(4.0, 401).unwrap());
        let d = WealthDistribution::atom(grid.clone(), 1.0, 3.0).unwrap();
        let c = compute_c(&d);
        assert_eq!(c.values()[0], 0.0);
        let at_2a = c.values()[grid.nearest(2.0)];
        // The atom occupies a trapezoid cell, so the weight sits at exactly w = 1.
        assert!((at_2a - 0.75).abs() < 1e-12, "{at_2a}");
        assert!(c.values()[400] > 0.93);
    }

    #[test]
    fn coefficient_is_monotone_and_bounded() {
        let d = exp_state(256);
        let c = compute_c(&d);
        let f = d.cumulative_agents_at_nodes();
        let c = c.values();
        assert!(c.windows(2).all(|p| p[1] >= p[0]));
        assert!(c.iter().zip(&f).all(|(c, f)| *c <= f + 1e-12));
    }

    #[test]
    fn rhs_moments_telescope() {
        let d = exp_state(256);
        for closure in [Closure::C, Closure::OneMinusC] {
            let r = fp_rhs(&d, 0.01, closure).unwrap();
            let m = r.moments();
            let flux = boundary_flux(&d, 0.01, closure).unwrap();
            assert!(m.n.abs() < 1e-15);
            assert!((m.w + flux.wealth).abs() < 1e-15);
        }
    }

    #[test]
    fn closed_form_rate_is_non_negative_and_matches_chain_rule() {
        let d = exp_state(1024);
        for closure in [Closure::C, Closure::OneMinusC] {
            let closed = fp_gini_rate(&d, 0.02, closure).unwrap();
            let chain = crate::gini::gini_rate(&d, &fp_rhs(&d, 0.02, closure).unwrap()).unwrap();
            assert!(closed > 0.0);
            assert!((closed - chain).abs() < 1e-3 * closed, "{closed} {chain}");
        }
    }

    #[test]
    fn zero_dt_is_identity_and_cfl_is_enforced() {
        let d = exp_state(128);
        let config = FpConfig { gamma: 0.05, dt: 0.0, t_end: 0.0, closure: Closure::C };
        assert_eq!(step_fp(&d, &config).unwrap().density(), d.density());
        let bound = stability_bound(&d, 0.05, Closure::C).unwrap();
        let too_big = FpConfig { dt: 1.01 * bound, ..config };
        assert!(matches!(step_fp(&d, &too_big), Err(Error::StabilityBound { .. })));
        assert!(step_fp(&d, &FpConfig { dt: bound, ..config }).is_ok());
        assert!(FpConfig { gamma: 0.0, ..config }.validate().is_err());
    }
}
