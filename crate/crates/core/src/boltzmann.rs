//! Yard-Sale Boltzmann collision operator and its explicit time integration.
//!
//! The operator is split into
//!
//! ```text
//! term1(w) = -∫dβ η(β) [P(w) - P(w/(1+β))/(1+β)]
//! term2(w) = (1/N) ∫dβ η(β) ∫_0^{w/(1+β)} dx P(x) [P(w - βx) - P(w/(1+β))/(1+β)]
//! ```
//!
//! The β integral uses the nodes of [`BetaDistribution::quadrature`]. Two
//! discretizations are available, see [`Scheme`]. The pointwise one evaluates
//! the formulas at each node: the `x` integral is the trapezoidal rule on the
//! nodes below `w/(1+β)` closed by a partial cell, and off-grid values of `P`
//! come from linear interpolation, reading as zero beyond `w_max`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::beta::{BetaDistribution, BetaNode};
use crate::dist::{Moments, RateField, WealthDistribution};
use crate::error::{param, Error, Result};
use crate::gini::{frechet_derivative_nodes, gini_via_lorenz};
use crate::grid::WealthGrid;
use crate::trace::{GiniRecord, GiniTrace};

pub const DEFAULT_BETA_POINTS: usize = 16;
/// Largest clipped mass per step, as a fraction of `N`.
pub const CLIP_LIMIT: f64 = 1e-3;
/// Default explicit step: `‖dt · rhs‖∞ ≤ DT_SAFETY · ‖P‖∞`.
pub const DT_SAFETY: f64 = 0.1;
/// Upper bound on the default step. Every node sheds mass at rate at most
/// `1 + below/N ≤ 2`, so Euler keeps densities positive for `dt < 1/2`.
pub const DT_MAX: f64 = 0.25;
/// Floor of the non-negativity tolerance for the Gini production rates.
pub const RATE_TOL_FLOOR: f64 = 1e-8;

/// Monotone cursor for repeated interpolation at slowly moving points.
struct Cursor<'a> {
    nodes: &'a [f64],
    widths: &'a [f64],
    values: &'a [f64],
    cell: usize,
}

impl<'a> Cursor<'a> {
    fn new(grid: &'a WealthGrid, values: &'a [f64]) -> Self {
        Self { nodes: grid.nodes(), widths: grid.widths(), values, cell: 0 }
    }

    #[inline]
    fn eval(&mut self, x: f64) -> f64 {
        let last = self.nodes.len() - 1;
        if !(x >= 0.0 && x <= self.nodes[last]) {
            return 0.0;
        }
        while self.cell + 1 < last && self.nodes[self.cell + 1] <= x {
            self.cell += 1;
        }
        while self.cell > 0 && self.nodes[self.cell] > x {
            self.cell -= 1;
        }
        let k = self.cell;
        let theta = (x - self.nodes[k]) / self.widths[k];
        self.values[k] + theta * (self.values[k + 1] - self.values[k])
    }
}

#[derive(Debug, Clone)]
pub struct CollisionTerms {
    pub term1: RateField,
    pub term2: RateField,
    pub total: RateField,
}

/// Gini production of each collision term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateSplit {
    pub rate1: f64,
    pub rate2: f64,
}

impl RateSplit {
    pub fn total(&self) -> f64 {
        self.rate1 + self.rate2
    }
}

/// How the collision operator is discretized on the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Node masses are moved to their post-transaction wealth and split
    /// linearly between the two bracketing nodes. `N` and `W` are conserved to
    /// rounding, apart from mass landing beyond `w_max`.
    #[default]
    Conservative,
    /// The formulas evaluated at each node with linearly interpolated `P`.
    Pointwise,
}

/// The collision operator for a fixed `η`, β quadrature and scheme.
#[derive(Debug, Clone)]
pub struct CollisionOperator {
    beta: BetaDistribution,
    nodes: Vec<BetaNode>,
    scheme: Scheme,
}

/// Both terms on raw node values, plus the rate at which agents land beyond `w_max`.
struct RawTerms {
    term1: Vec<f64>,
    term2: Vec<f64>,
    leak: f64,
}

/// Rows per parallel block in the deposit scheme. Blocks are summed in a fixed
/// order so results do not depend on the thread count.
const DEPOSIT_BLOCK: usize = 16;

/// Splits mass `m` landing at `y` linearly between the bracketing nodes, which
/// keeps its zeroth and first moments. Returns the part beyond the last node.
#[inline]
fn deposit(nodes: &[f64], widths: &[f64], cell: &mut usize, acc: &mut [f64], y: f64, m: f64) -> f64 {
    let last = nodes.len() - 1;
    if y > nodes[last] {
        return m;
    }
    while *cell + 1 < last && nodes[*cell + 1] <= y {
        *cell += 1;
    }
    while *cell > 0 && nodes[*cell] > y {
        *cell -= 1;
    }
    let k = *cell;
    let theta = (y - nodes[k]) / widths[k];
    acc[k] += m * (1.0 - theta);
    acc[k + 1] += m * theta;
    0.0
}

/// Deposits mass `m` split evenly between `nodes[j] ± delta`, keeping the
/// pair's mass, mean `u = nodes[j]` and variance `delta²` exact.
///
/// Splitting a half linearly between its bracketing nodes adds the variance
/// `(y - a)(b - y)`, so both halves are pulled in to `u ± d` with `d ≤ delta`
/// chosen so the two splits together have second moment `delta²` about `u`.
/// Within fixed cells that moment is linear in `d`. When the pair fits in the
/// two cells adjacent to `u` this reduces to a three-node stencil. Returns the
/// part beyond the last node; such pairs are split without correction.
#[inline]
fn deposit_pair(nodes: &[f64], widths: &[f64], acc: &mut [f64], j: usize, delta: f64, m: f64) -> f64 {
    let last = nodes.len() - 1;
    let u = nodes[j];
    if delta == 0.0 {
        acc[j] += m;
        return 0.0;
    }
    if j == 0 || u + delta > nodes[last] {
        let mut cell = j.min(last - 1);
        let lost = deposit(nodes, widths, &mut cell, acc, u + delta, 0.5 * m);
        let mut cell = j.min(last - 1);
        return lost + deposit(nodes, widths, &mut cell, acc, (u - delta).max(0.0), 0.5 * m);
    }
    let mut up = j.min(last - 1);
    while up + 1 < last && nodes[up + 1] <= u + delta {
        up += 1;
    }
    let mut down = j - 1;
    while down > 0 && nodes[down] > u - delta {
        down -= 1;
    }
    let target = delta * delta;
    let g = |y: f64| (y - u) * (y - u);
    let mut d = delta;
    loop {
        let (ap, bp, am, bm) = (nodes[up], nodes[up + 1], nodes[down], nodes[down + 1]);
        let sp = (g(bp) - g(ap)) / (bp - ap);
        let sm = (g(bm) - g(am)) / (bm - am);
        let moment = |x: f64| 0.5 * (g(ap) + sp * (u + x - ap) + g(am) + sm * (u - x - am));
        let slope = 0.5 * (sp - sm);
        let x = d + (target - moment(d)) / slope;
        let lo = (ap - u).max(u - bm);
        let hi = (bp - u).min(u - am);
        if x < lo && lo > 0.0 {
            // One half reaches a node; continue in the next cell inward.
            if ap - u >= u - bm && up > j {
                up -= 1;
            } else if down + 1 < j {
                down += 1;
            } else {
                d = lo;
                break;
            }
            d = lo;
        } else {
            d = x.clamp(lo.max(0.0), hi);
            break;
        }
    }
    let theta = (u + d - nodes[up]) / widths[up];
    acc[up] += 0.5 * m * (1.0 - theta);
    acc[up + 1] += 0.5 * m * theta;
    let theta = (u - d - nodes[down]) / widths[down];
    acc[down] += 0.5 * m * (1.0 - theta);
    acc[down + 1] += 0.5 * m * theta;
    0.0
}

/// True when the slices come in mirror pairs with equal weights.
fn is_symmetric(slices: &[BetaNode]) -> bool {
    let n = slices.len();
    (0..n).all(|i| slices[i].beta == -slices[n - 1 - i].beta && slices[i].weight == slices[n - 1 - i].weight)
}

impl CollisionOperator {
    pub fn new(beta: BetaDistribution, beta_points: usize) -> Result<Self> {
        Self::with_scheme(beta, beta_points, Scheme::default())
    }

    pub fn with_scheme(beta: BetaDistribution, beta_points: usize, scheme: Scheme) -> Result<Self> {
        let nodes = beta.quadrature(beta_points)?;
        Ok(Self { beta, nodes, scheme })
    }

    pub fn beta(&self) -> &BetaDistribution {
        &self.beta
    }

    pub fn beta_nodes(&self) -> &[BetaNode] {
        &self.nodes
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    fn raw(&self, grid: &WealthGrid, p: &[f64], slices: &[BetaNode]) -> RawTerms {
        match self.scheme {
            Scheme::Conservative => self.deposit_raw(grid, p, slices),
            Scheme::Pointwise => {
                let term1 = self.term1_pointwise(grid, p, slices);
                let term2 = self.term2_pointwise(grid, p, slices);
                let cum = grid.cumulative(p);
                let total = cum[cum.len() - 1];
                let leak = slices
                    .iter()
                    .filter(|b| b.beta > 0.0)
                    .map(|b| b.weight * (total - grid.integral_to(p, &cum, grid.w_max() / (1.0 + b.beta))))
                    .sum();
                RawTerms { term1, term2, leak }
            }
        }
    }

    fn deposit_raw(&self, grid: &WealthGrid, p: &[f64], slices: &[BetaNode]) -> RawTerms {
        let nodes = grid.nodes();
        let widths = grid.widths();
        let weights = grid.weights();
        let n = nodes.len();
        let mass: Vec<f64> = p.iter().zip(weights).map(|(v, q)| v * q).collect();
        let n_agents: f64 = mass.iter().sum();
        // Agents strictly poorer than node j.
        let mut below = vec![0.0; n];
        for j in 1..n {
            below[j] = below[j - 1] + mass[j - 1];
        }

        // Mirror pairs ±β are deposited together when available.
        let paired = is_symmetric(slices);
        let half: Vec<BetaNode> = if paired {
            slices
                .iter()
                .filter(|b| b.beta >= 0.0)
                .map(|b| BetaNode { beta: b.beta, weight: if b.beta > 0.0 { 2.0 * b.weight } else { b.weight } })
                .collect()
        } else {
            slices.to_vec()
        };

        // Term 1: every agent moves from u to (1+β)u.
        let mut gain1 = vec![0.0; n];
        let mut leak = 0.0;
        for b in &half {
            let mut cell = 0;
            for j in 0..n {
                let m = b.weight * mass[j];
                leak += if paired {
                    deposit_pair(nodes, widths, &mut gain1, j, b.beta * nodes[j], m)
                } else {
                    deposit(nodes, widths, &mut cell, &mut gain1, (1.0 + b.beta) * nodes[j], m)
                };
            }
        }

        // Term 2: for each poorer partner x_k < u_j, the agent at u_j lands at
        // u_j + βx_k instead of (1+β)u_j.
        let blocks: Vec<(Vec<f64>, f64)> = (0..n.div_ceil(DEPOSIT_BLOCK))
            .into_par_iter()
            .map(|block| {
                let mut acc = vec![0.0; n];
                let mut lost = 0.0;
                let rows = block * DEPOSIT_BLOCK..((block + 1) * DEPOSIT_BLOCK).min(n);
                for j in rows {
                    if mass[j] == 0.0 || below[j] == 0.0 {
                        continue;
                    }
                    for b in &half {
                        let q = b.weight * mass[j];
                        if paired {
                            for k in 0..j {
                                if mass[k] != 0.0 {
                                    lost += deposit_pair(nodes, widths, &mut acc, j, b.beta * nodes[k], q * mass[k]);
                                }
                            }
                            lost += deposit_pair(nodes, widths, &mut acc, j, b.beta * nodes[j], -q * below[j]);
                        } else {
                            let mut cell = j.min(n - 2);
                            for k in 0..j {
                                if mass[k] != 0.0 {
                                    lost += deposit(nodes, widths, &mut cell, &mut acc, nodes[j] + b.beta * nodes[k], q * mass[k]);
                                }
                            }
                            let mut cell = j.min(n - 2);
                            lost += deposit(nodes, widths, &mut cell, &mut acc, (1.0 + b.beta) * nodes[j], -q * below[j]);
                        }
                    }
                }
                (acc, lost)
            })
            .collect();
        let mut gain2 = vec![0.0; n];
        for (acc, lost) in &blocks {
            for (g, a) in gain2.iter_mut().zip(acc) {
                *g += a;
            }
            leak += lost / n_agents;
        }

        let total_weight: f64 = slices.iter().map(|b| b.weight).sum();
        let term1 = (0..n).map(|i| gain1[i] / weights[i] - total_weight * p[i]).collect();
        let term2 = (0..n).map(|i| gain2[i] / (weights[i] * n_agents)).collect();
        RawTerms { term1, term2, leak }
    }

    fn term1_pointwise(&self, grid: &WealthGrid, p: &[f64], slices: &[BetaNode]) -> Vec<f64> {
        grid.nodes()
            .par_iter()
            .zip(p.par_iter())
            .map(|(&w, &pw)| {
                slices
                    .iter()
                    .map(|b| {
                        let s = 1.0 + b.beta;
                        -b.weight * (pw - grid.interpolate(p, w / s) / s)
                    })
                    .sum()
            })
            .collect()
    }

    fn term2_pointwise(&self, grid: &WealthGrid, p: &[f64], slices: &[BetaNode]) -> Vec<f64> {
        let n_agents = grid.integrate(p);
        let cum = grid.cumulative(p);
        let nodes = grid.nodes();
        let widths = grid.widths();
        let last = nodes.len() - 1;
        nodes
            .par_iter()
            .map(|&w| {
                let mut acc = 0.0;
                for b in slices {
                    let s = 1.0 + b.beta;
                    let upper = w / s;
                    let gain_at = grid.interpolate(p, upper) / s;
                    let poorer = grid.integral_to(p, &cum, upper);
                    // ∫_0^upper P(x) P(w - βx) dx
                    let (full_cells, partial) = match grid.locate(upper) {
                        Some((k, theta)) => (k, Some(theta)),
                        None => (last, None),
                    };
                    let mut cursor = Cursor::new(grid, p);
                    let mut f_prev = p[0] * cursor.eval(w);
                    let mut pair = 0.0;
                    for k in 0..full_cells {
                        let f_next = p[k + 1] * cursor.eval(w - b.beta * nodes[k + 1]);
                        pair += 0.5 * widths[k] * (f_prev + f_next);
                        f_prev = f_next;
                    }
                    if let Some(theta) = partial {
                        if theta > 0.0 {
                            let k = full_cells;
                            let f_end = grid.interpolate(p, upper) * cursor.eval(w - b.beta * upper);
                            pair += 0.5 * theta * widths[k] * (f_prev + f_end);
                        }
                    }
                    acc += b.weight * (pair - gain_at * poorer);
                }
                acc / n_agents
            })
            .collect()
    }

    fn total_raw(&self, grid: &WealthGrid, p: &[f64]) -> Vec<f64> {
        let raw = self.raw(grid, p, &self.nodes);
        raw.term1.iter().zip(&raw.term2).map(|(a, b)| a + b).collect()
    }

    pub fn terms(&self, dist: &WealthDistribution) -> Result<CollisionTerms> {
        let raw = self.raw(dist.grid(), dist.density(), &self.nodes);
        let grid = dist.shared_grid();
        let term1 = RateField::new(grid.clone(), raw.term1)?;
        let term2 = RateField::new(grid.clone(), raw.term2)?;
        let total = term1.add(&term2)?;
        Ok(CollisionTerms { term1, term2, total })
    }

    pub fn term1(&self, dist: &WealthDistribution) -> Result<RateField> {
        Ok(self.terms(dist)?.term1)
    }

    pub fn term2(&self, dist: &WealthDistribution) -> Result<RateField> {
        Ok(self.terms(dist)?.term2)
    }

    pub fn rhs(&self, dist: &WealthDistribution) -> Result<RateField> {
        RateField::new(dist.shared_grid().clone(), self.total_raw(dist.grid(), dist.density()))
    }

    /// `(dG/dt)_j = ∫ (δG/δP) term_j dw` for both terms.
    pub fn gini_rate_split(&self, dist: &WealthDistribution) -> Result<RateSplit> {
        let terms = self.terms(dist)?;
        let grad = frechet_derivative_nodes(dist);
        Ok(RateSplit { rate1: weighted_dot(dist, &grad, &terms.term1), rate2: weighted_dot(dist, &grad, &terms.term2) })
    }

    /// Contribution to `(dG/dt)_2` from the `β < 0` slices alone. Diagnostic
    /// only; its sign is not asserted anywhere.
    pub fn rate2_negative_beta(&self, dist: &WealthDistribution) -> Result<f64> {
        let slices: Vec<BetaNode> = self.nodes.iter().copied().filter(|b| b.beta < 0.0).collect();
        let raw = self.raw(dist.grid(), dist.density(), &slices);
        let t2 = RateField::new(dist.shared_grid().clone(), raw.term2)?;
        Ok(weighted_dot(dist, &frechet_derivative_nodes(dist), &t2))
    }

    /// Grid-halving error estimate of the two rates: the change when the same
    /// piecewise-linear state is evaluated on the refined grid.
    pub fn rate_split_error(&self, dist: &WealthDistribution) -> Result<RateSplit> {
        let coarse = self.gini_rate_split(dist)?;
        let fine_grid = std::sync::Arc::new(dist.grid().refined());
        let fine = self.gini_rate_split(&dist.regrid(fine_grid)?)?;
        Ok(RateSplit {
            rate1: (fine.rate1 - coarse.rate1).abs(),
            rate2: (fine.rate2 - coarse.rate2).abs(),
        })
    }

    /// Rate at which agents land beyond `w_max` and are lost to truncation.
    pub fn truncation_outflow(&self, dist: &WealthDistribution) -> f64 {
        self.raw(dist.grid(), dist.density(), &self.nodes).leak
    }

    /// `DT_SAFETY · ‖P‖∞ / ‖rhs‖∞`, capped at [`DT_MAX`].
    pub fn suggested_dt(&self, dist: &WealthDistribution) -> Result<f64> {
        let rhs = self.rhs(dist)?;
        let r = rhs.max_abs();
        Ok(if r > 0.0 { (DT_SAFETY * dist.max_density() / r).min(DT_MAX) } else { DT_MAX })
    }
}

fn weighted_dot(dist: &WealthDistribution, grad: &[f64], f: &RateField) -> f64 {
    grad.iter()
        .zip(f.values())
        .zip(dist.grid().weights())
        .map(|((g, v), q)| g * v * q)
        .sum()
}

pub fn collision_term1(dist: &WealthDistribution, beta: &BetaDistribution, beta_points: usize) -> Result<RateField> {
    CollisionOperator::new(*beta, beta_points)?.term1(dist)
}

pub fn collision_term2(dist: &WealthDistribution, beta: &BetaDistribution, beta_points: usize) -> Result<RateField> {
    CollisionOperator::new(*beta, beta_points)?.term2(dist)
}

pub fn gini_rate_split(dist: &WealthDistribution, beta: &BetaDistribution, beta_points: usize) -> Result<RateSplit> {
    CollisionOperator::new(*beta, beta_points)?.gini_rate_split(dist)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Integrator {
    #[default]
    Euler,
    Rk4,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoltzmannConfig {
    pub beta: BetaDistribution,
    pub beta_quadrature_points: usize,
    pub dt: f64,
    pub t_end: f64,
    #[serde(default)]
    pub integrator: Integrator,
}

impl BoltzmannConfig {
    pub fn validate(&self) -> Result<()> {
        if self.beta_quadrature_points < 2 {
            return Err(param("beta_quadrature_points", "need at least 2"));
        }
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

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepReport {
    /// Agents removed by clipping negative densities to zero.
    pub clipped_mass: f64,
    /// Agents carried past `w_max` during the step (estimate from term1).
    pub leaked_mass: f64,
}

/// Explicit update `P ← P + dt·rhs` (or RK4), then negative values clipped to
/// zero. Fails if the clipped mass exceeds [`CLIP_LIMIT`]` · N`.
pub fn step_with(
    op: &CollisionOperator,
    dist: &WealthDistribution,
    dt: f64,
    integrator: Integrator,
) -> Result<(WealthDistribution, StepReport)> {
    let grid = dist.grid();
    let p = dist.density();
    let advance = |base: &[f64], k: &[f64], h: f64| -> Vec<f64> {
        base.iter().zip(k).map(|(a, b)| a + h * b).collect()
    };
    let first = op.raw(grid, p, &op.nodes);
    let k1: Vec<f64> = first.term1.iter().zip(&first.term2).map(|(a, b)| a + b).collect();
    let mut next = match integrator {
        Integrator::Euler => advance(p, &k1, dt),
        Integrator::Rk4 => {
            let k2 = op.total_raw(grid, &advance(p, &k1, 0.5 * dt));
            let k3 = op.total_raw(grid, &advance(p, &k2, 0.5 * dt));
            let k4 = op.total_raw(grid, &advance(p, &k3, dt));
            p.iter()
                .enumerate()
                .map(|(i, v)| v + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
                .collect()
        }
    };
    if next.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("Boltzmann update"));
    }
    let mut clipped = 0.0;
    for (v, q) in next.iter_mut().zip(grid.weights()) {
        if *v < 0.0 {
            clipped -= *v * q;
            *v = 0.0;
        }
    }
    let limit = CLIP_LIMIT * dist.moments().n;
    if clipped > limit {
        return Err(Error::ClipLimit { clipped, limit });
    }
    let leaked = dt * first.leak;
    Ok((dist.with_density(next)?, StepReport { clipped_mass: clipped, leaked_mass: leaked }))
}

pub fn step_boltzmann(dist: &WealthDistribution, config: &BoltzmannConfig) -> Result<(WealthDistribution, StepReport)> {
    config.validate()?;
    let op = CollisionOperator::new(config.beta, config.beta_quadrature_points)?;
    step_with(&op, dist, config.dt, config.integrator)
}

/// Production rates recorded alongside the trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateRecord {
    pub step: usize,
    pub t: f64,
    pub split: RateSplit,
    /// Grid-halving error estimate; present when requested.
    pub error: Option<RateSplit>,
    pub rate2_negative_beta: f64,
}

#[derive(Debug, Clone)]
pub struct BoltzmannRun {
    pub trace: GiniTrace,
    pub rates: Vec<RateRecord>,
    pub checkpoints: Vec<(usize, WealthDistribution)>,
    pub final_state: WealthDistribution,
    pub initial_moments: Moments,
    pub total_clipped: f64,
    pub total_leaked: f64,
}

impl BoltzmannRun {
    pub fn relative_drift(&self) -> Moments {
        let m = self.final_state.moments();
        Moments {
            n: (m.n - self.initial_moments.n).abs() / self.initial_moments.n,
            w: (m.w - self.initial_moments.w).abs() / self.initial_moments.w,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    /// Record `G`, moments and production rates every this many steps.
    pub record_every: usize,
    /// Keep a copy of the state every this many steps (0 = never).
    pub checkpoint_every: usize,
    /// Also estimate rate errors by grid halving at each record.
    pub estimate_errors: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { record_every: 10, checkpoint_every: 0, estimate_errors: false }
    }
}

pub fn solve(initial: &WealthDistribution, config: &BoltzmannConfig, options: RunOptions) -> Result<BoltzmannRun> {
    config.validate()?;
    if options.record_every == 0 {
        return Err(param("record_every", "must be positive"));
    }
    let op = CollisionOperator::new(config.beta, config.beta_quadrature_points)?;
    let steps = config.steps();
    let mut state = initial.clone();
    let mut trace = GiniTrace::new();
    let mut rates = Vec::new();
    let mut checkpoints = Vec::new();
    let (mut total_clipped, mut total_leaked) = (0.0, 0.0);

    let mut observe = |step: usize, state: &WealthDistribution, trace: &mut GiniTrace| -> Result<()> {
        let t = step as f64 * config.dt;
        let split = op.gini_rate_split(state)?;
        let error = if options.estimate_errors { Some(op.rate_split_error(state)?) } else { None };
        let m = state.moments();
        trace.push(GiniRecord { t, g: gini_via_lorenz(state)?, n: m.n, w: m.w, dgdt: split.total() })?;
        rates.push(RateRecord {
            step,
            t,
            split,
            error,
            rate2_negative_beta: op.rate2_negative_beta(state)?,
        });
        Ok(())
    };

    observe(0, &state, &mut trace)?;
    if options.checkpoint_every > 0 {
        checkpoints.push((0, state.clone()));
    }
    for step in 1..=steps {
        let (next, report) = step_with(&op, &state, config.dt, config.integrator)?;
        total_clipped += report.clipped_mass;
        total_leaked += report.leaked_mass;
        state = next;
        if step % options.record_every == 0 || step == steps {
            observe(step, &state, &mut trace)?;
        }
        if options.checkpoint_every > 0 && (step % options.checkpoint_every == 0 || step == steps) {
            checkpoints.push((step, state.clone()));
        }
    }
    Ok(BoltzmannRun {
        trace,
        rates,
        checkpoints,
        final_state: state,
        initial_moments: initial.moments(),
        total_clipped,
        total_leaked,
    })
}
