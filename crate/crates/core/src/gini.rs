//! The Gini functional and its derivative.
//!
//! On the grid, `P` induces node masses `m_i = ω_i P_i` (trapezoid weights).
//! Both integral forms of the Gini coefficient are evaluated against this
//! measure, with the cumulative factor (`L` or `A`) taken at the midpoint of
//! its jump across each node. With that convention the two forms reduce to the
//! same double sum `Σ m_i m_j |w_i - w_j| / (2NW)`, so they agree to rounding
//! and an all-in-one-cell atom has `G = 0` exactly.

use crate::dist::{same_grid, RateField, WealthDistribution};
use crate::error::{Error, Result};

/// Raw Gini values may overshoot `[0, 1]` by this much from rounding before
/// they are reported as errors.
pub const GINI_RANGE_TOL: f64 = 1e-9;

fn checked(raw: f64) -> Result<f64> {
    if !raw.is_finite() {
        return Err(Error::NonFinite("Gini quadrature"));
    }
    if !(-GINI_RANGE_TOL..=1.0 + GINI_RANGE_TOL).contains(&raw) {
        return Err(Error::GiniOutOfRange { raw });
    }
    Ok(raw.clamp(0.0, 1.0))
}

/// `G = 1 - (2/N) ∫ P(w) L(w) dw`.
pub fn gini_via_lorenz(dist: &WealthDistribution) -> Result<f64> {
    let m = dist.node_masses();
    let nodes = dist.grid().nodes();
    let moments = dist.moments();
    let mut wealth_below = 0.0;
    let mut acc = 0.0;
    for (mi, wi) in m.iter().zip(nodes) {
        let l_mid = (wealth_below + 0.5 * mi * wi) / moments.w;
        acc += mi * l_mid;
        wealth_below += mi * wi;
    }
    checked(1.0 - 2.0 * acc / moments.n)
}

/// `G = 1 - (2/W) ∫ P(w) A(w) w dw`.
pub fn gini_via_survival(dist: &WealthDistribution) -> Result<f64> {
    let m = dist.node_masses();
    let nodes = dist.grid().nodes();
    let moments = dist.moments();
    let mut agents_above = 0.0;
    let mut acc = 0.0;
    for (mi, wi) in m.iter().zip(nodes).rev() {
        let a_mid = (agents_above + 0.5 * mi) / moments.n;
        acc += mi * a_mid * wi;
        agents_above += mi;
    }
    checked(1.0 - 2.0 * acc / moments.w)
}

/// Mean-absolute-difference Gini of a finite sample,
/// `Σ_{i,j} |w_i - w_j| / (2 n² w̄)`. No small-sample correction, so the
/// maximum is `1 - 1/n`.
pub fn sample_gini(wealths: &[f64]) -> Result<f64> {
    if wealths.len() < 2 {
        return Err(Error::TooFewSamples { need: 2, got: wealths.len() });
    }
    if wealths.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(Error::InvalidDistribution("wealth samples must be finite and non-negative".into()));
    }
    let mut sorted = wealths.to_vec();
    sorted.sort_by(f64::total_cmp);
    sample_gini_sorted(&sorted)
}

/// [`sample_gini`] for input already sorted ascending.
pub fn sample_gini_sorted(sorted: &[f64]) -> Result<f64> {
    let n = sorted.len();
    let total: f64 = sorted.iter().sum();
    if !(total > 0.0) {
        return Err(Error::ZeroWealth);
    }
    let nf = n as f64;
    let weighted: f64 = sorted
        .iter()
        .enumerate()
        .map(|(i, w)| (2.0 * (i as f64 + 1.0) - nf - 1.0) * w)
        .sum();
    Ok((weighted / (nf * total)).max(0.0))
}

/// `δG/δP(w) = (2/W)[-w + (1/N) ∫_0^w P(x)(w - x) dx]`, the derivative with
/// `N` and `W` held fixed. It is the gradient along every perturbation that
/// conserves agent count and wealth.
pub fn frechet_derivative(dist: &WealthDistribution, w: f64) -> Result<f64> {
    let grid = dist.grid();
    if !grid.contains(w) {
        return Err(Error::OutOfRange { w, w_max: grid.w_max() });
    }
    let moments = dist.moments();
    let inner: f64 = dist
        .node_masses()
        .iter()
        .zip(grid.nodes())
        .take_while(|(_, &x)| x < w)
        .map(|(m, x)| m * (w - x))
        .sum();
    Ok(2.0 / moments.w * (-w + inner / moments.n))
}

/// [`frechet_derivative`] at every node, in `O(n)`.
pub fn frechet_derivative_nodes(dist: &WealthDistribution) -> Vec<f64> {
    let moments = dist.moments();
    let mut agents_below = 0.0;
    let mut wealth_below = 0.0;
    let mut out = Vec::with_capacity(dist.grid().len());
    for (mi, &wi) in dist.node_masses().iter().zip(dist.grid().nodes()) {
        let inner = agents_below * wi - wealth_below;
        out.push(2.0 / moments.w * (-wi + inner / moments.n));
        agents_below += mi;
        wealth_below += mi * wi;
    }
    out
}

/// Unconstrained gradient of `G[P]` with `N[P]` and `W[P]` recomputed.
/// Differs from [`frechet_derivative_nodes`] by `(1 - G)(1/N + w/W)`, which
/// integrates to zero against any perturbation that conserves `N` and `W`.
pub fn gini_gradient_nodes(dist: &WealthDistribution) -> Result<Vec<f64>> {
    let g = gini_via_lorenz(dist)?;
    let moments = dist.moments();
    let values = frechet_derivative_nodes(dist)
        .into_iter()
        .zip(dist.grid().nodes())
        .map(|(d, &w)| d + (1.0 - g) * (1.0 / moments.n + w / moments.w))
        .collect();
    Ok(values)
}

/// Chain rule `dG/dt = ∫ (δG/δP) ∂P/∂t dw` with the unconstrained gradient, so
/// the result is exact for any rate field, including ones that change `N` or `W`.
pub fn gini_rate(dist: &WealthDistribution, rate: &RateField) -> Result<f64> {
    if !same_grid(dist.shared_grid(), rate.shared_grid()) {
        return Err(Error::GridMismatch);
    }
    let grad = gini_gradient_nodes(dist)?;
    Ok(weighted_dot(dist, &grad, rate.values()))
}

/// Chain rule with the fixed-moment derivative. Equal to [`gini_rate`] when
/// the rate field conserves `N` and `W`.
pub fn gini_rate_fixed_moments(dist: &WealthDistribution, rate: &RateField) -> Result<f64> {
    if !same_grid(dist.shared_grid(), rate.shared_grid()) {
        return Err(Error::GridMismatch);
    }
    let grad = frechet_derivative_nodes(dist);
    Ok(weighted_dot(dist, &grad, rate.values()))
}

fn weighted_dot(dist: &WealthDistribution, a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .zip(dist.grid().weights())
        .map(|((x, y), q)| x * y * q)
        .sum()
}
