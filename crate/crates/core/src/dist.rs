//! Wealth densities on a grid and their elementary functionals.

use std::sync::Arc;

use crate::error::{param, Error, Result};
use crate::grid::WealthGrid;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    /// Agent count (zeroth moment).
    pub n: f64,
    /// Total wealth (first moment).
    pub w: f64,
}

/// Agent density `P(w)` sampled at the nodes of a shared grid.
#[derive(Debug, Clone)]
pub struct WealthDistribution {
    grid: Arc<WealthGrid>,
    density: Vec<f64>,
}

/// A signed field on the grid, typically `∂P/∂t`.
#[derive(Debug, Clone)]
pub struct RateField {
    grid: Arc<WealthGrid>,
    values: Vec<f64>,
}

pub(crate) fn same_grid(a: &Arc<WealthGrid>, b: &Arc<WealthGrid>) -> bool {
    Arc::ptr_eq(a, b) || a.nodes() == b.nodes()
}

impl WealthDistribution {
    pub fn new(grid: Arc<WealthGrid>, density: Vec<f64>) -> Result<Self> {
        if density.len() != grid.len() {
            return Err(Error::InvalidDistribution(format!(
                "{} density values for {} nodes",
                density.len(),
                grid.len()
            )));
        }
        if let Some(i) = density.iter().position(|p| !p.is_finite()) {
            return Err(Error::InvalidDistribution(format!("non-finite density at node {i}")));
        }
        if let Some(i) = density.iter().position(|&p| p < 0.0) {
            return Err(Error::InvalidDistribution(format!(
                "negative density {} at node {i}",
                density[i]
            )));
        }
        let dist = Self { grid, density };
        let m = dist.moments();
        if !(m.n > 0.0) {
            return Err(Error::InvalidDistribution("agent count N must be positive".into()));
        }
        if !(m.w > 0.0) {
            return Err(Error::InvalidDistribution("total wealth W must be positive".into()));
        }
        Ok(dist)
    }

    pub fn from_fn(grid: Arc<WealthGrid>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let density = grid.nodes().iter().map(|&w| f(w)).collect();
        Self::new(grid, density)
    }

    /// Pareto density `(αN/w_min)(w_min/w)^{α+1}` above `w_min`, zero below.
    /// Returns the distribution and the analytic fraction of agents beyond `w_max`.
    pub fn pareto(grid: Arc<WealthGrid>, alpha: f64, w_min: f64, agents: f64) -> Result<(Self, f64)> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(param("alpha", format!("must be positive, got {alpha}")));
        }
        if !(agents > 0.0) {
            return Err(param("agents", "must be positive"));
        }
        if !(w_min > 0.0 && w_min < grid.w_max()) {
            return Err(param(
                "w_min",
                format!("must lie in (0, w_max = {}), got {w_min}", grid.w_max()),
            ));
        }
        let truncated = (w_min / grid.w_max()).powf(alpha);
        let dist = Self::from_fn(grid, |w| pareto_density(alpha, w_min, agents, w))?;
        Ok((dist, truncated))
    }

    pub fn exponential(grid: Arc<WealthGrid>, mean: f64, agents: f64) -> Result<Self> {
        if !(mean > 0.0) {
            return Err(param("mean", "must be positive"));
        }
        Self::from_fn(grid, |w| agents / mean * (-w / mean).exp())
    }

    /// All `agents` concentrated in the grid cell nearest to `w`.
    pub fn atom(grid: Arc<WealthGrid>, w: f64, agents: f64) -> Result<Self> {
        if !grid.contains(w) {
            return Err(Error::OutOfRange { w, w_max: grid.w_max() });
        }
        let k = grid.nearest(w);
        let mut density = vec![0.0; grid.len()];
        density[k] = agents / grid.weights()[k];
        Self::new(grid, density)
    }

    pub fn grid(&self) -> &WealthGrid {
        &self.grid
    }

    pub fn shared_grid(&self) -> &Arc<WealthGrid> {
        &self.grid
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    /// Same grid, new density values (validated).
    pub fn with_density(&self, density: Vec<f64>) -> Result<Self> {
        Self::new(self.grid.clone(), density)
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        self.with_density(self.density.iter().map(|p| c * p).collect())
    }

    /// Resample onto another grid by linear interpolation.
    pub fn regrid(&self, grid: Arc<WealthGrid>) -> Result<Self> {
        let density = grid
            .nodes()
            .iter()
            .map(|&w| self.grid.interpolate(&self.density, w))
            .collect();
        Self::new(grid, density)
    }

    /// Quadrature masses `m_i = ω_i P_i` (agents attributed to each node).
    pub fn node_masses(&self) -> Vec<f64> {
        self.density
            .iter()
            .zip(self.grid.weights())
            .map(|(p, q)| p * q)
            .collect()
    }

    pub fn moments(&self) -> Moments {
        let mut n = 0.0;
        let mut w = 0.0;
        for ((p, q), x) in self.density.iter().zip(self.grid.weights()).zip(self.grid.nodes()) {
            n += p * q;
            w += p * q * x;
        }
        Moments { n, w }
    }

    pub fn second_moment(&self) -> f64 {
        self.density
            .iter()
            .zip(self.grid.weights())
            .zip(self.grid.nodes())
            .map(|((p, q), x)| p * q * x * x)
            .sum()
    }

    pub fn mean_wealth(&self) -> f64 {
        let m = self.moments();
        m.w / m.n
    }

    pub fn max_density(&self) -> f64 {
        self.density.iter().fold(0.0, |a, &b| a.max(b))
    }

    fn check_range(&self, w: f64) -> Result<()> {
        if self.grid.contains(w) {
            Ok(())
        } else {
            Err(Error::OutOfRange { w, w_max: self.grid.w_max() })
        }
    }

    /// Fraction of agents with wealth at most `w`, `F(w)`.
    pub fn cumulative_agents(&self, w: f64) -> Result<f64> {
        self.check_range(w)?;
        let cum = self.grid.cumulative(&self.density);
        let n = cum[cum.len() - 1];
        Ok((self.grid.integral_to(&self.density, &cum, w) / n).clamp(0.0, 1.0))
    }

    /// Fraction of total wealth held by agents with wealth at most `w`, `L(w)`.
    pub fn cumulative_wealth(&self, w: f64) -> Result<f64> {
        self.check_range(w)?;
        let pw: Vec<f64> = self
            .density
            .iter()
            .zip(self.grid.nodes())
            .map(|(p, x)| p * x)
            .collect();
        let cum = self.grid.cumulative(&pw);
        let total = cum[cum.len() - 1];
        Ok((self.grid.integral_to(&pw, &cum, w) / total).clamp(0.0, 1.0))
    }

    /// Fraction of agents with wealth above `w`, `A(w) = 1 - F(w)`.
    pub fn survival(&self, w: f64) -> Result<f64> {
        Ok(1.0 - self.cumulative_agents(w)?)
    }

    /// `F` at every node.
    pub fn cumulative_agents_at_nodes(&self) -> Vec<f64> {
        let cum = self.grid.cumulative(&self.density);
        let n = cum[cum.len() - 1];
        cum.into_iter().map(|c| c / n).collect()
    }
}

pub(crate) fn pareto_density(alpha: f64, w_min: f64, agents: f64, w: f64) -> f64 {
    if w <= w_min {
        0.0
    } else {
        alpha * agents / w_min * (w_min / w).powf(alpha + 1.0)
    }
}

impl RateField {
    pub fn new(grid: Arc<WealthGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch);
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("rate field"));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Arc<WealthGrid>) -> Self {
        let values = vec![0.0; grid.len()];
        Self { grid, values }
    }

    pub fn grid(&self) -> &WealthGrid {
        &self.grid
    }

    pub fn shared_grid(&self) -> &Arc<WealthGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Rates of change of (N, W) implied by this field.
    pub fn moments(&self) -> Moments {
        let mut n = 0.0;
        let mut w = 0.0;
        for ((v, q), x) in self.values.iter().zip(self.grid.weights()).zip(self.grid.nodes()) {
            n += v * q;
            w += v * q * x;
        }
        Moments { n, w }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |a, &b| a.max(b.abs()))
    }

    /// Nodewise sum; grids must match.
    pub fn add(&self, other: &RateField) -> Result<RateField> {
        if !same_grid(&self.grid, &other.grid) {
            return Err(Error::GridMismatch);
        }
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect();
        Ok(RateField { grid: self.grid.clone(), values })
    }
}
