//! Discretization of the wealth axis.
//!
//! A [`WealthGrid`] is a strictly increasing set of nodes starting at `w = 0`.
//! Every wealth integral in the crate uses the trapezoidal rule on these nodes,
//! which is the exact integral of the piecewise-linear interpolant of the node
//! values. Off-grid evaluations use the same interpolant, and anything beyond
//! `w_max` reads as zero.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_NODES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Spacing {
    Linear,
    /// `w_i = c (r^i - 1)`: every cell is `r` times wider than the one before,
    /// so spacing is nearly uniform below `c` and geometric above it.
    LogWithZeroCell,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WealthGrid {
    nodes: Vec<f64>,
    spacing: Spacing,
    widths: Vec<f64>,
    weights: Vec<f64>,
}

impl WealthGrid {
    pub fn from_nodes(nodes: Vec<f64>, spacing: Spacing) -> Result<Self> {
        if nodes.len() < MIN_NODES {
            return Err(Error::InvalidGrid(format!(
                "need at least {MIN_NODES} nodes, got {}",
                nodes.len()
            )));
        }
        if nodes[0] != 0.0 {
            return Err(Error::InvalidGrid("first node must be w = 0".into()));
        }
        if nodes.iter().any(|w| !w.is_finite()) {
            return Err(Error::InvalidGrid("non-finite node".into()));
        }
        if let Some(k) = nodes.windows(2).position(|p| p[1] <= p[0]) {
            return Err(Error::InvalidGrid(format!(
                "nodes not strictly increasing at index {}",
                k + 1
            )));
        }
        let widths: Vec<f64> = nodes.windows(2).map(|p| p[1] - p[0]).collect();
        let n = nodes.len();
        let mut weights = vec![0.0; n];
        for (k, h) in widths.iter().enumerate() {
            weights[k] += 0.5 * h;
            weights[k + 1] += 0.5 * h;
        }
        Ok(Self {
            nodes,
            spacing,
            widths,
            weights,
        })
    }

    pub fn linear(w_max: f64, n_nodes: usize) -> Result<Self> {
        if !(w_max > 0.0 && w_max.is_finite()) {
            return Err(Error::InvalidGrid(format!("w_max must be positive, got {w_max}")));
        }
        if n_nodes < MIN_NODES {
            return Err(Error::InvalidGrid(format!(
                "need at least {MIN_NODES} nodes, got {n_nodes}"
            )));
        }
        let h = w_max / (n_nodes - 1) as f64;
        let mut nodes: Vec<f64> = (0..n_nodes).map(|i| i as f64 * h).collect();
        nodes[n_nodes - 1] = w_max;
        Self::from_nodes(nodes, Spacing::Linear)
    }

    /// Nodes `w_i = c (r^i - 1)` with `w_1 = w_first` and `w_{n-1} = w_max`.
    /// Requires `w_max / w_first > n_nodes - 1`, i.e. cells that grow.
    pub fn log_with_zero_cell(w_first: f64, w_max: f64, n_nodes: usize) -> Result<Self> {
        if !(w_first > 0.0 && w_first < w_max && w_max.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "need 0 < w_first < w_max, got w_first={w_first}, w_max={w_max}"
            )));
        }
        if n_nodes < MIN_NODES {
            return Err(Error::InvalidGrid(format!(
                "need at least {MIN_NODES} nodes, got {n_nodes}"
            )));
        }
        let m = (n_nodes - 1) as f64;
        let span = w_max / w_first;
        if span <= m {
            return Err(Error::InvalidGrid(format!(
                "w_max/w_first = {span} must exceed the cell count {m}; use a linear grid"
            )));
        }
        // (r^m - 1)/(r - 1) = span, increasing in r.
        let cells = |ln_r: f64| (m * ln_r).exp_m1() / ln_r.exp_m1();
        let (mut lo, mut hi) = (0.0_f64, span.ln() / (m - 1.0));
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if cells(mid) < span {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let ln_r = 0.5 * (lo + hi);
        let scale = w_first / ln_r.exp_m1();
        let mut nodes: Vec<f64> = (0..n_nodes).map(|i| scale * (i as f64 * ln_r).exp_m1()).collect();
        nodes[1] = w_first;
        nodes[n_nodes - 1] = w_max;
        Self::from_nodes(nodes, Spacing::LogWithZeroCell)
    }

    /// Grid with a node inserted inside every cell (`2n - 1` nodes). On log
    /// grids the new nodes are `c (r^{i+1/2} - 1)`, so the result has the same
    /// form with ratio `√r`.
    pub fn refined(&self) -> Self {
        let offset = match self.spacing {
            Spacing::LogWithZeroCell => {
                let (w1, w2) = (self.nodes[1], self.nodes[2]);
                let c = w1 * w1 / (w2 - 2.0 * w1);
                (c > 0.0 && c.is_finite()).then_some(c)
            }
            Spacing::Linear => None,
        };
        let mut nodes = Vec::with_capacity(2 * self.len() - 1);
        for pair in self.nodes.windows(2) {
            nodes.push(pair[0]);
            let mid = match offset {
                Some(c) => ((pair[0] + c) * (pair[1] + c)).sqrt() - c,
                None => 0.5 * (pair[0] + pair[1]),
            };
            nodes.push(mid);
        }
        nodes.push(self.w_max());
        Self::from_nodes(nodes, self.spacing).expect("refinement preserves grid invariants")
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn spacing(&self) -> Spacing {
        self.spacing
    }

    pub fn w_max(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }

    /// Cell widths `h_k = w_{k+1} - w_k`.
    pub fn widths(&self) -> &[f64] {
        &self.widths
    }

    /// Trapezoidal quadrature weights.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn contains(&self, w: f64) -> bool {
        (0.0..=self.w_max()).contains(&w)
    }

    /// Index of the node nearest to `w`.
    pub fn nearest(&self, w: f64) -> usize {
        match self.locate(w) {
            Some((k, theta)) if theta > 0.5 => k + 1,
            Some((k, _)) => k,
            None if w < 0.0 => 0,
            None => self.len() - 1,
        }
    }

    /// Cell `k` and fraction `theta` in `[0, 1]` with `w = w_k + theta * h_k`.
    /// `None` outside `[0, w_max]`.
    pub fn locate(&self, w: f64) -> Option<(usize, f64)> {
        if !(w >= 0.0 && w <= self.w_max()) {
            return None;
        }
        let k = self
            .nodes
            .partition_point(|&x| x <= w)
            .saturating_sub(1)
            .min(self.len() - 2);
        Some((k, (w - self.nodes[k]) / self.widths[k]))
    }

    /// Piecewise-linear interpolation; zero outside `[0, w_max]`.
    pub fn interpolate(&self, values: &[f64], w: f64) -> f64 {
        match self.locate(w) {
            Some((k, theta)) => values[k] + theta * (values[k + 1] - values[k]),
            None => 0.0,
        }
    }

    pub fn integrate(&self, values: &[f64]) -> f64 {
        values.iter().zip(&self.weights).map(|(v, q)| v * q).sum()
    }

    /// Running trapezoidal integral `∫_0^{w_i}` at every node.
    pub fn cumulative(&self, values: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(values.len());
        let mut acc = 0.0;
        out.push(0.0);
        for (k, h) in self.widths.iter().enumerate() {
            acc += 0.5 * h * (values[k] + values[k + 1]);
            out.push(acc);
        }
        out
    }

    /// Exact `∫_0^w` of the interpolant, for `w` anywhere (clamped to the grid).
    pub fn integral_to(&self, values: &[f64], cumulative: &[f64], w: f64) -> f64 {
        if w <= 0.0 {
            return 0.0;
        }
        match self.locate(w) {
            Some((k, theta)) => {
                let h = self.widths[k];
                let v_end = values[k] + theta * (values[k + 1] - values[k]);
                cumulative[k] + 0.5 * theta * h * (values[k] + v_end)
            }
            None => cumulative[cumulative.len() - 1],
        }
    }
}
