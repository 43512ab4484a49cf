//! Symmetric distributions `η(β)` of the transfer fraction.

use gauss_quad::GaussLegendre;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{param, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BetaKind {
    /// Uniform on `(-β₀, β₀)`.
    Uniform,
    /// `±β₀` with probability 1/2 each.
    TwoPoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaDistribution {
    kind: BetaKind,
    beta0: f64,
}

/// Value of `η` at a point: an ordinary density, or the weight of a point mass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Density {
    Continuous(f64),
    PointMass(f64),
}

/// Quadrature node on the β axis; weights sum to one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaNode {
    pub beta: f64,
    pub weight: f64,
}

impl BetaDistribution {
    pub fn new(kind: BetaKind, beta0: f64) -> Result<Self> {
        if !(beta0 > 0.0 && beta0 < 1.0) {
            return Err(param("beta0", format!("must lie in (0, 1), got {beta0}")));
        }
        Ok(Self { kind, beta0 })
    }

    pub fn uniform(beta0: f64) -> Result<Self> {
        Self::new(BetaKind::Uniform, beta0)
    }

    pub fn two_point(beta0: f64) -> Result<Self> {
        Self::new(BetaKind::TwoPoint, beta0)
    }

    pub fn kind(&self) -> BetaKind {
        self.kind
    }

    pub fn beta0(&self) -> f64 {
        self.beta0
    }

    pub fn density(&self, beta: f64) -> Density {
        match self.kind {
            BetaKind::Uniform if beta.abs() <= self.beta0 => Density::Continuous(0.5 / self.beta0),
            BetaKind::Uniform => Density::Continuous(0.0),
            BetaKind::TwoPoint if beta.abs() == self.beta0 => Density::PointMass(0.5),
            BetaKind::TwoPoint => Density::Continuous(0.0),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self.kind {
            // Open interval: reject the endpoint draw.
            BetaKind::Uniform => loop {
                let b = self.beta0 * (2.0 * rng.random::<f64>() - 1.0);
                if b.abs() < self.beta0 {
                    break b;
                }
            },
            BetaKind::TwoPoint => {
                if rng.random::<bool>() {
                    self.beta0
                } else {
                    -self.beta0
                }
            }
        }
    }

    /// `∫ β^k η(β) dβ`; odd moments vanish.
    pub fn moment(&self, k: u32) -> f64 {
        if k % 2 == 1 {
            return 0.0;
        }
        match self.kind {
            BetaKind::Uniform => self.beta0.powi(k as i32) / (k as f64 + 1.0),
            BetaKind::TwoPoint => self.beta0.powi(k as i32),
        }
    }

    /// Second moment `γ_η = ∫ β² η(β) dβ`.
    pub fn gamma(&self) -> f64 {
        self.moment(2)
    }

    /// Nodes symmetric about zero with weights summing to one. Gauss-Legendre
    /// with `points` nodes for the uniform kind; the exact pair for two-point.
    pub fn quadrature(&self, points: usize) -> Result<Vec<BetaNode>> {
        match self.kind {
            BetaKind::TwoPoint => Ok(vec![
                BetaNode { beta: -self.beta0, weight: 0.5 },
                BetaNode { beta: self.beta0, weight: 0.5 },
            ]),
            BetaKind::Uniform => {
                let rule = GaussLegendre::new(points)
                    .map_err(|_| param("beta_quadrature_points", format!("need at least 2, got {points}")))?;
                let mut nodes: Vec<BetaNode> = rule
                    .as_node_weight_pairs()
                    .iter()
                    .map(|&(x, q)| BetaNode { beta: self.beta0 * x, weight: 0.5 * q })
                    .collect();
                nodes.sort_by(|a, b| a.beta.total_cmp(&b.beta));
                // Exact mirror symmetry so odd moments cancel to rounding.
                let n = nodes.len();
                for i in 0..n / 2 {
                    let (b, q) = (0.5 * (nodes[n - 1 - i].beta - nodes[i].beta), 0.5 * (nodes[i].weight + nodes[n - 1 - i].weight));
                    nodes[i] = BetaNode { beta: -b, weight: q };
                    nodes[n - 1 - i] = BetaNode { beta: b, weight: q };
                }
                if n % 2 == 1 {
                    nodes[n / 2].beta = 0.0;
                }
                Ok(nodes)
            }
        }
    }
}
