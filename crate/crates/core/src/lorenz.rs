use crate::dist::WealthDistribution;

/// Polyline of cumulative agent share `F` against cumulative wealth share `L`.
///
/// The first point is the origin; point `i + 1` closes grid node `i`, so the
/// segment ending there has slope `(N/W) w_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct LorenzCurve {
    points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LorenzViolation {
    Endpoint { index: usize, point: (f64, f64) },
    Decreasing { index: usize },
    AboveDiagonal { index: usize, excess: f64 },
    SlopeDecrease { index: usize, drop: f64 },
}

impl LorenzCurve {
    pub fn from_points(points: Vec<(f64, f64)>) -> Self {
        Self { points }
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    /// Slopes of the segments with strictly increasing `F`, paired with the
    /// index of the point that closes each segment.
    pub fn slopes(&self) -> Vec<(usize, f64)> {
        self.points
            .windows(2)
            .enumerate()
            .filter(|(_, p)| p[1].0 > p[0].0)
            .map(|(k, p)| (k + 1, (p[1].1 - p[0].1) / (p[1].0 - p[0].0)))
            .collect()
    }

    /// `1 - 2 ∫ L dF` over the polyline.
    pub fn gini(&self) -> f64 {
        let area: f64 = self
            .points
            .windows(2)
            .map(|p| 0.5 * (p[1].0 - p[0].0) * (p[0].1 + p[1].1))
            .sum();
        1.0 - 2.0 * area
    }

    /// Every invariant violation beyond `tol`: endpoints, monotonicity,
    /// position below the diagonal, and convexity (non-decreasing slopes).
    pub fn violations(&self, tol: f64) -> Vec<LorenzViolation> {
        let mut out = Vec::new();
        let last = self.points.len() - 1;
        for (index, target) in [(0, (0.0, 0.0)), (last, (1.0, 1.0))] {
            let p = self.points[index];
            if (p.0 - target.0).abs() > tol || (p.1 - target.1).abs() > tol {
                out.push(LorenzViolation::Endpoint { index, point: p });
            }
        }
        for (k, p) in self.points.windows(2).enumerate() {
            if p[1].0 < p[0].0 - tol || p[1].1 < p[0].1 - tol {
                out.push(LorenzViolation::Decreasing { index: k + 1 });
            }
        }
        for (index, &(f, l)) in self.points.iter().enumerate() {
            if l > f + tol {
                out.push(LorenzViolation::AboveDiagonal { index, excess: l - f });
            }
        }
        // Convexity: each point lies on or below the chord through its neighbours.
        for (k, p) in self.points.windows(3).enumerate() {
            let span = p[2].0 - p[0].0;
            if span <= 0.0 {
                continue;
            }
            let chord = p[0].1 + (p[1].0 - p[0].0) / span * (p[2].1 - p[0].1);
            let drop = p[1].1 - chord;
            if drop > tol {
                out.push(LorenzViolation::SlopeDecrease { index: k + 1, drop });
            }
        }
        out
    }
}

impl WealthDistribution {
    pub fn lorenz_curve(&self) -> LorenzCurve {
        let moments = self.moments();
        let mut points = Vec::with_capacity(self.grid().len() + 1);
        points.push((0.0, 0.0));
        let (mut agents, mut wealth) = (0.0, 0.0);
        for (m, w) in self.node_masses().iter().zip(self.grid().nodes()) {
            agents += m;
            wealth += m * w;
            points.push(((agents / moments.n).min(1.0), (wealth / moments.w).min(1.0)));
        }
        let last = points.len() - 1;
        points[last] = (1.0, 1.0);
        LorenzCurve { points }
    }
}
