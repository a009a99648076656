//! Radial discretization of the punctured plane.
//!
//! Nodes live on a uniform grid in a *native* coordinate ξ: ξ = ln ρ for
//! [`Spacing::Log`] and ξ = ρ for [`Spacing::Linear`]. The origin is never a
//! node; `rho_min > 0` is the puncture radius.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Minimum number of radial nodes accepted by the stencils.
pub const MIN_POINTS: usize = 16;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    #[default]
    Log,
    Linear,
}

/// Boundary condition imposed at the puncture radius `rho_min`.
///
/// `Regular` fixes the logarithmic derivative ρ∂ρψ = |ν|ψ of the regular
/// solution ρ^|ν| in sector ν = m + β, which selects the Friedrichs extension
/// with an error of order (k ρ_min)². `Dirichlet` pins ψ(ρ_min) = 0 and only
/// approaches the same extension as ρ_min → 0 (logarithmically slowly when ν = 0).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InnerBoundary {
    #[default]
    Regular,
    Dirichlet,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialGrid {
    rho_min: f64,
    rho_max: f64,
    n_points: usize,
    spacing: Spacing,
    inner: InnerBoundary,
}

impl RadialGrid {
    pub fn new(rho_min: f64, rho_max: f64, n_points: usize, spacing: Spacing) -> Result<Self> {
        if !(rho_min.is_finite() && rho_min > 0.0) {
            return Err(Error::invalid("rho_min", format!("must be finite and > 0, got {rho_min}")));
        }
        if !(rho_max.is_finite() && rho_max > rho_min) {
            return Err(Error::invalid(
                "rho_max",
                format!("must be finite and > rho_min = {rho_min}, got {rho_max}"),
            ));
        }
        if n_points < MIN_POINTS {
            return Err(Error::invalid(
                "n_points",
                format!("must be >= {MIN_POINTS} for the stencils, got {n_points}"),
            ));
        }
        Ok(Self { rho_min, rho_max, n_points, spacing, inner: InnerBoundary::default() })
    }

    pub fn log(rho_min: f64, rho_max: f64, n_points: usize) -> Result<Self> {
        Self::new(rho_min, rho_max, n_points, Spacing::Log)
    }

    pub fn linear(rho_min: f64, rho_max: f64, n_points: usize) -> Result<Self> {
        Self::new(rho_min, rho_max, n_points, Spacing::Linear)
    }

    pub fn with_inner_boundary(mut self, inner: InnerBoundary) -> Self {
        self.inner = inner;
        self
    }

    pub fn rho_min(&self) -> f64 {
        self.rho_min
    }

    pub fn rho_max(&self) -> f64 {
        self.rho_max
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn spacing(&self) -> Spacing {
        self.spacing
    }

    pub fn inner_boundary(&self) -> InnerBoundary {
        self.inner
    }

    fn to_native(&self, rho: f64) -> f64 {
        match self.spacing {
            Spacing::Log => rho.ln(),
            Spacing::Linear => rho,
        }
    }

    pub fn native_min(&self) -> f64 {
        self.to_native(self.rho_min)
    }

    pub fn native_max(&self) -> f64 {
        self.to_native(self.rho_max)
    }

    /// Uniform step in the native coordinate.
    pub fn step(&self) -> f64 {
        (self.native_max() - self.native_min()) / (self.n_points - 1) as f64
    }

    /// Native coordinate of node `j`.
    pub fn native(&self, j: usize) -> f64 {
        if j + 1 == self.n_points {
            self.native_max()
        } else {
            self.native_min() + j as f64 * self.step()
        }
    }

    /// ρ(ξ).
    pub fn radius_at(&self, xi: f64) -> f64 {
        match self.spacing {
            Spacing::Log => xi.exp(),
            Spacing::Linear => xi,
        }
    }

    /// dρ/dξ at ξ.
    pub fn jacobian_at(&self, xi: f64) -> f64 {
        match self.spacing {
            Spacing::Log => xi.exp(),
            Spacing::Linear => 1.0,
        }
    }

    /// Radius of node `j`; endpoints are returned exactly.
    pub fn node(&self, j: usize) -> f64 {
        if j == 0 {
            self.rho_min
        } else if j + 1 == self.n_points {
            self.rho_max
        } else {
            self.radius_at(self.native(j))
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n_points).map(|j| self.node(j)).collect()
    }

    /// ln ρ at node `j`.
    pub fn lambda(&self, j: usize) -> f64 {
        match self.spacing {
            Spacing::Log => self.native(j),
            Spacing::Linear => self.node(j).ln(),
        }
    }

    /// Index of the first node carrying an unknown (0 for a regular inner
    /// boundary, 1 for Dirichlet). The outer node is always Dirichlet.
    pub fn first_active(&self) -> usize {
        match self.inner {
            InnerBoundary::Regular => 0,
            InnerBoundary::Dirichlet => 1,
        }
    }

    pub fn active_range(&self) -> std::ops::Range<usize> {
        self.first_active()..self.n_points - 1
    }

    pub fn n_active(&self) -> usize {
        self.n_points - 1 - self.first_active()
    }

    pub fn nearest_node(&self, rho: f64) -> usize {
        let xi = self.to_native(rho.max(self.rho_min));
        let j = ((xi - self.native_min()) / self.step()).round();
        (j.max(0.0) as usize).min(self.n_points - 1)
    }

    /// Same step, `extra` additional nodes inside `rho_min`.
    pub fn extended_inward(&self, extra: usize) -> Result<Self> {
        let xi_min = self.native_min() - extra as f64 * self.step();
        let rho_min = self.radius_at(xi_min);
        if !(rho_min > 0.0) {
            return Err(Error::invalid("rho_min", "inward extension crosses the origin"));
        }
        Ok(Self { rho_min, n_points: self.n_points + extra, ..self.clone() })
    }

    /// Inward extension whose inner radius is the node closest to `rho_min / 2`.
    pub fn with_halved_puncture(&self) -> Result<Self> {
        let gap = self.native_min() - self.to_native(0.5 * self.rho_min);
        let extra = (gap / self.step()).round().max(1.0) as usize;
        self.extended_inward(extra)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_degenerate_grids() {
        assert!(RadialGrid::log(0.0, 1.0, 64).is_err());
        assert!(RadialGrid::log(1.0, 1.0, 64).is_err());
        assert!(RadialGrid::log(1e-3, 1.0, 15).is_err());
        assert!(RadialGrid::linear(-1.0, 1.0, 64).is_err());
    }

    #[test]
    fn log_nodes_are_geometric_and_increasing() {
        let g = RadialGrid::log(1e-3, 1.0, 64).unwrap();
        let nodes = g.nodes();
        assert_eq!(nodes[0], 1e-3);
        assert_eq!(nodes[63], 1.0);
        assert!(nodes.windows(2).all(|w| w[1] > w[0]));
        let ratio = nodes[11] / nodes[10];
        assert!((ratio - g.step().exp()).abs() < 1e-13);
    }

    #[test]
    fn inward_extension_keeps_step() {
        let g = RadialGrid::log(1e-3, 1.0, 512).unwrap();
        let e = g.with_halved_puncture().unwrap();
        assert!((e.step() - g.step()).abs() < 1e-14);
        assert!((e.rho_min() / 5e-4 - 1.0).abs() < g.step());
        // original nodes reappear shifted by the extension
        let extra = e.n_points() - g.n_points();
        assert!((e.node(extra + 7) - g.node(7)).abs() < 1e-12 * g.node(7));
    }

    #[test]
    fn active_range_depends_on_inner_boundary() {
        let g = RadialGrid::linear(0.1, 1.0, 32).unwrap();
        assert_eq!(g.active_range(), 0..31);
        let d = g.with_inner_boundary(InnerBoundary::Dirichlet);
        assert_eq!(d.active_range(), 1..31);
        assert_eq!(d.n_active(), 30);
    }
}
