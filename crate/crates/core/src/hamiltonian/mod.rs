//! Per-sector radial Hamiltonians of the flux-threaded plane and the
//! punctured plane, the gauge potential, and the holonomy integral.
//!
//! On `e^{imφ}` both Hamiltonians reduce to
//! `H_ν = −(ħ²/2M)[∂²_ρ + ρ⁻¹∂_ρ − ν²/ρ²]` with `ν = m + α` (flux) or
//! `ν = m + β` (puncture). The two assemblers reach this operator through
//! different discretization routes so that [`equivalence_check`] compares
//! genuinely independent matrices.
//!
//! Matrices act on the active nodes of the grid ([`RadialGrid::active_range`])
//! and are self-adjoint in the area-weighted inner product `Σ w_j ψ̄_j φ_j`,
//! i.e. `W H` is symmetric.

mod ab;
mod gauge;
mod punctured;

pub use ab::assemble_ab_sector;
pub use gauge::{holonomy, vector_potential, winding_number};
pub use punctured::assemble_punctured_sector;

use std::ops::RangeInclusive;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::RadialGrid;
use crate::tridiag::Tridiagonal;

/// Charge and confined flux. `alpha = −qΦ/2π`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FluxConfig {
    charge_q: f64,
    flux_phi: f64,
    hbar: f64,
    alpha: f64,
}

impl FluxConfig {
    pub fn new(charge_q: f64, flux_phi: f64, hbar: f64) -> Result<Self> {
        if !charge_q.is_finite() {
            return Err(Error::invalid("q", "must be finite"));
        }
        if !flux_phi.is_finite() {
            return Err(Error::invalid("phi", "must be finite"));
        }
        check_positive("hbar", hbar)?;
        Ok(Self { charge_q, flux_phi, hbar, alpha: flux_to_alpha(charge_q, flux_phi) })
    }

    /// Unit charge carrying the flux that produces `alpha` exactly.
    pub fn with_alpha(alpha: f64, hbar: f64) -> Result<Self> {
        if !alpha.is_finite() {
            return Err(Error::invalid("alpha", "must be finite"));
        }
        check_positive("hbar", hbar)?;
        Ok(Self { charge_q: 1.0, flux_phi: -2.0 * std::f64::consts::PI * alpha, hbar, alpha })
    }

    pub fn charge(&self) -> f64 {
        self.charge_q
    }

    pub fn flux(&self) -> f64 {
        self.flux_phi
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

/// `−qΦ/2π`.
pub fn flux_to_alpha(charge_q: f64, flux_phi: f64) -> f64 {
    -(charge_q * flux_phi) / (2.0 * std::f64::consts::PI)
}

pub(crate) fn check_positive(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("must be finite and > 0, got {v}")))
    }
}

/// Which Hamiltonian (and discretization route) builds the sectors.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SectorRoute {
    AharonovBohm,
    #[default]
    PuncturedPlane,
}

/// Radial Hamiltonian of one angular sector.
#[derive(Clone, Debug)]
pub struct SectorOperator {
    pub(crate) m: i32,
    pub(crate) shift: f64,
    pub(crate) hbar: f64,
    pub(crate) mass: f64,
    pub(crate) grid: RadialGrid,
    pub(crate) matrix: Tridiagonal,
    pub(crate) weight: Vec<f64>,
}

impl SectorOperator {
    pub fn m(&self) -> i32 {
        self.m
    }

    /// α or β, whichever built the operator.
    pub fn beta_or_alpha(&self) -> f64 {
        self.shift
    }

    /// ν = m + β.
    pub fn nu(&self) -> f64 {
        self.m as f64 + self.shift
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    pub fn matrix(&self) -> &Tridiagonal {
        &self.matrix
    }

    /// Area weights `w_j ≈ ρ dρ` of the active nodes.
    pub fn weights(&self) -> &[f64] {
        &self.weight
    }

    pub fn len(&self) -> usize {
        self.weight.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weight.is_empty()
    }

    /// Radii of the active nodes.
    pub fn radii(&self) -> Vec<f64> {
        self.grid.active_range().map(|j| self.grid.node(j)).collect()
    }

    /// `K = W H`, symmetric up to rounding.
    pub fn stiffness(&self) -> Tridiagonal {
        let mut k = self.matrix.clone();
        k.scale_rows(&self.weight);
        k
    }

    /// `‖WH − (WH)ᵀ‖_max / ‖WH‖_max`.
    pub fn hermiticity_residual(&self) -> f64 {
        let k = self.stiffness();
        let asym = k.sub.iter().zip(&k.sup).fold(0.0f64, |m, (l, u)| m.max((l - u).abs()));
        asym / k.max_abs()
    }

    pub fn apply(&self, psi: &[Complex64], out: &mut [Complex64]) {
        self.matrix.matvec_complex(psi, out);
    }

    /// `⟨ψ|H|ψ⟩` in the weighted inner product (real for a self-adjoint H).
    pub fn expectation(&self, psi: &[Complex64]) -> f64 {
        let mut hpsi = vec![Complex64::default(); psi.len()];
        self.apply(psi, &mut hpsi);
        psi.iter().zip(&hpsi).zip(&self.weight).map(|((a, b), w)| w * (a.conj() * b).re).sum()
    }
}

pub(crate) fn validate_sector_inputs(shift: f64, mass: f64, hbar: f64) -> Result<()> {
    if !shift.is_finite() {
        return Err(Error::invalid("beta", "must be finite"));
    }
    check_positive("mass", mass)?;
    check_positive("hbar", hbar)
}

/// Build sectors `m ∈ [−m_max, m_max]` for flux/representation parameter `shift`.
pub fn build_sectors(
    route: SectorRoute,
    shift: f64,
    m_max: i32,
    grid: &RadialGrid,
    mass: f64,
    hbar: f64,
) -> Result<Vec<SectorOperator>> {
    if m_max < 0 {
        return Err(Error::invalid("m_max", "must be >= 0"));
    }
    use rayon::prelude::*;
    (-m_max..=m_max)
        .into_par_iter()
        .map(|m| match route {
            SectorRoute::AharonovBohm => assemble_ab_sector(m, &FluxConfig::with_alpha(shift, hbar)?, grid, mass),
            SectorRoute::PuncturedPlane => assemble_punctured_sector(m, shift, grid, mass, hbar),
        })
        .collect()
}

/// Largest relative elementwise difference between two sector matrices.
pub fn relative_matrix_difference(a: &Tridiagonal, b: &Tridiagonal) -> f64 {
    assert_eq!(a.len(), b.len(), "matrices must have equal size");
    a.entries()
        .zip(b.entries())
        .map(|((_, _, x), (_, _, y))| {
            let scale = x.abs().max(y.abs());
            if scale == 0.0 {
                0.0
            } else {
                (x - y).abs() / scale
            }
        })
        .fold(0.0, f64::max)
}

/// Max over `m_range` of the relative elementwise difference between the
/// flux Hamiltonian at `alpha` and the punctured-plane Hamiltonian at β = α.
pub fn equivalence_check(alpha: f64, grid: &RadialGrid, m_range: RangeInclusive<i32>, mass: f64) -> Result<f64> {
    let hbar = 1.0;
    let flux = FluxConfig::with_alpha(alpha, hbar)?;
    let mut worst: f64 = 0.0;
    for m in m_range {
        let ab = assemble_ab_sector(m, &flux, grid, mass)?;
        let pp = assemble_punctured_sector(m, alpha, grid, mass, hbar)?;
        worst = worst.max(relative_matrix_difference(ab.matrix(), pp.matrix()));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::InnerBoundary;
    use proptest::prelude::*;

    fn grid() -> RadialGrid {
        RadialGrid::log(1e-3, 1.0, 512).unwrap()
    }

    #[test]
    fn alpha_from_charge_and_flux() {
        let f = FluxConfig::new(1.0, std::f64::consts::PI, 1.0).unwrap();
        assert_eq!(f.alpha(), -0.5);
        let g = FluxConfig::with_alpha(0.3, 1.0).unwrap();
        assert!((flux_to_alpha(g.charge(), g.flux()) - 0.3).abs() <= 1e-15 * 0.3);
        assert!(FluxConfig::new(1.0, 1.0, 0.0).is_err());
        assert!(FluxConfig::new(f64::NAN, 1.0, 1.0).is_err());
    }

    #[test]
    fn zero_flux_reduces_to_the_free_sector() {
        let g = grid();
        let ab = assemble_ab_sector(0, &FluxConfig::with_alpha(0.0, 1.0).unwrap(), &g, 1.0).unwrap();
        let free = assemble_punctured_sector(0, 0.0, &g, 1.0, 1.0).unwrap();
        assert!(relative_matrix_difference(ab.matrix(), free.matrix()) < 1e-15);
        assert!(equivalence_check(0.0, &g, -3..=3, 1.0).unwrap() < 1e-15);
    }

    #[test]
    fn centrifugal_coefficients() {
        let g = grid().with_inner_boundary(InnerBoundary::Dirichlet);
        let (hbar, mass) = (1.0, 1.0);
        let base = assemble_ab_sector(0, &FluxConfig::with_alpha(0.0, hbar).unwrap(), &g, mass).unwrap();
        let ab = assemble_ab_sector(1, &FluxConfig::with_alpha(0.3, hbar).unwrap(), &g, mass).unwrap();
        let pp = assemble_punctured_sector(0, 0.5, &g, mass, hbar).unwrap();
        for (i, rho) in base.radii().into_iter().enumerate().step_by(37) {
            let want = hbar * hbar * 1.3f64.powi(2) / (2.0 * mass * rho * rho);
            let got = ab.matrix().diag[i] - base.matrix().diag[i];
            assert!((got - want).abs() < 1e-12 * base.matrix().diag[i], "node {i}");
            let want = hbar * hbar * 0.25 / (2.0 * mass * rho * rho);
            let got = pp.matrix().diag[i] - base.matrix().diag[i];
            assert!((got - want).abs() < 1e-12 * base.matrix().diag[i], "node {i}");
        }
    }

    #[test]
    fn assemblies_are_weighted_symmetric() {
        for inner in [InnerBoundary::Regular, InnerBoundary::Dirichlet] {
            for g in [grid(), RadialGrid::linear(0.05, 2.0, 300).unwrap()] {
                let g = g.with_inner_boundary(inner);
                for (m, shift) in [(0, 0.0), (-2, 0.37), (3, -1.6)] {
                    let ab = assemble_ab_sector(m, &FluxConfig::with_alpha(shift, 1.0).unwrap(), &g, 1.0).unwrap();
                    let pp = assemble_punctured_sector(m, shift, &g, 1.0, 1.0).unwrap();
                    assert!(ab.hermiticity_residual() < 1e-13);
                    assert!(pp.hermiticity_residual() < 1e-13);
                    assert!(relative_matrix_difference(ab.matrix(), pp.matrix()) < 1e-13);
                }
            }
        }
    }

    #[test]
    fn sector_shift_is_a_relabeling() {
        let g = grid();
        for m in -3..=3 {
            let a = assemble_punctured_sector(m, 1.25, &g, 1.0, 1.0).unwrap();
            let b = assemble_punctured_sector(m + 1, 0.25, &g, 1.0, 1.0).unwrap();
            assert_eq!(a.matrix(), b.matrix());
            let a = assemble_ab_sector(m, &FluxConfig::with_alpha(1.25, 1.0).unwrap(), &g, 1.0).unwrap();
            let b = assemble_ab_sector(m + 1, &FluxConfig::with_alpha(0.25, 1.0).unwrap(), &g, 1.0).unwrap();
            assert_eq!(a.matrix(), b.matrix());
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        let g = grid();
        assert!(assemble_punctured_sector(0, 0.0, &g, 0.0, 1.0).is_err());
        assert!(assemble_punctured_sector(0, f64::INFINITY, &g, 1.0, 1.0).is_err());
        assert!(assemble_ab_sector(0, &FluxConfig::with_alpha(0.1, 1.0).unwrap(), &g, -1.0).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn identity_holds_for_random_alpha(alpha in -2.0f64..2.0, m in -3i32..=3) {
            let g = RadialGrid::log(1e-3, 1.0, 128).unwrap();
            prop_assert!(equivalence_check(alpha, &g, m..=m, 1.0).unwrap() < 1e-13);
        }

        #[test]
        fn operator_depends_on_m_plus_beta_only(beta in -2.0f64..2.0, m in -3i32..=3) {
            let g = RadialGrid::log(1e-3, 1.0, 64).unwrap();
            let a = assemble_punctured_sector(m, beta + 1.0, &g, 1.0, 1.0).unwrap();
            let b = assemble_punctured_sector(m + 1, beta, &g, 1.0, 1.0).unwrap();
            prop_assert!(relative_matrix_difference(a.matrix(), b.matrix()) < 1e-14);
        }
    }
}
