//! Punctured plane, factored through the radial and angular generators.
//!
//! `H = (π̂_ρ² + π̂_φ²)/(2Mρ²)` with `π̂_ρ = −iħ ρ∂_ρ` and `π̂_φ = ħ(m+β)` on
//! sector m. `π̂_ρ` is a forward difference living on the faces between
//! nodes; its square is formed as `D⁻¹ Gᵀ M_f G` where `D` and `M_f` are the
//! λ-measures (λ = ln ρ) of nodes and faces. This is the self-adjoint square
//! of `π̂_ρ` in `L²(dλ)`, which coincides with `L²(ρ dρ)` after the overall
//! `ρ⁻²` row scaling.

use crate::error::Result;
use crate::grid::{InnerBoundary, RadialGrid};
use crate::tridiag::Tridiagonal;

use super::{validate_sector_inputs, SectorOperator};

pub fn assemble_punctured_sector(
    m: i32,
    beta: f64,
    grid: &RadialGrid,
    mass: f64,
    hbar: f64,
) -> Result<SectorOperator> {
    validate_sector_inputs(beta, mass, hbar)?;

    let h = grid.step();
    let n = grid.n_points();
    let first = grid.first_active();
    let nu = m as f64 + beta;
    let pi_phi_sq = (hbar * nu) * (hbar * nu);

    // λ-width of the face between e and e+1, and the π̂_ρ difference weight
    // ρ dξ/dρ / h across it (units of 1/dλ).
    let faces: Vec<(f64, f64)> = (0..n - 1)
        .map(|e| {
            let xi = 0.5 * (grid.native(e) + grid.native(e + 1));
            let dlam_dxi = grid.jacobian_at(xi) / grid.radius_at(xi);
            (h * dlam_dxi, 1.0 / (h * dlam_dxi))
        })
        .collect();
    // Face contribution to π̂_ρ²: μ_f |ħ p_f|².
    let face_energy = |e: usize| {
        let (mu, p) = faces[e];
        mu * (hbar * p) * (hbar * p)
    };

    let size = grid.n_active();
    let mut mat = Tridiagonal::zeros(size);
    let mut weight = Vec::with_capacity(size);
    for (i, j) in grid.active_range().enumerate() {
        let rho = grid.node(j);
        let half = if j == 0 { 0.5 } else { 1.0 };
        let mu = half * h * grid.jacobian_at(grid.native(j)) / rho;

        let right = face_energy(j);
        let left = if j > 0 { face_energy(j - 1) } else { 0.0 };
        let mut radial = (left + right) / mu;
        if j == 0 && grid.inner_boundary() == InnerBoundary::Regular {
            radial += hbar * hbar * nu.abs() / mu;
        }
        let scale = 1.0 / (2.0 * mass * rho * rho);
        mat.diag[i] = scale * (radial + pi_phi_sq);
        if j + 2 < n {
            mat.sup[i] = -scale * right / mu;
        }
        if j > first {
            mat.sub[i - 1] = -scale * left / mu;
        }
        weight.push(mu * rho * rho);
    }

    Ok(SectorOperator { m, shift: beta, hbar, mass, grid: grid.clone(), matrix: mat, weight })
}
