//! Flux-threaded plane, conservative polar stencil.
//!
//! The radial part is discretized in flux form on the native coordinate ξ,
//! `ρ⁻¹∂_ρ(ρ∂_ρψ) = (ρ ρ_ξ)⁻¹ ∂_ξ((ρ/ρ_ξ) ∂_ξψ)`, with finite-volume cells of
//! area `ρ ρ_ξ h` around each node and edge conductances `(ρ/ρ_ξ)/h` at the
//! cell faces. The gauge term contributes `ħ²(m+α)²/(2Mρ²)`.

use crate::error::Result;
use crate::grid::{InnerBoundary, RadialGrid};
use crate::tridiag::Tridiagonal;

use super::{validate_sector_inputs, FluxConfig, SectorOperator};

pub fn assemble_ab_sector(m: i32, flux: &FluxConfig, grid: &RadialGrid, mass: f64) -> Result<SectorOperator> {
    let alpha = flux.alpha();
    let hbar = flux.hbar();
    validate_sector_inputs(alpha, mass, hbar)?;

    let h = grid.step();
    let n = grid.n_points();
    let first = grid.first_active();
    let kinetic = hbar * hbar / (2.0 * mass);
    let winding = m as f64 + alpha;

    // Conductance of the face between nodes e and e+1.
    let face = |e: usize| {
        let xi = 0.5 * (grid.native(e) + grid.native(e + 1));
        grid.radius_at(xi) / grid.jacobian_at(xi) / h
    };

    let size = grid.n_active();
    let mut mat = Tridiagonal::zeros(size);
    let mut area = Vec::with_capacity(size);
    for (i, j) in grid.active_range().enumerate() {
        let xi = grid.native(j);
        let r = grid.node(j);
        let half = if j == 0 { 0.5 } else { 1.0 };
        let a = half * r * grid.jacobian_at(xi) * h;

        let right = face(j);
        let left = if j > 0 { face(j - 1) } else { 0.0 };
        let mut d = kinetic * (left + right) / a + kinetic * winding * winding / (r * r);
        if j == 0 && grid.inner_boundary() == InnerBoundary::Regular {
            d += kinetic * winding.abs() / a;
        }
        mat.diag[i] = d;
        if j + 2 < n {
            mat.sup[i] = -kinetic * right / a;
        }
        if j > first {
            mat.sub[i - 1] = -kinetic * left / a;
        }
        area.push(a);
    }

    Ok(SectorOperator { m, shift: alpha, hbar, mass, grid: grid.clone(), matrix: mat, weight: area })
}
