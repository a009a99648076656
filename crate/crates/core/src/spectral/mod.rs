//! Disk spectra of the punctured-plane sectors and their Bessel oracle.

mod bessel;
mod eigen;

pub use bessel::{bessel_j, bessel_nu_zero, MAX_ORDER, MAX_ZERO_INDEX};
pub use eigen::{Eigenpair, Pencil};

use std::ops::RangeInclusive;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{InnerBoundary, RadialGrid};
use crate::hamiltonian::{assemble_ab_sector, assemble_punctured_sector, FluxConfig, SectorOperator, SectorRoute};

/// Lowest `k` eigenpairs of one sector, ascending, `vᵀWv = 1`.
pub fn solve_sector(op: &SectorOperator, k: usize) -> Result<Vec<Eigenpair>> {
    let limit = op.grid().n_points() / 4;
    if k == 0 || k > limit {
        return Err(Error::invalid("k", format!("must lie in [1, n_points/4 = {limit}], got {k}")));
    }
    Pencil::new(&op.stiffness(), op.weights())?.lowest(k)
}

/// Continuum disk eigenvalue `ħ² j²_{ν,n} / (2 M R²)`.
pub fn disk_oracle(nu: f64, n: usize, radius: f64, mass: f64, hbar: f64) -> Result<f64> {
    let j = bessel_nu_zero(nu.abs(), n)?;
    Ok(hbar * hbar * j * j / (2.0 * mass * radius * radius))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectrumEntry {
    pub m: i32,
    /// Radial quantum number, from 1.
    pub n: usize,
    /// Eigenvalue on the requested grid.
    pub energy: f64,
    /// `E(ρ_min/2) − E(ρ_min)`, zero when extrapolation is off.
    pub rho_min_shift: f64,
    /// Eigenvalue with the puncture-radius contamination extrapolated away.
    pub extrapolated_energy: f64,
    /// Continuum value, when `|m+β|` is inside the oracle's range.
    pub oracle_energy: Option<f64>,
    /// `|E − E_oracle| / E` using the extrapolated energy.
    pub rel_err: Option<f64>,
    pub residual: f64,
    #[serde(skip)]
    pub eigenvector: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectrumResult {
    pub beta: f64,
    pub radius: f64,
    /// Sorted by `(m, n)`.
    pub entries: Vec<SpectrumEntry>,
    pub grid: RadialGrid,
    pub inner_boundary: InnerBoundary,
}

impl SpectrumResult {
    pub fn sector(&self, m: i32) -> impl Iterator<Item = &SpectrumEntry> {
        self.entries.iter().filter(move |e| e.m == m)
    }

    pub fn get(&self, m: i32, n: usize) -> Option<&SpectrumEntry> {
        self.entries.iter().find(|e| e.m == m && e.n == n)
    }

    pub fn max_rel_err(&self) -> Option<f64> {
        self.entries.iter().filter_map(|e| e.rel_err).reduce(f64::max)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectrumOptions {
    pub hbar: f64,
    /// Solve again with the puncture radius halved and Richardson-extrapolate.
    pub extrapolate: bool,
    pub route: SectorRoute,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        Self { hbar: 1.0, extrapolate: true, route: SectorRoute::PuncturedPlane }
    }
}

fn assemble(route: SectorRoute, m: i32, beta: f64, grid: &RadialGrid, mass: f64, hbar: f64) -> Result<SectorOperator> {
    match route {
        SectorRoute::PuncturedPlane => assemble_punctured_sector(m, beta, grid, mass, hbar),
        SectorRoute::AharonovBohm => assemble_ab_sector(m, &FluxConfig::with_alpha(beta, hbar)?, grid, mass),
    }
}

/// Spectrum of the punctured disk of radius `radius` with ħ = 1.
pub fn disk_spectrum(
    beta: f64,
    m_range: RangeInclusive<i32>,
    radius: f64,
    grid: &RadialGrid,
    mass: f64,
    k_per_sector: usize,
) -> Result<SpectrumResult> {
    disk_spectrum_with(beta, m_range, radius, grid, mass, k_per_sector, &SpectrumOptions::default())
}

pub fn disk_spectrum_with(
    beta: f64,
    m_range: RangeInclusive<i32>,
    radius: f64,
    grid: &RadialGrid,
    mass: f64,
    k_per_sector: usize,
    opts: &SpectrumOptions,
) -> Result<SpectrumResult> {
    if !(radius.is_finite() && (radius - grid.rho_max()).abs() <= 1e-12 * radius) {
        return Err(Error::invalid("radius", format!("must equal the grid's rho_max = {}", grid.rho_max())));
    }
    if m_range.is_empty() {
        return Err(Error::invalid("m_range", "must not be empty"));
    }
    let halved = if opts.extrapolate { Some(grid.with_halved_puncture()?) } else { None };
    // Exponent of the leading ρ_min contamination.
    const ORDER: i32 = 2;

    let ms: Vec<i32> = m_range.collect();
    let sectors: Vec<Vec<SpectrumEntry>> = ms
        .par_iter()
        .map(|&m| {
            let op = assemble(opts.route, m, beta, grid, mass, opts.hbar)?;
            let pairs = solve_sector(&op, k_per_sector)?;
            let refined = match &halved {
                Some(g) => Some(solve_sector(&assemble(opts.route, m, beta, g, mass, opts.hbar)?, k_per_sector)?),
                None => None,
            };
            let nu = op.nu().abs();
            pairs
                .into_iter()
                .enumerate()
                .map(|(i, pair)| {
                    let n = i + 1;
                    let (shift, extrapolated) = match &refined {
                        Some(r) => {
                            let q = (halved.as_ref().unwrap().rho_min() / grid.rho_min()).powi(ORDER);
                            let e2 = r[i].energy;
                            (e2 - pair.energy, (e2 - q * pair.energy) / (1.0 - q))
                        }
                        None => (0.0, pair.energy),
                    };
                    let oracle = if nu < MAX_ORDER && n < MAX_ZERO_INDEX {
                        Some(disk_oracle(nu, n, radius, mass, opts.hbar)?)
                    } else {
                        None
                    };
                    Ok(SpectrumEntry {
                        m,
                        n,
                        energy: pair.energy,
                        rho_min_shift: shift,
                        extrapolated_energy: extrapolated,
                        oracle_energy: oracle,
                        rel_err: oracle.map(|o| (extrapolated - o).abs() / extrapolated.abs()),
                        residual: pair.residual,
                        eigenvector: pair.vector,
                    })
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    Ok(SpectrumResult {
        beta,
        radius,
        entries: sectors.into_iter().flatten().collect(),
        grid: grid.clone(),
        inner_boundary: grid.inner_boundary(),
    })
}

/// Lowest `k` energies of every sector in `m_range`, concatenated in `(m, n)` order.
pub fn sector_energies(
    beta: f64,
    m_range: RangeInclusive<i32>,
    grid: &RadialGrid,
    mass: f64,
    hbar: f64,
    k: usize,
) -> Result<Vec<f64>> {
    let ms: Vec<i32> = m_range.collect();
    let per: Vec<Vec<f64>> = ms
        .par_iter()
        .map(|&m| {
            let op = assemble_punctured_sector(m, beta, grid, mass, hbar)?;
            Ok(solve_sector(&op, k)?.into_iter().map(|p| p.energy).collect())
        })
        .collect::<Result<_>>()?;
    Ok(per.into_iter().flatten().collect())
}

/// Symmetric Hausdorff distance between two finite sets of reals.
pub fn hausdorff_distance(a: &[f64], b: &[f64]) -> f64 {
    fn directed(from: &[f64], sorted: &[f64]) -> f64 {
        from.iter()
            .map(|x| {
                let i = sorted.partition_point(|y| y < x);
                let below = if i > 0 { x - sorted[i - 1] } else { f64::INFINITY };
                let above = if i < sorted.len() { sorted[i] - x } else { f64::INFINITY };
                below.min(above)
            })
            .fold(0.0, f64::max)
    }
    if a.is_empty() || b.is_empty() {
        return if a.len() == b.len() { 0.0 } else { f64::INFINITY };
    }
    let mut sa = a.to_vec();
    let mut sb = b.to_vec();
    sa.sort_by(f64::total_cmp);
    sb.sort_by(f64::total_cmp);
    directed(a, &sb).max(directed(b, &sa))
}

/// Distance between the spectra of (β, m ∈ [−m_max, m_max−1]) and
/// (β+1, m ∈ [−m_max−1, m_max−2]), which carry the same values of m + β.
pub fn periodicity_check(beta: f64, m_max: i32, grid: &RadialGrid, mass: f64, hbar: f64, k: usize) -> Result<f64> {
    if m_max < 2 {
        return Err(Error::invalid("m_max", format!("must be >= 2, got {m_max}")));
    }
    let a = sector_energies(beta, -m_max..=m_max - 1, grid, mass, hbar, k)?;
    let b = sector_energies(beta + 1.0, -m_max - 1..=m_max - 2, grid, mass, hbar, k)?;
    Ok(hausdorff_distance(&a, &b))
}

/// Distance between the spectra of β and −β over the symmetric window
/// `[−m_max, m_max]`, which is mapped to itself by m → −m.
pub fn reflection_check(beta: f64, m_max: i32, grid: &RadialGrid, mass: f64, hbar: f64, k: usize) -> Result<f64> {
    if m_max < 2 {
        return Err(Error::invalid("m_max", format!("must be >= 2, got {m_max}")));
    }
    let a = sector_energies(beta, -m_max..=m_max, grid, mass, hbar, k)?;
    let b = sector_energies(-beta, -m_max..=m_max, grid, mass, hbar, k)?;
    Ok(hausdorff_distance(&a, &b))
}
