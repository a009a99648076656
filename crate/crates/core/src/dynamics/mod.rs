//! Wavepackets in the truncated angular-sector basis and their unitary evolution.
//!
//! A packet is `ψ(ρ, φ) = (2π)^{-1/2} Σ_m a_m(ρ) e^{imφ}` for `|m| ≤ m_max`,
//! stored as one radial vector per sector on every grid node. The norm is
//! `Σ_m Σ_j w_j |a_m(ρ_j)|²` with the area weights of the sector operators.

mod interference;
mod propagate;

pub use interference::{
    detector_pattern, fit_slope, fringe_phase_demodulated, fringe_shift_extract, fringe_shift_extract_with, interference_experiment,
    interference_sweep, unwrap_phases, ExperimentGeometry, FringeRecord, FringeSettings, Timing, MIN_ARC_FRACTION,
};
pub use propagate::{evolve, step_crank_nicolson, AbsorbingMask, EvolveOptions, Propagator, Snapshot, Trajectory};

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::grid::RadialGrid;

/// Packets must keep this many widths between their centre and any radial edge.
pub const SUPPORT_WIDTHS: f64 = 5.0;

#[derive(Clone, Debug, PartialEq)]
pub struct WavePacket {
    amplitudes: Vec<Complex64>,
    grid: RadialGrid,
    m_max: i32,
    time: f64,
}

impl WavePacket {
    pub fn zeros(grid: &RadialGrid, m_max: i32) -> Result<Self> {
        if m_max < 0 {
            return Err(Error::invalid("m_max", "must be >= 0"));
        }
        let len = (2 * m_max as usize + 1) * grid.n_points();
        Ok(Self { amplitudes: vec![Complex64::default(); len], grid: grid.clone(), m_max, time: 0.0 })
    }

    /// Project `f(ρ, φ)` (φ ∈ (−π, π]) onto the sectors `|m| ≤ m_max` by FFT
    /// on `n_phi` equally spaced angles. Boundary nodes are left at zero.
    pub fn from_fn(
        grid: &RadialGrid,
        m_max: i32,
        n_phi: usize,
        f: impl Fn(f64, f64) -> Complex64,
    ) -> Result<Self> {
        let mut psi = Self::zeros(grid, m_max)?;
        if n_phi < 2 * m_max as usize + 1 {
            return Err(Error::invalid("n_phi", format!("must be >= 2 m_max + 1 = {}", 2 * m_max + 1)));
        }
        let fft = FftPlanner::new().plan_fft_forward(n_phi);
        let scale = (2.0 * PI).sqrt() / n_phi as f64;
        let angles: Vec<f64> = (0..n_phi)
            .map(|k| {
                let phi = 2.0 * PI * k as f64 / n_phi as f64;
                if phi > PI {
                    phi - 2.0 * PI
                } else {
                    phi
                }
            })
            .collect();
        let mut buf = vec![Complex64::default(); n_phi];
        for j in grid.active_range() {
            let rho = grid.node(j);
            for (b, &phi) in buf.iter_mut().zip(&angles) {
                *b = f(rho, phi);
            }
            fft.process(&mut buf);
            for m in -m_max..=m_max {
                let k = m.rem_euclid(n_phi as i32) as usize;
                let o = psi.offset(m);
                psi.amplitudes[o + j] = buf[k] * scale;
            }
        }
        if psi.amplitudes.iter().any(|a| !a.is_finite()) {
            return Err(Error::invalid("f", "produced non-finite values"));
        }
        Ok(psi)
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    pub fn m_max(&self) -> i32 {
        self.m_max
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub(crate) fn set_time(&mut self, t: f64) {
        self.time = t;
    }

    pub fn n_sectors(&self) -> usize {
        2 * self.m_max as usize + 1
    }

    fn offset(&self, m: i32) -> usize {
        (m + self.m_max) as usize * self.grid.n_points()
    }

    /// Radial amplitudes of sector `m` on every grid node.
    pub fn sector(&self, m: i32) -> &[Complex64] {
        assert!(m.abs() <= self.m_max, "sector {m} outside |m| <= {}", self.m_max);
        let o = self.offset(m);
        &self.amplitudes[o..o + self.grid.n_points()]
    }

    pub fn sector_mut(&mut self, m: i32) -> &mut [Complex64] {
        assert!(m.abs() <= self.m_max, "sector {m} outside |m| <= {}", self.m_max);
        let o = self.offset(m);
        let n = self.grid.n_points();
        &mut self.amplitudes[o..o + n]
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub(crate) fn sectors_mut(&mut self) -> std::slice::ChunksExactMut<'_, Complex64> {
        let n = self.grid.n_points();
        self.amplitudes.chunks_exact_mut(n)
    }

    /// Area weights on the active nodes, shared by every sector.
    pub fn weights(&self) -> Vec<f64> {
        area_weights(&self.grid)
    }

    pub fn norm_sqr(&self) -> f64 {
        let w = self.weights();
        let first = self.grid.first_active();
        self.amplitudes
            .chunks_exact(self.grid.n_points())
            .map(|s| s[first..first + w.len()].iter().zip(&w).map(|(a, w)| w * a.norm_sqr()).sum::<f64>())
            .sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn normalize(&mut self) -> Result<()> {
        let n = self.norm();
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::numeric("normalize", format!("norm = {n:e}")));
        }
        let s = 1.0 / n;
        self.amplitudes.iter_mut().for_each(|a| *a *= s);
        Ok(())
    }

    /// Probability carried by each sector.
    pub fn sector_populations(&self) -> Vec<(i32, f64)> {
        let w = self.weights();
        let first = self.grid.first_active();
        (-self.m_max..=self.m_max)
            .map(|m| {
                let s = &self.sector(m)[first..first + w.len()];
                (m, s.iter().zip(&w).map(|(a, w)| w * a.norm_sqr()).sum())
            })
            .collect()
    }

    /// `⟨m⟩`, the mean angular index.
    pub fn mean_m(&self) -> f64 {
        let pops = self.sector_populations();
        let total: f64 = pops.iter().map(|p| p.1).sum();
        pops.iter().map(|(m, p)| *m as f64 * p).sum::<f64>() / total
    }

    /// `⟨x⟩ + i⟨y⟩ = ⟨ρ e^{iφ}⟩`.
    pub fn mean_position(&self) -> Complex64 {
        let w = self.weights();
        let first = self.grid.first_active();
        let r: Vec<f64> = self.grid.active_range().map(|j| self.grid.node(j)).collect();
        let mut acc = Complex64::default();
        for m in -self.m_max..self.m_max {
            let lo = &self.sector(m)[first..first + w.len()];
            let hi = &self.sector(m + 1)[first..first + w.len()];
            for i in 0..w.len() {
                acc += w[i] * r[i] * hi[i].conj() * lo[i];
            }
        }
        acc / self.norm_sqr()
    }

    /// `⟨|x − ⟨x⟩|²⟩`, the squared spatial spread.
    pub fn spread_sqr(&self) -> f64 {
        let w = self.weights();
        let first = self.grid.first_active();
        let mut r2 = 0.0;
        for m in -self.m_max..=self.m_max {
            let s = &self.sector(m)[first..first + w.len()];
            for (i, j) in self.grid.active_range().enumerate() {
                let rho = self.grid.node(j);
                r2 += w[i] * rho * rho * s[i].norm_sqr();
            }
        }
        r2 / self.norm_sqr() - self.mean_position().norm_sqr()
    }

    /// `ψ(ρ_j, φ)` at grid node `j`.
    pub fn value_at_node(&self, j: usize, phi: f64) -> Complex64 {
        let c = 1.0 / (2.0 * PI).sqrt();
        (-self.m_max..=self.m_max)
            .map(|m| self.amplitudes[self.offset(m) + j] * Complex64::from_polar(c, m as f64 * phi))
            .sum()
    }

    /// Upper bound on `max |ψ|²` from `|ψ(ρ_j, φ)| ≤ Σ_m |a_m(ρ_j)| / √(2π)`.
    pub fn peak_density_bound(&self) -> f64 {
        let n = self.grid.n_points();
        (0..n)
            .map(|j| {
                let s: f64 = (-self.m_max..=self.m_max).map(|m| self.amplitudes[self.offset(m) + j].norm()).sum();
                s * s / (2.0 * PI)
            })
            .fold(0.0, f64::max)
    }

    /// `|ψ(ρ_j, φ)|²` for each angle.
    pub fn intensity_on_arc(&self, j: usize, angles: &[f64]) -> Vec<f64> {
        angles.iter().map(|&phi| self.value_at_node(j, phi).norm_sqr()).collect()
    }
}

/// Area weights `ρ dρ` of the active nodes, identical to the sector operators'.
pub fn area_weights(grid: &RadialGrid) -> Vec<f64> {
    let h = grid.step();
    grid.active_range()
        .map(|j| {
            let half = if j == 0 { 0.5 } else { 1.0 };
            half * grid.node(j) * grid.jacobian_at(grid.native(j)) * h
        })
        .collect()
}

/// Gaussian in `(λ, φ) = (ln ρ, φ)` of width `sigma` (in λ and φ alike),
/// centred at `(ρ₀, φ₀)`, carrying the phase `e^{i(k_ρ λ + k_φ φ)}`.
/// Normalized after projection onto `|m| ≤ m_max`.
pub fn gaussian_packet(
    center: (f64, f64),
    sigma: f64,
    momentum: (f64, f64),
    grid: &RadialGrid,
    m_max: i32,
) -> Result<WavePacket> {
    let lobe = GaussianLobe::new(center, sigma, momentum, grid)?;
    let mut psi = WavePacket::from_fn(grid, m_max, default_n_phi(m_max), |rho, phi| lobe.eval(rho, phi))?;
    psi.normalize()?;
    Ok(psi)
}

/// Angular samples for projections: comfortably above the sector band.
pub(crate) fn default_n_phi(m_max: i32) -> usize {
    (8 * (m_max as usize + 1)).next_power_of_two().max(64)
}

/// One Gaussian lobe, evaluated with φ − φ₀ wrapped to (−π, π].
#[derive(Clone, Copy, Debug)]
pub(crate) struct GaussianLobe {
    lambda0: f64,
    phi0: f64,
    sigma: f64,
    k_lambda: f64,
    k_phi: f64,
}

impl GaussianLobe {
    pub(crate) fn new(center: (f64, f64), sigma: f64, momentum: (f64, f64), grid: &RadialGrid) -> Result<Self> {
        let (rho0, phi0) = center;
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::invalid("sigma", format!("must be finite and > 0, got {sigma}")));
        }
        if !(rho0.is_finite() && phi0.is_finite() && momentum.0.is_finite() && momentum.1.is_finite()) {
            return Err(Error::invalid("center", "centre and momentum must be finite"));
        }
        if sigma * SUPPORT_WIDTHS >= PI {
            return Err(Error::invalid("sigma", "angular width wraps around the puncture"));
        }
        let lambda0 = rho0.ln();
        let lo = grid.rho_min().ln();
        let hi = grid.rho_max().ln();
        if !(lambda0 - SUPPORT_WIDTHS * sigma > lo && lambda0 + SUPPORT_WIDTHS * sigma < hi) {
            return Err(Error::invalid(
                "center",
                format!(
                    "packet at rho = {rho0} with width {sigma} must stay {SUPPORT_WIDTHS} widths inside \
                     [{}, {}]",
                    grid.rho_min(),
                    grid.rho_max()
                ),
            ));
        }
        Ok(Self { lambda0, phi0, sigma, k_lambda: momentum.0, k_phi: momentum.1 })
    }

    pub(crate) fn eval(&self, rho: f64, phi: f64) -> Complex64 {
        let dl = rho.ln() - self.lambda0;
        let dp = wrap_angle(phi - self.phi0);
        let env = (-(dl * dl + dp * dp) / (4.0 * self.sigma * self.sigma)).exp();
        Complex64::from_polar(env, self.k_lambda * dl + self.k_phi * dp)
    }
}

/// Map an angle to (−π, π].
pub fn wrap_angle(a: f64) -> f64 {
    let r = a.rem_euclid(2.0 * PI);
    if r > PI {
        r - 2.0 * PI
    } else {
        r
    }
}
