//! Crank–Nicolson stepping, sector by sector.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::RadialGrid;
use crate::hamiltonian::SectorOperator;
use crate::tridiag::CayleyStep;

use super::WavePacket;

/// Largest number of steps [`evolve`] accepts.
pub const MAX_STEPS: usize = 1_000_000;

/// Pre-factored Cayley steps for every sector `m ∈ [−m_max, m_max]`.
#[derive(Clone, Debug)]
pub struct Propagator {
    sectors: Vec<SectorOperator>,
    steps: Vec<CayleyStep>,
    m_max: i32,
    dt: f64,
}

impl Propagator {
    /// `sectors` must be ordered by m from `−m_max` to `m_max` on one grid.
    pub fn new(sectors: Vec<SectorOperator>, dt: f64) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::invalid("dt", format!("must be finite and > 0, got {dt}")));
        }
        if sectors.is_empty() || sectors.len().is_multiple_of(2) {
            return Err(Error::invalid("sectors", "need an odd, non-zero number of sectors"));
        }
        let m_max = (sectors.len() / 2) as i32;
        for (i, s) in sectors.iter().enumerate() {
            if s.m() != i as i32 - m_max {
                return Err(Error::invalid("sectors", format!("sector {i} has m = {}, expected {}", s.m(), i as i32 - m_max)));
            }
            if s.grid() != sectors[0].grid() || s.hbar() != sectors[0].hbar() {
                return Err(Error::invalid("sectors", "all sectors must share one grid and one hbar"));
            }
        }
        let a = dt / (2.0 * sectors[0].hbar());
        let steps = sectors.iter().map(|s| CayleyStep::new(s.matrix(), a)).collect::<Result<_>>()?;
        Ok(Self { sectors, steps, m_max, dt })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn m_max(&self) -> i32 {
        self.m_max
    }

    pub fn grid(&self) -> &RadialGrid {
        self.sectors[0].grid()
    }

    pub fn sectors(&self) -> &[SectorOperator] {
        &self.sectors
    }

    fn check(&self, psi: &WavePacket) -> Result<()> {
        if psi.m_max() != self.m_max || psi.grid() != self.grid() {
            return Err(Error::invalid("psi", "packet grid or m_max does not match the Hamiltonian"));
        }
        Ok(())
    }

    /// One step `ψ ← (1 + i dt H/2ħ)⁻¹ (1 − i dt H/2ħ) ψ` in every sector.
    pub fn step(&self, psi: &mut WavePacket) -> Result<()> {
        self.check(psi)?;
        let range = self.grid().active_range();
        let n_active = range.len();
        psi.sectors_mut()
            .collect::<Vec<_>>()
            .into_par_iter()
            .zip(self.steps.par_iter())
            .for_each_init(
                || vec![Complex64::default(); n_active],
                |scratch, (chunk, step)| step.apply(&mut chunk[range.clone()], scratch),
            );
        if psi.amplitudes().iter().any(|a| !a.is_finite()) {
            return Err(Error::numeric("crank-nicolson step", format!("non-finite amplitude at t = {}", psi.time())));
        }
        psi.set_time(psi.time() + self.dt);
        Ok(())
    }

    /// `⟨ψ|H|ψ⟩` summed over sectors, in the weighted inner product.
    pub fn energy(&self, psi: &WavePacket) -> f64 {
        let range = self.grid().active_range();
        self.sectors
            .iter()
            .enumerate()
            .map(|(i, s)| s.expectation(&psi.sector(i as i32 - self.m_max)[range.clone()]))
            .sum()
    }

    /// Evolve `psi0` for `t_final` in steps of `dt`.
    pub fn evolve(&self, psi0: &WavePacket, t_final: f64, opts: &EvolveOptions) -> Result<Trajectory> {
        self.check(psi0)?;
        let n_steps = step_count(t_final, self.dt)?;
        if opts.snapshot_every == 0 {
            return Err(Error::invalid("snapshot_every", "must be >= 1"));
        }
        let t0 = psi0.time();
        let mut psi = psi0.clone();
        let mut snapshots = Vec::new();
        let mut states = Vec::new();
        let record = |psi: &WavePacket, k: usize, snaps: &mut Vec<Snapshot>, states: &mut Vec<WavePacket>| {
            snaps.push(Snapshot { step: k, time: t0 + k as f64 * self.dt, norm: psi.norm(), energy: self.energy(psi) });
            if opts.keep_states {
                states.push(psi.clone());
            }
        };
        record(&psi, 0, &mut snapshots, &mut states);
        for k in 1..=n_steps {
            self.step(&mut psi)?;
            if let Some(mask) = &opts.mask {
                mask.apply(&mut psi);
            }
            // Times are k·dt from the start, not an accumulated sum.
            psi.set_time(t0 + k as f64 * self.dt);
            if k % opts.snapshot_every == 0 || k == n_steps {
                record(&psi, k, &mut snapshots, &mut states);
            }
        }
        Ok(Trajectory { snapshots, states, final_state: psi })
    }
}

fn step_count(t_final: f64, dt: f64) -> Result<usize> {
    if !(t_final.is_finite() && t_final >= 0.0) {
        return Err(Error::invalid("t_final", format!("must be finite and >= 0, got {t_final}")));
    }
    let ratio = t_final / dt;
    let n = ratio.round();
    if (ratio - n).abs() > 1e-9 * ratio.max(1.0) {
        return Err(Error::invalid("t_final", format!("T/dt = {ratio} is not an integer")));
    }
    if n > MAX_STEPS as f64 {
        return Err(Error::invalid("t_final", format!("T/dt = {n} exceeds {MAX_STEPS} steps")));
    }
    Ok(n as usize)
}

/// One Crank–Nicolson step of `psi` under `sectors`.
pub fn step_crank_nicolson(psi: &WavePacket, sectors: &[SectorOperator], dt: f64) -> Result<WavePacket> {
    let prop = Propagator::new(sectors.to_vec(), dt)?;
    let mut out = psi.clone();
    prop.step(&mut out)?;
    Ok(out)
}

/// Evolve `psi0` under `sectors` for `t_final`.
pub fn evolve(
    psi0: &WavePacket,
    sectors: &[SectorOperator],
    t_final: f64,
    dt: f64,
    opts: &EvolveOptions,
) -> Result<Trajectory> {
    Propagator::new(sectors.to_vec(), dt)?.evolve(psi0, t_final, opts)
}

/// `cos²` damping over the outer part of the radial extent, applied after each step.
#[derive(Clone, Debug, PartialEq)]
pub struct AbsorbingMask {
    factors: Vec<f64>,
}

impl AbsorbingMask {
    /// Ramp from 1 at `ρ_max − fraction·(ρ_max − ρ_min)` down to 0 at `ρ_max`.
    pub fn new(grid: &RadialGrid, fraction: f64) -> Result<Self> {
        if !(fraction > 0.0 && fraction < 1.0) {
            return Err(Error::invalid("mask_fraction", format!("must lie in (0, 1), got {fraction}")));
        }
        let width = fraction * (grid.rho_max() - grid.rho_min());
        let start = grid.rho_max() - width;
        let factors = grid
            .nodes()
            .into_iter()
            .map(|rho| {
                if rho <= start {
                    1.0
                } else {
                    (0.5 * std::f64::consts::PI * (rho - start) / width).cos().powi(2)
                }
            })
            .collect();
        Ok(Self { factors })
    }

    pub fn factors(&self) -> &[f64] {
        &self.factors
    }

    pub fn apply(&self, psi: &mut WavePacket) {
        for chunk in psi.sectors_mut() {
            for (a, f) in chunk.iter_mut().zip(&self.factors) {
                *a *= *f;
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvolveOptions {
    /// Record a snapshot every this many steps (the last step is always recorded).
    pub snapshot_every: usize,
    /// Keep full packets alongside the norm/energy record.
    pub keep_states: bool,
    pub mask: Option<AbsorbingMask>,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self { snapshot_every: 1, keep_states: false, mask: None }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Snapshot {
    pub step: usize,
    pub time: f64,
    pub norm: f64,
    pub energy: f64,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub snapshots: Vec<Snapshot>,
    /// Packets at the snapshot times, when requested.
    pub states: Vec<WavePacket>,
    pub final_state: WavePacket,
}

impl Trajectory {
    /// `max_t |‖ψ_t‖ − ‖ψ_0‖|`.
    pub fn norm_drift(&self) -> f64 {
        let n0 = self.snapshots[0].norm;
        self.snapshots.iter().map(|s| (s.norm - n0).abs()).fold(0.0, f64::max)
    }

    /// `max_t |⟨H⟩_t − ⟨H⟩_0| / |⟨H⟩_0|`.
    pub fn energy_drift(&self) -> f64 {
        let e0 = self.snapshots[0].energy;
        self.snapshots.iter().map(|s| (s.energy - e0).abs()).fold(0.0, f64::max) / e0.abs()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::gaussian_packet;
    use crate::hamiltonian::{build_sectors, SectorRoute};
    use crate::spectral::solve_sector;

    fn setup(beta: f64, m_max: i32, n: usize) -> (RadialGrid, Vec<SectorOperator>) {
        let g = RadialGrid::log(0.05, 40.0, n).unwrap();
        let s = build_sectors(SectorRoute::PuncturedPlane, beta, m_max, &g, 1.0, 1.0).unwrap();
        (g, s)
    }

    #[test]
    fn zero_hamiltonian_is_identity() {
        let (g, mut s) = setup(0.0, 2, 128);
        for op in &mut s {
            op.matrix = crate::tridiag::Tridiagonal::zeros(op.len());
        }
        let psi = gaussian_packet((20.0, 0.3), 0.1, (1.0, 2.0), &g, 2).unwrap();
        let out = step_crank_nicolson(&psi, &s, 0.1).unwrap();
        assert_eq!(out.amplitudes(), psi.amplitudes());
    }

    #[test]
    fn eigenvector_picks_up_cayley_phase() {
        let (g, s) = setup(0.3, 1, 256);
        let pair = &solve_sector(&s[1], 1).unwrap()[0];
        let mut psi = WavePacket::zeros(&g, 1).unwrap();
        for (i, j) in g.active_range().enumerate() {
            psi.sector_mut(0)[j] = Complex64::new(pair.vector[i], 0.0);
        }
        let dt = 0.05;
        let out = step_crank_nicolson(&psi, &s, dt).unwrap();
        let want = -2.0 * (pair.energy * dt / 2.0).atan();
        let j = g.nearest_node(1.0);
        let ratio = out.sector(0)[j] / psi.sector(0)[j];
        assert!((ratio.arg() - want).abs() < 1e-9, "{} vs {want}", ratio.arg());
        assert!((ratio.norm() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn conserves_norm_and_energy() {
        let (g, s) = setup(0.25, 12, 256);
        let psi = gaussian_packet((10.0, 0.0), 0.15, (-3.0, 5.0), &g, 12).unwrap();
        let traj = evolve(&psi, &s, 1.0, 0.01, &EvolveOptions { snapshot_every: 10, ..Default::default() }).unwrap();
        assert_eq!(traj.snapshots.len(), 11);
        assert!(traj.norm_drift() < 1e-12);
        assert!(traj.energy_drift() < 1e-10);
        assert!((traj.final_state.time() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn free_packet_spreads() {
        let (g, s) = setup(0.0, 16, 256);
        let psi = gaussian_packet((15.0, 0.0), 0.1, (0.0, 0.0), &g, 16).unwrap();
        let opts = EvolveOptions { snapshot_every: 100, keep_states: true, mask: None };
        let traj = evolve(&psi, &s, 3.0, 0.01, &opts).unwrap();
        let widths: Vec<f64> = traj.states.iter().map(|p| p.spread_sqr()).collect();
        assert!(widths.windows(2).all(|w| w[1] > w[0]), "{widths:?}");
    }

    #[test]
    fn short_step_leaves_packet_nearly_unchanged() {
        let (g, s) = setup(0.0, 8, 256);
        let psi = gaussian_packet((15.0, 0.0), 0.1, (0.0, 0.0), &g, 8).unwrap();
        let diff = |dt: f64| {
            let out = step_crank_nicolson(&psi, &s, dt).unwrap();
            out.amplitudes().iter().zip(psi.amplitudes()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
        };
        // First-order in dt from the generator, and vanishing as dt → 0.
        let (d1, d2) = (diff(1e-3), diff(5e-4));
        assert!(d1 < 1e-2 && (d1 / d2 - 2.0).abs() < 0.05);
    }

    #[test]
    fn rejects_bad_timing() {
        let (g, s) = setup(0.0, 1, 64);
        let psi = gaussian_packet((10.0, 0.0), 0.1, (0.0, 0.0), &g, 1).unwrap();
        let o = EvolveOptions::default();
        assert!(evolve(&psi, &s, 1.0, 0.1, &o).is_ok());
        assert!(evolve(&psi, &s, 1.05, 0.1, &o).is_err());
        assert!(evolve(&psi, &s, 1.0, 0.3, &o).is_err());
        assert!(evolve(&psi, &s, 1.0, -0.1, &o).is_err());
        assert!(evolve(&psi, &s, 2e6, 1.0, &o).is_err());
        let other = gaussian_packet((10.0, 0.0), 0.1, (0.0, 0.0), &g, 2).unwrap();
        assert!(evolve(&other, &s, 0.1, 0.1, &o).is_err());
    }

    #[test]
    fn mask_damps_only_the_outer_extent() {
        let g = RadialGrid::log(0.05, 40.0, 512).unwrap();
        let mask = AbsorbingMask::new(&g, 0.1).unwrap();
        let start = 40.0 - 0.1 * (40.0 - 0.05);
        for (rho, f) in g.nodes().into_iter().zip(mask.factors()) {
            if rho <= start {
                assert_eq!(*f, 1.0);
            } else {
                assert!(*f < 1.0 && *f >= 0.0);
            }
        }
        assert!(mask.factors()[511] < 1e-20);
    }
}
