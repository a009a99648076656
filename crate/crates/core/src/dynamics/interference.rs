//! Two-lobe interference around the puncture and fringe-shift extraction.
//!
//! Two Gaussian lobes start on opposite sides of the puncture at
//! `φ = ±φ_s` and head in straight lines for the point `(−ρ_d, 0)`, where
//! they cross. The launch state is `e^{−iβφ}` times the free two-lobe packet
//! with `φ ∈ (−π, π]`, which is smooth on its support because the cut sits on
//! the detector side. Around the crossing point the two lobes differ by the
//! winding phase `e^{2πiβ}`, so the fringes on the detector arc move toward
//! positive detector angle θ = φ − π by `2πβ` of fringe phase.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::RadialGrid;
use crate::hamiltonian::{build_sectors, SectorRoute};

use super::propagate::{AbsorbingMask, EvolveOptions, Propagator};
use super::{default_n_phi, wrap_angle, GaussianLobe, WavePacket};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentGeometry {
    /// Radius of the two lobe centres.
    pub launch_radius: f64,
    /// Lobes start at `φ = ±lobe_angle`.
    pub lobe_angle: f64,
    /// Spatial width σ of each lobe at launch.
    pub width: f64,
    /// Momentum magnitude of each lobe.
    pub momentum: f64,
    /// Radius of the detector arc centred on `φ = π`.
    pub detector_radius: f64,
    /// The arc covers `θ ∈ [−half_angle, half_angle]` with `θ = φ − π`.
    pub detector_half_angle: f64,
    pub detector_samples: usize,
    pub m_max: i32,
    pub hamiltonian: SectorRoute,
}

impl Default for ExperimentGeometry {
    fn default() -> Self {
        Self {
            launch_radius: 20.0,
            lobe_angle: PI / 2.0,
            width: 2.0,
            momentum: 2.0,
            detector_radius: 20.0,
            detector_half_angle: 0.4,
            detector_samples: 401,
            m_max: 64,
            hamiltonian: SectorRoute::PuncturedPlane,
        }
    }
}

impl ExperimentGeometry {
    fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("launch_radius", self.launch_radius),
            ("width", self.width),
            ("momentum", self.momentum),
            ("detector_radius", self.detector_radius),
            ("detector_half_angle", self.detector_half_angle),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(name, format!("must be finite and > 0, got {v}")));
            }
        }
        if !(self.lobe_angle > 0.0 && self.lobe_angle < PI) {
            return Err(Error::invalid("lobe_angle", "must lie in (0, π)"));
        }
        if self.detector_half_angle >= PI / 2.0 {
            return Err(Error::invalid("detector_half_angle", "must be < π/2"));
        }
        if self.detector_samples < 16 {
            return Err(Error::invalid("detector_samples", "must be >= 16"));
        }
        if self.m_max < 1 {
            return Err(Error::invalid("m_max", "must be >= 1"));
        }
        Ok(())
    }

    fn recombination_point(&self) -> (f64, f64) {
        (-self.detector_radius, 0.0)
    }

    /// Straight-line distance from a lobe centre to the recombination point.
    pub fn path_length(&self) -> f64 {
        let (dx, dy) = self.recombination_point();
        (dx - self.launch_radius * self.lobe_angle.cos()).hypot(dy - self.launch_radius * self.lobe_angle.sin())
    }

    /// Flight time to the recombination point at speed `p/M`.
    pub fn recombination_time(&self, mass: f64) -> f64 {
        self.path_length() * mass / self.momentum
    }

    /// `(k_λ, k_φ)` of the lobe launched at angle `phi_s`.
    fn lobe_momentum(&self, phi_s: f64) -> (f64, f64) {
        let (dx, dy) = self.recombination_point();
        let (px, py) = (self.launch_radius * phi_s.cos(), self.launch_radius * phi_s.sin());
        let len = (dx - px).hypot(dy - py);
        let (ux, uy) = ((dx - px) / len, (dy - py) / len);
        let radial = ux * phi_s.cos() + uy * phi_s.sin();
        let tangential = -ux * phi_s.sin() + uy * phi_s.cos();
        let scale = self.launch_radius * self.momentum;
        (scale * radial, scale * tangential)
    }

    pub fn detector_angles(&self) -> Vec<f64> {
        let n = self.detector_samples;
        (0..n)
            .map(|i| -self.detector_half_angle + 2.0 * self.detector_half_angle * i as f64 / (n - 1) as f64)
            .collect()
    }

    /// Launch state `e^{−iβφ}(ψ_B + ψ_C)`, normalized.
    pub fn launch_state(&self, beta: f64, grid: &RadialGrid) -> Result<WavePacket> {
        self.validate()?;
        let sigma = self.width / self.launch_radius;
        let phi_s = self.lobe_angle;
        let b = GaussianLobe::new((self.launch_radius, phi_s), sigma, self.lobe_momentum(phi_s), grid)?;
        let c = GaussianLobe::new((self.launch_radius, -phi_s), sigma, self.lobe_momentum(-phi_s), grid)?;
        let mut psi = WavePacket::from_fn(grid, self.m_max, default_n_phi(self.m_max), |rho, phi| {
            Complex64::from_polar(1.0, -beta * phi) * (b.eval(rho, phi) + c.eval(rho, phi))
        })?;
        psi.normalize()?;
        Ok(psi)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Timing {
    pub dt: f64,
    /// Defaults to the recombination time rounded to a whole number of steps.
    pub t_final: Option<f64>,
    /// Outer fraction of the radial extent covered by the absorbing mask.
    pub mask_fraction: Option<f64>,
}

impl Default for Timing {
    fn default() -> Self {
        Self { dt: 0.01, t_final: None, mask_fraction: Some(0.1) }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FringeRecord {
    pub beta: f64,
    /// Detector angles θ = φ − π.
    pub detector_angles: Vec<f64>,
    pub intensity: Vec<f64>,
    /// Fringe phase relative to the β = 0 reference, in (−π, π].
    pub extracted_shift: f64,
    pub contrast: f64,
}

/// Tolerances of the fringe fit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FringeSettings {
    pub min_contrast: f64,
    /// Largest accepted `Σ(I − I_ref(θ−δ))² / Σ(I − Ī)²` over the fit window.
    pub max_fit_residual: f64,
}

impl Default for FringeSettings {
    fn default() -> Self {
        Self { min_contrast: 0.05, max_fit_residual: 0.25 }
    }
}

/// Smallest accepted ratio of the arc's peak intensity to the packet's peak density.
pub const MIN_ARC_FRACTION: f64 = 1e-6;

/// Detector-arc intensity at the end of a run with flux parameter `beta`.
/// `extracted_shift` is left at zero; see [`interference_experiment`].
pub fn detector_pattern(beta: f64, geom: &ExperimentGeometry, grid: &RadialGrid, timing: &Timing) -> Result<FringeRecord> {
    geom.validate()?;
    let mass = 1.0;
    let hbar = 1.0;
    let psi0 = geom.launch_state(beta, grid)?;
    let sectors = build_sectors(geom.hamiltonian, beta, geom.m_max, grid, mass, hbar)?;
    let prop = Propagator::new(sectors, timing.dt)?;
    let t_final = match timing.t_final {
        Some(t) => t,
        None => (geom.recombination_time(mass) / timing.dt).round() * timing.dt,
    };
    let mask = timing.mask_fraction.map(|f| AbsorbingMask::new(grid, f)).transpose()?;
    let opts = EvolveOptions { snapshot_every: usize::MAX, keep_states: false, mask };
    let traj = prop.evolve(&psi0, t_final, &opts)?;

    let angles = geom.detector_angles();
    let phis: Vec<f64> = angles.iter().map(|t| PI + t).collect();
    let j = grid.nearest_node(geom.detector_radius);
    let intensity = traj.final_state.intensity_on_arc(j, &phis);
    let arc_peak = intensity.iter().cloned().fold(0.0, f64::max);
    let peak = traj.final_state.peak_density_bound();
    if !(arc_peak > MIN_ARC_FRACTION * peak) {
        return Err(Error::UnusableFringe(format!(
            "detector arc peak {arc_peak:.3e} is below {MIN_ARC_FRACTION:e} of the packet peak {peak:.3e} at t = {t_final}"
        )));
    }
    let contrast = principal_contrast(&angles, &intensity)?;
    Ok(FringeRecord { beta, detector_angles: angles, intensity, extracted_shift: 0.0, contrast })
}

/// Run at `beta` and at β = 0, and extract the fringe shift between them.
pub fn interference_experiment(
    beta: f64,
    geom: &ExperimentGeometry,
    grid: &RadialGrid,
    timing: &Timing,
) -> Result<FringeRecord> {
    let reference = detector_pattern(0.0, geom, grid, timing)?;
    referenced(detector_pattern(beta, geom, grid, timing)?, &reference)
}

/// [`interference_experiment`] for several β sharing one reference run.
pub fn interference_sweep(
    betas: &[f64],
    geom: &ExperimentGeometry,
    grid: &RadialGrid,
    timing: &Timing,
) -> Result<Vec<FringeRecord>> {
    let reference = detector_pattern(0.0, geom, grid, timing)?;
    betas
        .iter()
        .map(|&b| {
            let rec = if b == 0.0 { reference.clone() } else { detector_pattern(b, geom, grid, timing)? };
            referenced(rec, &reference)
        })
        .collect()
}

fn referenced(mut rec: FringeRecord, reference: &FringeRecord) -> Result<FringeRecord> {
    let settings = FringeSettings::default();
    for r in [&rec, reference] {
        if r.contrast < settings.min_contrast {
            return Err(Error::UnusableFringe(format!(
                "contrast {:.3} at beta = {} is below {}",
                r.contrast, r.beta, settings.min_contrast
            )));
        }
    }
    rec.extracted_shift = fringe_shift_extract_with(&rec, reference, &settings)?;
    Ok(rec)
}

/// Fringe phase of `record` relative to `reference`, in (−π, π].
pub fn fringe_shift_extract(record: &FringeRecord, reference: &FringeRecord) -> Result<f64> {
    fringe_shift_extract_with(record, reference, &FringeSettings::default())
}

pub fn fringe_shift_extract_with(record: &FringeRecord, reference: &FringeRecord, settings: &FringeSettings) -> Result<f64> {
    let theta = &reference.detector_angles;
    if record.detector_angles != *theta || record.intensity.len() != theta.len() || theta.len() < 16 {
        return Err(Error::invalid("record", "records must share the same detector angles"));
    }
    let step = theta[1] - theta[0];
    let period = dominant_period(theta, &reference.intensity)?;
    let centre = centroid(theta, &reference.intensity);
    let window: Vec<usize> = (0..theta.len()).filter(|&i| (theta[i] - centre).abs() <= period).collect();
    let (lo, hi) = (theta[0], theta[theta.len() - 1]);
    if centre - 2.0 * period < lo || centre + 2.0 * period > hi || window.len() < 8 {
        return Err(Error::UnusableFringe(format!(
            "principal fringe (centre {centre:.4}, period {period:.4}) is not inside the detector arc"
        )));
    }
    // Divide out the slowly varying envelope so that only the fringes are compared.
    let rec = flatten(&record.intensity, period / step);
    let refr = flatten(&reference.intensity, period / step);
    let interp = |x: f64| cubic_sample(&refr, (x - lo) / step);
    let cost = |d: f64| -> f64 { window.iter().map(|&i| (rec[i] - interp(theta[i] - d)).powi(2)).sum() };

    // Coarse scan over one period, then golden-section refinement.
    const SCAN: usize = 200;
    let h = period / SCAN as f64;
    let best = (0..=SCAN)
        .map(|k| -0.5 * period + k as f64 * h)
        .min_by(|a, b| cost(*a).total_cmp(&cost(*b)))
        .unwrap();
    let delta = golden_min(&cost, best - h, best + h, 1e-12 * period);

    let mean = window.iter().map(|&i| rec[i]).sum::<f64>() / window.len() as f64;
    let spread: f64 = window.iter().map(|&i| (rec[i] - mean).powi(2)).sum();
    let residual = cost(delta) / spread;
    if !(residual <= settings.max_fit_residual) {
        return Err(Error::UnusableFringe(format!(
            "fit residual {residual:.3} exceeds {}",
            settings.max_fit_residual
        )));
    }
    Ok(wrap_angle(2.0 * PI * delta / period))
}

/// Fringe phase of `record` relative to `reference` by complex demodulation
/// at the reference's dominant wavenumber under a Hann taper. Independent of
/// the least-squares route and insensitive to the (common) envelope.
pub fn fringe_phase_demodulated(record: &FringeRecord, reference: &FringeRecord) -> Result<f64> {
    let theta = &reference.detector_angles;
    if record.detector_angles != *theta || record.intensity.len() != theta.len() || theta.len() < 16 {
        return Err(Error::invalid("record", "records must share the same detector angles"));
    }
    let k = 2.0 * PI / dominant_period(theta, &reference.intensity)?;
    let n = theta.len();
    let z = |intensity: &[f64]| -> Complex64 {
        (0..n)
            .map(|i| {
                let w = (PI * i as f64 / (n - 1) as f64).sin().powi(2);
                Complex64::from_polar(w * intensity[i], -k * theta[i])
            })
            .sum()
    };
    let (zr, zq) = (z(&reference.intensity), z(&record.intensity));
    if zr.norm() == 0.0 || zq.norm() == 0.0 {
        return Err(Error::UnusableFringe("no fringe component at the dominant wavenumber".into()));
    }
    Ok(wrap_angle((zr * zq.conj()).arg()))
}

/// `I / ⟨I⟩_P` with `⟨I⟩_P` the moving average over one period of `period_samples` samples.
fn flatten(intensity: &[f64], period_samples: f64) -> Vec<f64> {
    const NODES: usize = 64;
    (0..intensity.len())
        .map(|i| {
            let avg = (0..NODES)
                .map(|k| {
                    let x = i as f64 + period_samples * ((k as f64 + 0.5) / NODES as f64 - 0.5);
                    cubic_sample(intensity, x)
                })
                .sum::<f64>()
                / NODES as f64;
            if avg > 0.0 {
                intensity[i] / avg
            } else {
                0.0
            }
        })
        .collect()
}

/// Contrast `(I_max − I_min)/(I_max + I_min)` over the principal fringe.
fn principal_contrast(theta: &[f64], intensity: &[f64]) -> Result<f64> {
    let period = dominant_period(theta, intensity)?;
    let centre = centroid(theta, intensity);
    let (mut max, mut min) = (f64::NEG_INFINITY, f64::INFINITY);
    for (t, i) in theta.iter().zip(intensity) {
        if (t - centre).abs() <= period {
            max = max.max(*i);
            min = min.min(*i);
        }
    }
    if !(max > 0.0) {
        return Ok(0.0);
    }
    Ok((max - min) / (max + min))
}

fn centroid(theta: &[f64], intensity: &[f64]) -> f64 {
    let total: f64 = intensity.iter().sum();
    theta.iter().zip(intensity).map(|(t, i)| t * i).sum::<f64>() / total
}

/// Period of the strongest oscillation with at least two periods on the arc.
fn dominant_period(theta: &[f64], intensity: &[f64]) -> Result<f64> {
    let n = theta.len();
    let span = theta[n - 1] - theta[0];
    // Hann taper around a weighted mean, so the finite arc does not leak into the peak.
    let taper: Vec<f64> = (0..n).map(|i| (PI * i as f64 / (n - 1) as f64).sin().powi(2)).collect();
    let total: f64 = taper.iter().sum();
    let mean = intensity.iter().zip(&taper).map(|(i, w)| i * w).sum::<f64>() / total;
    if !(mean > 0.0) {
        return Err(Error::UnusableFringe("no intensity on the detector arc".into()));
    }
    let signal: Vec<f64> = intensity.iter().zip(&taper).map(|(i, w)| (i - mean) * w).collect();
    let power = |k: f64| {
        let s: Complex64 = theta.iter().zip(&signal).map(|(t, x)| Complex64::from_polar(*x, -k * t)).sum();
        s.norm_sqr()
    };
    let k_min = 2.0 * 2.0 * PI / span;
    let k_max = 0.25 * 2.0 * PI / (theta[1] - theta[0]);
    let dk = 0.25 * 2.0 * PI / span;
    let mut best = (k_min, power(k_min));
    let mut k = k_min;
    while k <= k_max {
        let p = power(k);
        if p > best.1 {
            best = (k, p);
        }
        k += dk;
    }
    let k = golden_min(&|k| -power(k), best.0 - dk, best.0 + dk, 1e-10 * best.0);
    Ok(2.0 * PI / k)
}

/// Catmull–Rom interpolation of uniformly spaced samples at fractional index `x`.
fn cubic_sample(y: &[f64], x: f64) -> f64 {
    let n = y.len() as isize;
    let i = x.floor() as isize;
    let t = x - i as f64;
    let at = |k: isize| y[k.clamp(0, n - 1) as usize];
    let (p0, p1, p2, p3) = (at(i - 1), at(i), at(i + 1), at(i + 2));
    0.5 * (2.0 * p1
        + (-p0 + p2) * t
        + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * t * t
        + (-p0 + 3.0 * p1 - 3.0 * p2 + p3) * t * t * t)
}

fn golden_min(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() <= tol {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Remove 2π jumps from a sequence of wrapped phases.
pub fn unwrap_phases(phases: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(phases.len());
    let mut offset = 0.0;
    for (i, &p) in phases.iter().enumerate() {
        if i > 0 {
            let prev = phases[i - 1];
            offset += -2.0 * PI * ((p - prev) / (2.0 * PI)).round();
        }
        out.push(p + offset);
    }
    out
}

/// Least-squares line `y = slope·x + intercept`.
pub fn fit_slope(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::invalid("x", "need at least two points of equal length"));
    }
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::invalid("x", "abscissae must not all coincide"));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

#[cfg(test)]
mod tests {
    use super::*;

    const KAPPA: f64 = 56.0;

    /// Gaussian envelope centred at `centre` times fringes of phase `shift`.
    fn pattern(shift: f64, centre: f64) -> FringeRecord {
        let theta: Vec<f64> = (0..401).map(|i| -0.4 + 0.8 * i as f64 / 400.0).collect();
        let intensity = theta
            .iter()
            .map(|t| (-((t - centre).powi(2)) / (2.0 * 0.14f64.powi(2))).exp() * (1.0 + 0.9 * (KAPPA * t - shift).cos()))
            .collect();
        FringeRecord { beta: 0.0, detector_angles: theta, intensity, extracted_shift: 0.0, contrast: 0.0 }
    }

    fn synthetic(shift: f64) -> FringeRecord {
        pattern(shift, 0.0)
    }

    #[test]
    fn identical_records_give_zero() {
        let r = synthetic(0.0);
        assert!(fringe_shift_extract(&r, &r).unwrap().abs() < 1e-8);
    }

    #[test]
    fn recovers_a_translated_reference() {
        let reference = synthetic(0.0);
        for shift in [0.7, -1.2, 2.5] {
            // The whole pattern moved by δ = shift/κ.
            let moved = pattern(shift, shift / KAPPA);
            let got = fringe_shift_extract(&moved, &reference).unwrap();
            assert!((got - shift).abs() < 0.01, "{shift}: {got}");
        }
    }

    #[test]
    fn fringe_only_shifts_agree_across_routes() {
        let reference = synthetic(0.0);
        for shift in [0.3, 0.7, -1.2, 2.5, 3.0] {
            let rec = synthetic(shift);
            let fit = fringe_shift_extract(&rec, &reference).unwrap();
            let demod = fringe_phase_demodulated(&rec, &reference).unwrap();
            assert!(wrap_angle(demod - shift).abs() < 1e-3, "{shift}: {demod}");
            // The fit also drags the envelope along, which biases it slightly.
            assert!(wrap_angle(fit - shift).abs() < 0.06, "{shift}: {fit}");
        }
    }

    #[test]
    fn period_and_contrast_of_synthetic_pattern() {
        let r = synthetic(0.0);
        let p = dominant_period(&r.detector_angles, &r.intensity).unwrap();
        assert!((p - 2.0 * PI / 56.0).abs() < 2e-3 * p, "{p}");
        let c = principal_contrast(&r.detector_angles, &r.intensity).unwrap();
        assert!(c > 0.8 && c <= 1.0);
    }

    #[test]
    fn flat_pattern_is_rejected() {
        let mut r = synthetic(0.0);
        let flat = FringeRecord { intensity: r.intensity.iter().map(|_| 1.0).collect(), ..r.clone() };
        r.intensity.iter_mut().zip(&flat.intensity).for_each(|(a, _)| *a = a.sqrt());
        assert!(fringe_shift_extract(&flat, &synthetic(0.0)).is_err());
    }

    #[test]
    fn unwrap_and_slope() {
        let raw: Vec<f64> = (0..11).map(|i| wrap_angle(2.0 * PI * 0.1 * i as f64)).collect();
        let un = unwrap_phases(&raw);
        let x: Vec<f64> = (0..11).map(|i| 0.1 * i as f64).collect();
        let (s, c) = fit_slope(&x, &un).unwrap();
        assert!((s - 2.0 * PI).abs() < 1e-12 && c.abs() < 1e-12);
    }

    #[test]
    fn lobe_momenta_point_at_the_crossing() {
        let g = ExperimentGeometry::default();
        let (kl, kp) = g.lobe_momentum(PI / 2.0);
        let want = 20.0 * 2.0 / 2f64.sqrt();
        assert!((kl + want).abs() < 1e-12 && (kp - want).abs() < 1e-12);
        let (kl2, kp2) = g.lobe_momentum(-PI / 2.0);
        assert!((kl2 - kl).abs() < 1e-12 && (kp2 + kp).abs() < 1e-12);
        assert!((g.recombination_time(1.0) - 20.0 * 2f64.sqrt() / 2.0).abs() < 1e-12);
    }

    #[test]
    fn empty_detector_arc_is_unusable() {
        let grid = RadialGrid::log(0.05, 40.0, 256).unwrap();
        let geom = ExperimentGeometry::default();
        // the lobes have barely left their launch points
        let timing = Timing { dt: 0.05, t_final: Some(0.1), mask_fraction: None };
        let err = match detector_pattern(0.25, &geom, &grid, &timing) {
            Ok(r) => panic!("accepted a pattern with contrast {}", r.contrast),
            Err(e) => e,
        };
        assert!(matches!(err, Error::UnusableFringe(_)), "{err}");
        assert!(err.is_numeric());
    }
}
