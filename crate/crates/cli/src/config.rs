//! Run configuration: the JSON file layout, command-line overrides and the
//! fully resolved form that is echoed into the manifest.

use std::path::{Path, PathBuf};

use abflux::hamiltonian::flux_to_alpha;
use abflux::{InnerBoundary, RadialGrid, SectorRoute, Spacing};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    AlgebraCheck,
    Equivalence,
    Spectrum,
    Evolve,
    Interfere,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::AlgebraCheck => "algebra-check",
            Mode::Equivalence => "equivalence",
            Mode::Spectrum => "spectrum",
            Mode::Evolve => "evolve",
            Mode::Interfere => "interfere",
        }
    }

    /// Stem of the data file written by this mode.
    pub fn stem(self) -> &'static str {
        match self {
            Mode::AlgebraCheck => "algebra_check",
            other => other.name(),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

// ---- file layout: every field optional, unknown keys rejected ----

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub mode: Option<Mode>,
    pub physics: Option<PhysicsSection>,
    pub hbar: Option<f64>,
    pub mass: Option<f64>,
    pub grid: Option<GridSection>,
    pub truncation: Option<TruncationSection>,
    pub timing: Option<TimingSection>,
    pub experiment: Option<ExperimentSection>,
    pub packet: Option<PacketSection>,
    pub algebra: Option<AlgebraSection>,
    pub output: Option<OutputSection>,
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicsSection {
    pub beta: Option<f64>,
    pub q: Option<f64>,
    pub phi: Option<f64>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub rho_min: Option<f64>,
    pub rho_max: Option<f64>,
    pub n_points: Option<usize>,
    pub spacing: Option<Spacing>,
    pub inner_boundary: Option<InnerBoundary>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruncationSection {
    pub m_max: Option<i32>,
    pub k_per_sector: Option<usize>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimingSection {
    pub dt: Option<f64>,
    pub t_final: Option<f64>,
    /// Outer fraction of the radial extent under the absorbing mask; 0 turns it off.
    pub mask_fraction: Option<f64>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub launch_radius: Option<f64>,
    pub lobe_angle: Option<f64>,
    pub width: Option<f64>,
    pub momentum: Option<f64>,
    pub detector_radius: Option<f64>,
    pub detector_half_angle: Option<f64>,
    pub detector_samples: Option<usize>,
    pub hamiltonian: Option<SectorRoute>,
    pub sweep: Option<Sweep>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PacketSection {
    pub center_rho: Option<f64>,
    pub center_phi: Option<f64>,
    pub sigma: Option<f64>,
    pub k_rho: Option<f64>,
    pub k_phi: Option<f64>,
    pub snapshot_every: Option<usize>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgebraSection {
    pub samples: Option<usize>,
    pub test_vectors: Option<usize>,
    pub bump_half_width: Option<f64>,
    pub fd_step: Option<f64>,
    pub refine: Option<bool>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
    pub format: Option<Format>,
}

/// Values given on the command line; they win over the file.
#[derive(Clone, Debug, Default, clap::Args)]
pub struct Overrides {
    /// Flux parameter β (replaces the file's physics block).
    #[arg(long, allow_hyphen_values = true)]
    pub beta: Option<f64>,
    /// Charge q (with --phi, replaces the file's physics block).
    #[arg(long, allow_hyphen_values = true)]
    pub q: Option<f64>,
    /// Confined flux Φ.
    #[arg(long, allow_hyphen_values = true)]
    pub phi: Option<f64>,
    #[arg(long)]
    pub n_points: Option<usize>,
    #[arg(long)]
    pub rho_min: Option<f64>,
    #[arg(long)]
    pub rho_max: Option<f64>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub t_final: Option<f64>,
    #[arg(long)]
    pub m_max: Option<i32>,
    #[arg(long)]
    pub k_per_sector: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub hbar: Option<f64>,
    #[arg(long)]
    pub mass: Option<f64>,
}

// ---- resolved form ----

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Physics {
    pub beta: f64,
    pub q: Option<f64>,
    pub phi: Option<f64>,
    /// `"beta"` or `"q,phi"`.
    pub source: &'static str,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridConfig {
    pub rho_min: f64,
    pub rho_max: f64,
    pub n_points: usize,
    pub spacing: Spacing,
    pub inner_boundary: InnerBoundary,
}

impl GridConfig {
    pub fn build(&self) -> Result<RadialGrid, CliError> {
        let g = RadialGrid::new(self.rho_min, self.rho_max, self.n_points, self.spacing)
            .map_err(|e| CliError::validation("grid", e.to_string()))?;
        Ok(g.with_inner_boundary(self.inner_boundary))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Truncation {
    pub m_max: i32,
    pub k_per_sector: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TimingConfig {
    pub dt: f64,
    pub t_final: Option<f64>,
    pub mask_fraction: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub launch_radius: f64,
    pub lobe_angle: f64,
    pub width: f64,
    pub momentum: f64,
    pub detector_radius: f64,
    pub detector_half_angle: f64,
    pub detector_samples: usize,
    pub hamiltonian: SectorRoute,
    pub sweep: Option<Sweep>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PacketConfig {
    pub center_rho: f64,
    pub center_phi: f64,
    pub sigma: f64,
    pub k_rho: f64,
    pub k_phi: f64,
    pub snapshot_every: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AlgebraConfig {
    pub samples: usize,
    pub test_vectors: usize,
    pub bump_half_width: f64,
    pub fd_step: f64,
    pub refine: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub format: Format,
}

/// Fully resolved configuration. Sections that do not apply to the mode are `None`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub mode: Mode,
    /// Absent only for an interference sweep, where β comes from the sweep.
    pub physics: Option<Physics>,
    pub hbar: f64,
    pub mass: f64,
    pub grid: GridConfig,
    pub truncation: Truncation,
    pub timing: Option<TimingConfig>,
    pub experiment: Option<ExperimentConfig>,
    pub packet: Option<PacketConfig>,
    pub algebra: Option<AlgebraConfig>,
    pub output: OutputConfig,
    pub seed: u64,
}

impl RunConfig {
    pub fn beta(&self) -> f64 {
        self.physics.as_ref().map_or(0.0, |p| p.beta)
    }
}

pub fn read_config_file(path: &Path) -> Result<ConfigFile, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Parse(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))
}

/// Per-mode defaults: (rho_min, rho_max, n_points, m_max, k_per_sector).
fn mode_defaults(mode: Mode) -> (f64, f64, usize, i32, usize) {
    match mode {
        Mode::AlgebraCheck => (1e-2, 1.0, 2048, 4, 1),
        Mode::Equivalence => (1e-2, 1.0, 512, 3, 1),
        Mode::Spectrum => (1e-3, 1.0, 4096, 2, 3),
        Mode::Evolve => (0.05, 20.0, 1024, 32, 1),
        Mode::Interfere => (0.05, 40.0, 2048, 64, 1),
    }
}

fn positive(key: &'static str, v: f64) -> Result<f64, CliError> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(CliError::validation(key, format!("must be finite and > 0, got {v}")))
    }
}

fn finite(key: &'static str, v: f64) -> Result<f64, CliError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::validation(key, format!("must be finite, got {v}")))
    }
}

fn resolve_physics(p: &PhysicsSection) -> Result<Physics, CliError> {
    match (p.beta, p.q, p.phi) {
        (Some(_), Some(_), _) | (Some(_), _, Some(_)) => Err(CliError::validation(
            "physics.beta",
            "conflicts with physics.q/physics.phi; supply either beta or both q and phi",
        )),
        (Some(beta), None, None) => Ok(Physics { beta: finite("physics.beta", beta)?, q: None, phi: None, source: "beta" }),
        (None, Some(q), Some(phi)) => {
            let q = finite("physics.q", q)?;
            let phi = finite("physics.phi", phi)?;
            Ok(Physics { beta: flux_to_alpha(q, phi), q: Some(q), phi: Some(phi), source: "q,phi" })
        }
        (None, Some(_), None) => Err(CliError::validation("physics.phi", "required when physics.q is given")),
        (None, None, Some(_)) => Err(CliError::validation("physics.q", "required when physics.phi is given")),
        (None, None, None) => Err(CliError::validation("physics", "supply either beta or both q and phi")),
    }
}

/// Merge `file` and `ov` for `mode` and validate every key.
pub fn resolve(mode: Mode, file: ConfigFile, ov: &Overrides, out: Option<PathBuf>, format: Option<Format>) -> Result<RunConfig, CliError> {
    if let Some(m) = file.mode {
        if m != mode {
            return Err(CliError::validation(
                "mode",
                format!("config file says `{}` but the `{}` subcommand was invoked", m.name(), mode.name()),
            ));
        }
    }
    let (d_rmin, d_rmax, d_n, d_m, d_k) = mode_defaults(mode);

    let cli_physics = ov.beta.is_some() || ov.q.is_some() || ov.phi.is_some();
    let physics_section = if cli_physics {
        Some(PhysicsSection { beta: ov.beta, q: ov.q, phi: ov.phi })
    } else {
        file.physics.clone()
    };
    let sweep = file.experiment.as_ref().and_then(|e| e.sweep);
    if sweep.is_some() && mode != Mode::Interfere {
        return Err(CliError::validation("experiment.sweep", "only used by the interfere mode"));
    }
    let physics = match (sweep, physics_section) {
        (Some(_), Some(_)) => {
            return Err(CliError::validation(
                "physics",
                "conflicts with experiment.sweep, which already lists the beta values",
            ))
        }
        (Some(_), None) => None,
        (None, Some(p)) => Some(resolve_physics(&p)?),
        (None, None) => return Err(CliError::validation("physics", "supply either beta or both q and phi")),
    };

    let hbar = positive("hbar", ov.hbar.or(file.hbar).unwrap_or(1.0))?;
    let mass = positive("mass", ov.mass.or(file.mass).unwrap_or(1.0))?;

    let g = file.grid.unwrap_or_default();
    let grid = GridConfig {
        rho_min: positive("grid.rho_min", ov.rho_min.or(g.rho_min).unwrap_or(d_rmin))?,
        rho_max: positive("grid.rho_max", ov.rho_max.or(g.rho_max).unwrap_or(d_rmax))?,
        n_points: ov.n_points.or(g.n_points).unwrap_or(d_n),
        spacing: g.spacing.unwrap_or_default(),
        inner_boundary: g.inner_boundary.unwrap_or_default(),
    };
    if grid.rho_max <= grid.rho_min {
        return Err(CliError::validation("grid.rho_max", format!("must exceed grid.rho_min = {}", grid.rho_min)));
    }
    if grid.n_points < abflux::grid::MIN_POINTS {
        return Err(CliError::validation("grid.n_points", format!("must be >= {}", abflux::grid::MIN_POINTS)));
    }
    if matches!(mode, Mode::AlgebraCheck | Mode::Interfere | Mode::Evolve) && grid.spacing != Spacing::Log {
        return Err(CliError::validation("grid.spacing", format!("the {} mode needs log spacing", mode.name())));
    }

    let t = file.truncation.unwrap_or_default();
    let truncation = Truncation {
        m_max: ov.m_max.or(t.m_max).unwrap_or(d_m),
        k_per_sector: ov.k_per_sector.or(t.k_per_sector).unwrap_or(d_k),
    };
    if truncation.m_max < 0 || (truncation.m_max < 1 && mode != Mode::Spectrum && mode != Mode::Equivalence) {
        return Err(CliError::validation("truncation.m_max", format!("out of range: {}", truncation.m_max)));
    }
    if truncation.k_per_sector == 0 || truncation.k_per_sector > grid.n_points / 4 {
        return Err(CliError::validation("truncation.k_per_sector", "must lie in [1, n_points/4]"));
    }

    let timing = if matches!(mode, Mode::Evolve | Mode::Interfere) {
        let tm = file.timing.unwrap_or_default();
        let (d_dt, d_t, d_mask) = if mode == Mode::Evolve { (1e-3, Some(1.0), 0.0) } else { (0.01, None, 0.1) };
        let t_final = match ov.t_final.or(tm.t_final).or(d_t) {
            Some(v) if !(v.is_finite() && v >= 0.0) => {
                return Err(CliError::validation("timing.t_final", format!("must be finite and >= 0, got {v}")))
            }
            other => other,
        };
        let mask_fraction = tm.mask_fraction.unwrap_or(d_mask);
        if !(0.0..0.5).contains(&mask_fraction) {
            return Err(CliError::validation("timing.mask_fraction", "must lie in [0, 0.5)"));
        }
        Some(TimingConfig { dt: positive("timing.dt", ov.dt.or(tm.dt).unwrap_or(d_dt))?, t_final, mask_fraction })
    } else {
        if file.timing.is_some() {
            return Err(CliError::validation("timing", format!("not used by the {} mode", mode.name())));
        }
        None
    };

    let experiment = if mode == Mode::Interfere {
        let e = file.experiment.unwrap_or_default();
        let d = abflux::ExperimentGeometry::default();
        if let Some(s) = &sweep {
            sweep_values(s)?;
        }
        Some(ExperimentConfig {
            launch_radius: positive("experiment.launch_radius", e.launch_radius.unwrap_or(d.launch_radius))?,
            lobe_angle: positive("experiment.lobe_angle", e.lobe_angle.unwrap_or(d.lobe_angle))?,
            width: positive("experiment.width", e.width.unwrap_or(d.width))?,
            momentum: positive("experiment.momentum", e.momentum.unwrap_or(d.momentum))?,
            detector_radius: positive("experiment.detector_radius", e.detector_radius.unwrap_or(d.detector_radius))?,
            detector_half_angle: positive(
                "experiment.detector_half_angle",
                e.detector_half_angle.unwrap_or(d.detector_half_angle),
            )?,
            detector_samples: e.detector_samples.unwrap_or(d.detector_samples),
            hamiltonian: e.hamiltonian.unwrap_or(d.hamiltonian),
            sweep,
        })
    } else {
        if file.experiment.is_some() {
            return Err(CliError::validation("experiment", format!("not used by the {} mode", mode.name())));
        }
        None
    };

    let packet = if mode == Mode::Evolve {
        let p = file.packet.unwrap_or_default();
        let cfg = PacketConfig {
            center_rho: positive("packet.center_rho", p.center_rho.unwrap_or(5.0))?,
            center_phi: finite("packet.center_phi", p.center_phi.unwrap_or(0.0))?,
            sigma: positive("packet.sigma", p.sigma.unwrap_or(0.1))?,
            k_rho: finite("packet.k_rho", p.k_rho.unwrap_or(10.0))?,
            k_phi: finite("packet.k_phi", p.k_phi.unwrap_or(0.0))?,
            snapshot_every: p.snapshot_every.unwrap_or(10),
        };
        if cfg.snapshot_every == 0 {
            return Err(CliError::validation("packet.snapshot_every", "must be >= 1"));
        }
        Some(cfg)
    } else {
        if file.packet.is_some() {
            return Err(CliError::validation("packet", format!("not used by the {} mode", mode.name())));
        }
        None
    };

    let algebra = if mode == Mode::AlgebraCheck {
        let a = file.algebra.unwrap_or_default();
        let cfg = AlgebraConfig {
            samples: a.samples.unwrap_or(100),
            test_vectors: a.test_vectors.unwrap_or(3),
            bump_half_width: positive("algebra.bump_half_width", a.bump_half_width.unwrap_or(0.3))?,
            fd_step: positive("algebra.fd_step", a.fd_step.unwrap_or(1e-5))?,
            refine: a.refine.unwrap_or(true),
        };
        if cfg.samples == 0 {
            return Err(CliError::validation("algebra.samples", "must be >= 1"));
        }
        if cfg.test_vectors == 0 {
            return Err(CliError::validation("algebra.test_vectors", "must be >= 1"));
        }
        if cfg.bump_half_width >= 0.5 {
            return Err(CliError::validation("algebra.bump_half_width", "must be < 0.5"));
        }
        Some(cfg)
    } else {
        if file.algebra.is_some() {
            return Err(CliError::validation("algebra", format!("not used by the {} mode", mode.name())));
        }
        None
    };

    let o = file.output.unwrap_or_default();
    let output = OutputConfig {
        dir: out.or(o.dir).unwrap_or_else(|| PathBuf::from("out")),
        format: format.or(o.format).unwrap_or_default(),
    };

    Ok(RunConfig {
        mode,
        physics,
        hbar,
        mass,
        grid,
        truncation,
        timing,
        experiment,
        packet,
        algebra,
        output,
        seed: ov.seed.or(file.seed).unwrap_or(0),
    })
}

/// `start, start + step, …, stop`; `(stop − start)/step` must be a whole number.
pub fn sweep_values(s: &Sweep) -> Result<Vec<f64>, CliError> {
    for (k, v) in [("experiment.sweep.start", s.start), ("experiment.sweep.stop", s.stop)] {
        finite(k, v)?;
    }
    positive("experiment.sweep.step", s.step)?;
    let span = (s.stop - s.start) / s.step;
    let n = span.round();
    if span < -1e-9 || (span - n).abs() > 1e-9 * n.max(1.0) {
        return Err(CliError::validation("experiment.sweep", "(stop - start)/step must be a non-negative integer"));
    }
    if n > 1000.0 {
        return Err(CliError::validation("experiment.sweep", "more than 1001 values"));
    }
    Ok((0..=n as usize).map(|i| s.start + i as f64 * s.step).collect())
}
