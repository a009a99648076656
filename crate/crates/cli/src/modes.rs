//! One runner per subcommand. Each returns its data tables and the
//! invariant checks that go into the manifest.

use std::f64::consts::PI;

use abflux::algebra::{
    bump_test_vector, central_extension_check, commutator_residual, roundoff_bound, BracketMethod, Generator,
    MomentumMap, PhaseSpacePoint, StructureTable, TruncatedRep,
};
use abflux::dynamics::{
    fit_slope, fringe_phase_demodulated, gaussian_packet, interference_sweep, unwrap_phases, wrap_angle,
    AbsorbingMask, EvolveOptions, Propagator,
};
use abflux::hamiltonian::{build_sectors, equivalence_check};
use abflux::spectral::{disk_spectrum_with, SpectrumOptions};
use abflux::{ExperimentGeometry, RadialGrid, SectorRoute, Timing};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{sweep_values, Mode, RunConfig};
use crate::error::CliError;
use crate::output::{Cell, Check, Table};

pub struct ModeOutput {
    /// `(file stem, table)` in writing order.
    pub tables: Vec<(String, Table)>,
    pub checks: Vec<Check>,
}

const EQUIVALENCE_TOL: f64 = 1e-13;
const SPECTRUM_TOL: f64 = 1e-4;
const MOMENTUM_MAP_TOL: f64 = 1e-12;
const MOMENTUM_MAP_FD_TOL: f64 = 1e-6;
const MIXED_COMMUTATOR_TOL: f64 = 1e-8;
const REFINEMENT_RATIO: (f64, f64) = (3.6, 4.4);
const NORM_DRIFT_TOL: f64 = 1e-10;
const ENERGY_DRIFT_TOL: f64 = 1e-8;
const SLOPE_REL_TOL: f64 = 0.05;
const HALF_FLUX_TOL: f64 = 0.15;

pub fn run(cfg: &RunConfig) -> Result<ModeOutput, CliError> {
    match cfg.mode {
        Mode::AlgebraCheck => algebra_check(cfg),
        Mode::Equivalence => equivalence(cfg),
        Mode::Spectrum => spectrum(cfg),
        Mode::Evolve => evolve(cfg),
        Mode::Interfere => interfere(cfg),
    }
}

fn single(mode: Mode, table: Table, checks: Vec<Check>) -> ModeOutput {
    ModeOutput { tables: vec![(mode.stem().to_owned(), table)], checks }
}

const PAIRS: [(Generator, Generator); 6] = [
    (Generator::PiPhi, Generator::PiRho),
    (Generator::C, Generator::S),
    (Generator::C, Generator::PiPhi),
    (Generator::S, Generator::PiPhi),
    (Generator::PiRho, Generator::C),
    (Generator::PiRho, Generator::S),
];

fn pair_name(x: Generator, y: Generator) -> String {
    format!("[{x},{y}]")
}

fn random_samples(rng: &mut ChaCha8Rng, n: usize) -> Vec<PhaseSpacePoint> {
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let (x, y) = (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        if f64::hypot(x, y) < 0.1 {
            continue;
        }
        out.push(PhaseSpacePoint::new(x, y, rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)));
    }
    out
}

fn algebra_check(cfg: &RunConfig) -> Result<ModeOutput, CliError> {
    let a = cfg.algebra.as_ref().expect("resolved for algebra-check");
    let beta = cfg.beta();
    let m_max = cfg.truncation.m_max;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut table = Table::new(&["check", "subject", "n_points", "value", "bound", "pass"])
        .note("algebra-check: brackets use [X,Y] = (1/i)[X^,Y^] with hbar = 1")
        .note("commutator value = ||([X^,Y^] - i Z^) v|| / ||v|| maximised over seeded bump test vectors")
        .note("exact pairs are bounded by 64 eps ||X^|| ||Y^||; ratio = value(N) / value(2N)");
    let mut checks = Vec::new();
    let mut record = |table: &mut Table, check: &str, subject: String, n: Option<usize>, c: Check| {
        table.push(vec![
            check.into(),
            subject.into(),
            n.map_or(Cell::Empty, Cell::from),
            c.value.into(),
            c.bound.clone().into(),
            c.pass.into(),
        ]);
        checks.push(c);
    };

    let structure = StructureTable::punctured_plane();
    let jac = structure.max_basis_jacobi_residual();
    let c = Check { name: "jacobi".into(), value: jac, bound: "== 0".into(), pass: jac == 0.0 };
    record(&mut table, "jacobi", "all-basis-triples".into(), None, c);

    let samples = random_samples(&mut rng, a.samples);
    let map = MomentumMap::punctured_plane();
    let analytic = central_extension_check(&structure, &map, &samples, BracketMethod::Analytic)?;
    record(
        &mut table,
        "momentum-map",
        "analytic".into(),
        None,
        Check::at_most("momentum-map analytic", analytic, MOMENTUM_MAP_TOL),
    );
    let fd = central_extension_check(&structure, &map, &samples, BracketMethod::FiniteDifference { rel_step: a.fd_step })?;
    record(
        &mut table,
        "momentum-map",
        "finite-difference".into(),
        None,
        Check::at_most("momentum-map finite-difference", fd, MOMENTUM_MAP_FD_TOL),
    );

    // Amplitudes are drawn once so that both resolutions see the same vectors.
    let amplitudes: Vec<Vec<Complex64>> = (0..a.test_vectors)
        .map(|_| {
            (-m_max..=m_max).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect()
        })
        .collect();
    let base = cfg.grid.build()?;
    let mut grids = vec![base.clone()];
    if a.refine {
        grids.push(
            RadialGrid::new(base.rho_min(), base.rho_max(), 2 * base.n_points(), base.spacing())?
                .with_inner_boundary(base.inner_boundary()),
        );
    }
    let mut per_grid: Vec<Vec<(f64, f64)>> = Vec::new();
    for g in &grids {
        let rep = TruncatedRep::build(beta, m_max, g)?;
        let n = g.n_points();
        for &gen in &Generator::ALL {
            let h = rep.hermiticity_residual(gen);
            let tol = 1e-15 * rep.norm_bound(gen);
            record(&mut table, "hermiticity", gen.to_string(), Some(n), Check::at_most(format!("hermiticity {gen} N={n}"), h, tol));
        }
        let mut row = Vec::new();
        for &(x, y) in &PAIRS {
            let mut worst: f64 = 0.0;
            for amp in &amplitudes {
                let v = bump_test_vector(&rep, a.bump_half_width, |m| amp[(m + m_max) as usize]);
                worst = worst.max(commutator_residual(&rep, x, y, &v)?);
            }
            let floor = roundoff_bound(&rep, x, y);
            let tol = if exact_pair(x, y) { floor } else { MIXED_COMMUTATOR_TOL };
            record(
                &mut table,
                "commutator",
                pair_name(x, y),
                Some(n),
                Check::at_most(format!("commutator {} N={n}", pair_name(x, y)), worst, tol),
            );
            row.push((worst, floor));
        }
        per_grid.push(row);
    }
    if per_grid.len() == 2 {
        let n = grids[0].n_points();
        for (k, &(x, y)) in PAIRS.iter().enumerate().filter(|(_, &(x, y))| !exact_pair(x, y)) {
            let (coarse, coarse_floor) = per_grid[0][k];
            let (fine, fine_floor) = per_grid[1][k];
            let name = format!("refinement ratio {} N={n}", pair_name(x, y));
            let c = if coarse <= coarse_floor && fine <= fine_floor {
                // exact on the lattice: nothing left to converge
                Check { name, value: coarse / fine.max(f64::MIN_POSITIVE), bound: "rounding level".into(), pass: true }
            } else {
                Check::within(name, coarse / fine, REFINEMENT_RATIO.0, REFINEMENT_RATIO.1)
            };
            record(&mut table, "commutator-ratio", pair_name(x, y), Some(n), c);
        }
    }
    Ok(single(cfg.mode, table, checks))
}

fn exact_pair(x: Generator, y: Generator) -> bool {
    matches!((x, y), (Generator::PiPhi, Generator::PiRho) | (Generator::C, Generator::S))
}

fn equivalence(cfg: &RunConfig) -> Result<ModeOutput, CliError> {
    let grid = cfg.grid.build()?;
    let alpha = cfg.beta();
    let m = cfg.truncation.m_max;
    let diff = equivalence_check(alpha, &grid, -m..=m, 1.0)?;
    let check = Check::at_most("max_rel_diff", diff, EQUIVALENCE_TOL);
    let mut table = Table::new(&["alpha", "m_min", "m_max", "n_points", "max_rel_diff", "pass"])
        .note("equivalence: flux Hamiltonian at alpha vs punctured-plane Hamiltonian at beta = alpha")
        .note("max_rel_diff = max over sectors and entries of |A - B| / max(|A|, |B|); natural units hbar = M = 1")
        .note(format!("pass: max_rel_diff <= {EQUIVALENCE_TOL:e}"));
    table.push(vec![alpha.into(), (-m).into(), m.into(), grid.n_points().into(), diff.into(), check.pass.into()]);
    Ok(single(cfg.mode, table, vec![check]))
}

fn spectrum(cfg: &RunConfig) -> Result<ModeOutput, CliError> {
    let g = &cfg.grid;
    // Length unit R = rho_max.
    let grid = RadialGrid::new(g.rho_min / g.rho_max, 1.0, g.n_points, g.spacing)?.with_inner_boundary(g.inner_boundary);
    let m = cfg.truncation.m_max;
    let beta = cfg.beta();
    let opts = SpectrumOptions { hbar: 1.0, extrapolate: true, route: SectorRoute::PuncturedPlane };
    let res = disk_spectrum_with(beta, -m..=m, 1.0, &grid, 1.0, cfg.truncation.k_per_sector, &opts)?;
    let mut table = Table::new(&["beta", "m", "n", "energy", "oracle_energy", "rel_err", "rho_min_shift"])
        .note("spectrum: punctured disk of radius R = rho_max, Dirichlet at R")
        .note("energy unit: hbar^2/(M R^2); energy extrapolated in the puncture radius")
        .note("oracle_energy = j_{|m+beta|,n}^2 / 2; rel_err = |energy - oracle| / energy")
        .note("rho_min_shift = E(rho_min/2) - E(rho_min) on the unextrapolated grid");
    let mut worst_res: f64 = 0.0;
    for e in &res.entries {
        table.push(vec![
            beta.into(),
            e.m.into(),
            e.n.into(),
            e.extrapolated_energy.into(),
            e.oracle_energy.into(),
            e.rel_err.into(),
            e.rho_min_shift.into(),
        ]);
        worst_res = worst_res.max(e.residual / e.energy.abs());
    }
    let mut checks = Vec::new();
    if let Some(err) = res.max_rel_err() {
        checks.push(Check::at_most("max_rel_err", err, SPECTRUM_TOL));
    }
    checks.push(Check { name: "max_relative_residual".into(), value: worst_res, bound: "reported".into(), pass: true });
    Ok(single(cfg.mode, table, checks))
}

fn evolve(cfg: &RunConfig) -> Result<ModeOutput, CliError> {
    let grid = cfg.grid.build()?;
    let p = cfg.packet.as_ref().expect("resolved for evolve");
    let timing = cfg.timing.as_ref().expect("resolved for evolve");
    let m_max = cfg.truncation.m_max;
    let psi0 = gaussian_packet((p.center_rho, p.center_phi), p.sigma, (p.k_rho, p.k_phi), &grid, m_max)?;
    let sectors = build_sectors(SectorRoute::PuncturedPlane, cfg.beta(), m_max, &grid, 1.0, 1.0)?;
    let prop = Propagator::new(sectors, timing.dt)?;
    let mask = if timing.mask_fraction > 0.0 { Some(AbsorbingMask::new(&grid, timing.mask_fraction)?) } else { None };
    let masked = mask.is_some();
    let opts = EvolveOptions { snapshot_every: p.snapshot_every, keep_states: false, mask };
    let t_final = timing.t_final.expect("evolve has a default t_final");
    let traj = prop.evolve(&psi0, t_final, &opts)?;
    let mut table = Table::new(&["step", "time", "norm", "energy"])
        .note("evolve: Crank-Nicolson steps, natural units hbar = M = 1")
        .note("norm = sqrt(sum_m int |psi_m|^2 rho drho); energy = <psi|H|psi>");
    for s in &traj.snapshots {
        table.push(vec![s.step.into(), s.time.into(), s.norm.into(), s.energy.into()]);
    }
    let checks = if masked {
        vec![]
    } else {
        vec![
            Check::at_most("norm_drift", traj.norm_drift(), NORM_DRIFT_TOL),
            Check::at_most("energy_drift", traj.energy_drift(), ENERGY_DRIFT_TOL),
        ]
    };
    Ok(single(cfg.mode, table, checks))
}

fn interfere(cfg: &RunConfig) -> Result<ModeOutput, CliError> {
    let grid = cfg.grid.build()?;
    let e = cfg.experiment.as_ref().expect("resolved for interfere");
    let t = cfg.timing.as_ref().expect("resolved for interfere");
    let geom = ExperimentGeometry {
        launch_radius: e.launch_radius,
        lobe_angle: e.lobe_angle,
        width: e.width,
        momentum: e.momentum,
        detector_radius: e.detector_radius,
        detector_half_angle: e.detector_half_angle,
        detector_samples: e.detector_samples,
        m_max: cfg.truncation.m_max,
        hamiltonian: e.hamiltonian,
    };
    let timing = Timing {
        dt: t.dt,
        t_final: t.t_final,
        mask_fraction: (t.mask_fraction > 0.0).then_some(t.mask_fraction),
    };
    let betas = match &e.sweep {
        Some(s) => sweep_values(s)?,
        None => vec![cfg.beta()],
    };
    let records = interference_sweep(&betas, &geom, &grid, &timing)?;

    let mut table = Table::new(&["beta", "extracted_shift", "contrast"])
        .note("interfere: fringe phase on the detector arc relative to the beta = 0 run")
        .note("extracted_shift in radians, wrapped to (-pi, pi]; contrast = (max - min)/(max + min) within one fringe period of the pattern centroid")
        .note("natural units hbar = M = 1");
    let mut patterns = Table::new(&["beta", "theta", "intensity"])
        .note("detector-arc intensity; theta = phi - pi in radians; intensity in units of 1/length^2");
    for r in &records {
        table.push(vec![r.beta.into(), r.extracted_shift.into(), r.contrast.into()]);
        for (th, i) in r.detector_angles.iter().zip(&r.intensity) {
            patterns.push(vec![r.beta.into(), (*th).into(), (*i).into()]);
        }
    }

    let mut checks = Vec::new();
    if let Some(reference) = records.iter().find(|r| r.beta == 0.0) {
        // second route: complex demodulation of the same patterns
        for r in records.iter().filter(|r| r.beta != 0.0) {
            let d = fringe_phase_demodulated(r, reference)?;
            let gap = wrap_angle(r.extracted_shift - d).abs();
            checks.push(Check::at_most(format!("fit vs demodulation at beta={}", r.beta), gap, HALF_FLUX_TOL));
        }
    }
    if records.len() >= 3 {
        let x: Vec<f64> = records.iter().map(|r| r.beta).collect();
        let y = unwrap_phases(&records.iter().map(|r| r.extracted_shift).collect::<Vec<_>>());
        let (slope, _) = fit_slope(&x, &y)?;
        checks.push(Check::within("shift slope", slope, 2.0 * PI * (1.0 - SLOPE_REL_TOL), 2.0 * PI * (1.0 + SLOPE_REL_TOL)));
    }
    for r in &records {
        if r.beta == 0.5 {
            checks.push(Check::at_most("|shift(0.5) - pi|", wrap_angle(r.extracted_shift - PI).abs(), HALF_FLUX_TOL));
        }
        if r.beta == 1.0 {
            checks.push(Check::at_most("|shift(1.0)|", r.extracted_shift.abs(), HALF_FLUX_TOL));
        }
    }
    Ok(ModeOutput {
        tables: vec![(cfg.mode.stem().to_owned(), table), ("interfere_patterns".to_owned(), patterns)],
        checks,
    })
}
