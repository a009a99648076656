//! `abflux` command line: runs one mode from a JSON config and writes the
//! data table(s), `manifest.json`, and on numeric failure `diagnostic.json`.

mod config;
mod error;
mod modes;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use config::{ConfigFile, Format, Mode, Overrides, RunConfig};
use error::CliError;
use output::{write_json, Check};

#[derive(Parser)]
#[command(name = "abflux", version, about = "Flux and puncture numerics: algebra checks, spectra, evolution, interference")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Jacobi identity, momentum-map brackets and commutator residuals.
    AlgebraCheck(RunArgs),
    /// Flux Hamiltonian vs punctured-plane Hamiltonian, sector by sector.
    Equivalence(RunArgs),
    /// Disk spectrum against the Bessel-zero oracle.
    Spectrum(RunArgs),
    /// Crank-Nicolson evolution of a Gaussian packet.
    Evolve(RunArgs),
    /// Two-lobe interference and fringe-shift extraction.
    Interfere(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON config file; unknown keys are rejected.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (default `out`).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[command(flatten)]
    overrides: Overrides,
}

impl Command {
    fn split(self) -> (Mode, RunArgs) {
        match self {
            Command::AlgebraCheck(a) => (Mode::AlgebraCheck, a),
            Command::Equivalence(a) => (Mode::Equivalence, a),
            Command::Spectrum(a) => (Mode::Spectrum, a),
            Command::Evolve(a) => (Mode::Evolve, a),
            Command::Interfere(a) => (Mode::Interfere, a),
        }
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    mode: &'static str,
    status: &'static str,
    config: &'a RunConfig,
    units: Units,
    outputs: Vec<String>,
    checks: &'a [Check],
    all_checks_pass: bool,
    wall_time_s: f64,
}

#[derive(Serialize)]
struct Units {
    internal: &'static str,
    energy: String,
    /// Value of the energy unit for the configured ħ, M and length unit.
    energy_unit_value: f64,
    length: String,
    phase: &'static str,
}

#[derive(Serialize)]
struct Diagnostic<'a> {
    mode: &'static str,
    status: &'static str,
    kind: &'static str,
    message: String,
    exit_code: i32,
    config: &'a RunConfig,
}

fn units(cfg: &RunConfig) -> Units {
    let (energy, length, scale) = if cfg.mode == Mode::Spectrum {
        ("hbar^2/(M R^2)".to_owned(), format!("R = rho_max = {}", cfg.grid.rho_max), cfg.grid.rho_max)
    } else {
        ("hbar^2/(M L^2)".to_owned(), "L = 1 (grid coordinates as given)".to_owned(), 1.0)
    };
    Units {
        internal: "hbar = M = 1",
        energy,
        energy_unit_value: cfg.hbar * cfg.hbar / (cfg.mass * scale * scale),
        length,
        phase: "radians",
    }
}

fn file_name(p: &Path) -> String {
    p.file_name().map_or_else(String::new, |s| s.to_string_lossy().into_owned())
}

fn execute(cfg: &RunConfig) -> Result<(), CliError> {
    let started = Instant::now();
    std::fs::create_dir_all(&cfg.output.dir)?;
    let out = match modes::run(cfg) {
        Ok(o) => o,
        Err(e) => {
            if e.exit_code() == 2 {
                let diag = Diagnostic {
                    mode: cfg.mode.name(),
                    status: "failed",
                    kind: e.kind(),
                    message: e.to_string(),
                    exit_code: 2,
                    config: cfg,
                };
                write_json(&cfg.output.dir.join("diagnostic.json"), &diag)?;
            }
            return Err(e);
        }
    };
    let mut outputs = Vec::new();
    for (stem, table) in &out.tables {
        outputs.push(file_name(&table.write(&cfg.output.dir, stem, cfg.output.format)?));
    }
    let manifest = Manifest {
        tool: "abflux",
        version: env!("CARGO_PKG_VERSION"),
        mode: cfg.mode.name(),
        status: "ok",
        config: cfg,
        units: units(cfg),
        outputs,
        checks: &out.checks,
        all_checks_pass: out.checks.iter().all(|c| c.pass),
        wall_time_s: started.elapsed().as_secs_f64(),
    };
    write_json(&cfg.output.dir.join("manifest.json"), &manifest)?;
    for c in &out.checks {
        eprintln!("{} {}: {:e} ({})", if c.pass { "ok  " } else { "FAIL" }, c.name, c.value, c.bound);
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let (mode, args) = cli.command.split();
    let file = match &args.config {
        Some(path) => config::read_config_file(path),
        None => Ok(ConfigFile::default()),
    };
    let result = file
        .and_then(|f| config::resolve(mode, f, &args.overrides, args.out, args.format))
        .and_then(|cfg| execute(&cfg));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
