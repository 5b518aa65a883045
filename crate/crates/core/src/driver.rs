//! The `solve` pipeline: mesh, assemblies, time loop, output files, and the
//! closing invariant summary.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::config::{make_initial_state, FieldFormat, MeshSource, SimulationConfig};
use crate::diagnostics::{check_energy_v, check_energy_w, check_energy_z, tol_energy, DiagnosticsRecord};
use crate::error::{ConfigError, StepError};
use crate::mesh::{build_structured_mesh, check_weak_acuteness, load_mesh, Mesh};
use crate::output::{write_diagnostics_header, write_diagnostics_row, write_fields_csv, write_fields_vtk};
use crate::scheme::Discretization;
use crate::timeloop::{advance_observed, Event, StepStats};

/// Environment variable that overrides `[output] dir`.
pub const OUT_DIR_ENV: &str = "KSFEM_OUT_DIR";

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_STEP_FAILURE: i32 = 2;
pub const EXIT_INVARIANT: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Step(#[from] StepError),
    #[error("output error: {0}")]
    Io(#[from] io::Error),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => EXIT_CONFIG,
            RunError::Step(StepError::StepFailure { .. }) => EXIT_STEP_FAILURE,
            RunError::Step(_) => EXIT_CONFIG,
            RunError::Io(_) => EXIT_IO,
        }
    }
}

#[derive(Debug, Clone)]
pub struct InvariantCheck {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub checks: Vec<InvariantCheck>,
    pub stats: StepStats,
    pub v_max: f64,
    pub out_dir: PathBuf,
    pub field_files: Vec<PathBuf>,
}

impl RunSummary {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn exit_code(&self) -> i32 {
        if self.all_pass() {
            EXIT_OK
        } else {
            EXIT_INVARIANT
        }
    }
}

pub fn build_mesh(source: &MeshSource) -> Result<Mesh, ConfigError> {
    match source {
        MeshSource::Structured { n, domain } => build_structured_mesh(*n, *domain),
        MeshSource::File(p) => load_mesh(p),
    }
    .map_err(|e| ConfigError::Invalid(format!("mesh: {e}")))
}

/// Output directory: the environment override if set, else the configured one.
pub fn resolve_out_dir(config: &SimulationConfig) -> PathBuf {
    std::env::var_os(OUT_DIR_ENV).map(PathBuf::from).unwrap_or_else(|| config.output.dir.clone())
}

/// Runs a validated configuration, writing `diagnostics.csv` and field
/// snapshots into `out_dir`.
pub fn run(config: &SimulationConfig, out_dir: &Path) -> Result<RunSummary, RunError> {
    config.validate()?;
    let mesh = build_mesh(&config.mesh)?;
    let disc = Discretization::new(mesh, config.scheme).map_err(|e| ConfigError::Invalid(e.to_string()))?;
    let acute = check_weak_acuteness(&disc.stiffness, config.scheme.tol_acute);
    let initial = make_initial_state(config, &disc.mesh)?;

    fs::create_dir_all(out_dir)?;
    let mut diag = BufWriter::new(File::create(out_dir.join("diagnostics.csv"))?);
    write_diagnostics_header(&mut diag)?;

    let v_max0 = initial.v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut records: Vec<DiagnosticsRecord> = Vec::new();
    let mut field_files = Vec::new();
    let mut io_error: Option<io::Error> = None;
    let ext = match config.output.format {
        FieldFormat::Csv => "csv",
        FieldFormat::Vtk => "vtk",
    };

    let result = advance_observed(initial, &config.control, &disc, config.output.every, |ev| {
        if io_error.is_some() {
            return;
        }
        let res = match ev {
            Event::Step { record, .. } => {
                records.push(*record);
                write_diagnostics_row(&mut diag, record)
            }
            Event::Output { state } => {
                let path = out_dir.join(format!("fields_{:04}.{ext}", field_files.len()));
                let res = File::create(&path).and_then(|f| {
                    let mut w = BufWriter::new(f);
                    match config.output.format {
                        FieldFormat::Csv => write_fields_csv(&mut w, &disc.mesh, state, v_max0)?,
                        FieldFormat::Vtk => write_fields_vtk(&mut w, &disc.mesh, state, v_max0)?,
                    }
                    w.flush()
                });
                field_files.push(path);
                res
            }
        };
        if let Err(e) = res {
            io_error = Some(e);
        }
    });
    // flush what was written even when the run failed
    diag.flush()?;
    if let Some(e) = io_error {
        return Err(e.into());
    }
    let (stats, v_max) = result?;

    let checks = invariant_checks(&records, v_max, config.control.dt_max, acute.pass, acute.violations.len());
    Ok(RunSummary { checks, stats, v_max, out_dir: out_dir.to_path_buf(), field_files })
}

/// Pass/fail checks over the per-step records of a run.
pub fn invariant_checks(
    records: &[DiagnosticsRecord],
    v_max: f64,
    dt_max: f64,
    acute: bool,
    acute_violations: usize,
) -> Vec<InvariantCheck> {
    let first = records.first().copied().unwrap_or_default();
    let last = records.last().copied().unwrap_or_default();
    let mass0 = first.mass_u;

    let min_u = records.iter().map(|r| r.min_u).fold(f64::INFINITY, f64::min);
    let min_v = records.iter().map(|r| r.min_v).fold(f64::INFINITY, f64::min);
    let max_v = records.iter().map(|r| r.max_v).fold(f64::NEG_INFINITY, f64::max);
    let mass_dev = records.iter().map(|r| (r.mass_u - mass0).abs()).fold(0.0, f64::max);
    let v_increase = records
        .windows(2)
        .map(|w| (w[1].l1_v - w[0].l1_v) / w[0].l1_v.max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max);

    let tol = tol_energy(last.t, dt_max, mass0);
    let (ev, ew, ez) = (check_energy_v(records), check_energy_w(records), check_energy_z(records));

    let c = |name, pass, detail| InvariantCheck { name, pass, detail };
    vec![
        c("u nonnegative", min_u >= 0.0, format!("min u = {min_u:e}")),
        c("v positive", min_v > 0.0, format!("min v = {min_v:e}")),
        c("v below Vmax", max_v <= v_max * (1.0 + 1e-12), format!("max v = {max_v:e}, Vmax = {v_max:e}")),
        c(
            "mass of u conserved",
            mass_dev <= 1e-9 * mass0.max(f64::MIN_POSITIVE),
            format!("max |mass - mass0| = {mass_dev:e}, mass0 = {mass0:e}"),
        ),
        c("L1 norm of v nonincreasing", v_increase <= 1e-12, format!("max relative increase {v_increase:e}")),
        c("v energy", ev <= tol, format!("residual {ev:e}, tol {tol:e}")),
        c("w energy", ew <= tol, format!("residual {ew:e}, tol {tol:e}")),
        c("log(1+u) gradient bound", ez <= 0.0, format!("residual {ez:e}")),
        c("mesh weakly acute", acute, format!("{acute_violations} positive off-diagonal entries")),
    ]
}

pub fn print_summary(out: &mut impl Write, summary: &RunSummary) -> io::Result<()> {
    let s = &summary.stats;
    writeln!(
        out,
        "steps accepted {} rejected {}, dt in [{:e}, {:e}], clamped mass {:e}",
        s.accepted, s.rejected, s.min_dt, s.max_dt, s.clamped_mass
    )?;
    for c in &summary.checks {
        writeln!(out, "{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail)?;
    }
    writeln!(out, "outputs in {}", summary.out_dir.display())
}
