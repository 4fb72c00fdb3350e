//! Run orchestration for the command line.

mod config;

pub use config::{
    parse_config, parse_law, parse_override, parse_with_overrides, AnalysisConfig, ConfigError, ConfigErrors,
    GridConfig, RunConfig, ScenarioConfig, Tolerances, KEYS,
};

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use thiserror::Error;

use crate::diagnostics::{certificate, BreakdownReport};
use crate::fluid_model::{BulkState, MaterialLaw, ShearState, StressTensor};
use crate::quasilinear::{
    assemble_bulk, assemble_shear, characteristic_speeds_bulk_closed, characteristic_speeds_numeric,
    characteristic_speeds_shear_closed, SpectralOptions, SystemKind,
};
use crate::solver::{
    init_scenario, run, Grid1D, MonitorSettings, Observation, RunControl, SimulationSetup, SolverOptions, StepStatus,
};
use crate::stability::{
    bulk_dispersion, dispersion_sweep, omega_from_x, shear_dispersion, Background, DispersionSystem, StabilityVerdict,
    SweepSpec,
};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subcommand {
    Speeds,
    Stability,
    Dispersion,
    Simulate,
    BlowupCert,
}

impl Subcommand {
    pub fn name(self) -> &'static str {
        match self {
            Subcommand::Speeds => "speeds",
            Subcommand::Stability => "stability",
            Subcommand::Dispersion => "dispersion",
            Subcommand::Simulate => "simulate",
            Subcommand::BlowupCert => "blowup-cert",
        }
    }
}

#[derive(Debug, Error)]
pub enum DispatchError {
    #[error("{0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl DispatchError {
    pub fn exit_code(&self) -> i32 {
        match self {
            DispatchError::Config(_) => 2,
            DispatchError::Numerical(_) | DispatchError::Io(_) => 4,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct DispatchOptions {
    pub out_dir: Option<PathBuf>,
    /// Overrides `analysis.sweep` for `dispersion`.
    pub sweep: Option<SweepSpec>,
    /// Stream the diagnostic series CSV to stdout during `simulate`.
    pub diagnostics: bool,
}

#[derive(Debug, Clone)]
pub struct RunRecord {
    pub subcommand: Subcommand,
    /// Fully resolved config text.
    pub config_echo: String,
    pub outputs: Vec<PathBuf>,
    pub status: String,
    pub exit_code: i32,
    pub wall_time: f64,
    pub version: &'static str,
}

impl RunRecord {
    /// Metadata as comments followed by the resolved config, so the record parses as a config.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# viscoflow {}", self.version);
        let _ = writeln!(s, "# subcommand: {}", self.subcommand.name());
        let _ = writeln!(s, "# status: {}", self.status.replace('\n', " "));
        let _ = writeln!(s, "# exit code: {}", self.exit_code);
        let _ = writeln!(s, "# wall time: {:.3} s", self.wall_time);
        for o in &self.outputs {
            let _ = writeln!(s, "# output: {}", o.display());
        }
        s.push_str(&self.config_echo);
        s
    }
}

fn build_law(cfg: &ScenarioConfig) -> Result<MaterialLaw, DispatchError> {
    let l = &cfg.law;
    MaterialLaw::new(l.amplitude, l.gamma, l.zeta.clone(), l.eta.clone(), l.tau.clone())
        .map_err(|e| DispatchError::Config(e.to_string()))
}

pub fn simulation_setup(cfg: &ScenarioConfig) -> Result<SimulationSetup, DispatchError> {
    let g = &cfg.grid;
    let grid = Grid1D::new(cfg.geometry, cfg.boundary, g.n_cells, g.x_min, g.x_max)
        .map_err(|e| DispatchError::Config(e.to_string()))?;
    let t = &cfg.tolerances;
    Ok(SimulationSetup {
        system: cfg.system,
        grid,
        law: build_law(cfg)?,
        reference: cfg.reference,
        profile: cfg.profile,
        options: SolverOptions {
            cfl: g.cfl,
            limiter: g.limiter,
            integrator: g.integrator,
            density_floor: t.density_floor,
            monitor: MonitorSettings {
                grad_factor: t.grad_factor,
                dt_floor: t.dt_floor,
            },
            front_slack_cells: t.front_slack_cells,
        },
    })
}

struct Sink<'a> {
    out_dir: Option<&'a Path>,
    outputs: Vec<PathBuf>,
}

impl Sink<'_> {
    fn write(&mut self, name: &str, contents: &str) -> Result<(), DispatchError> {
        if let Some(dir) = self.out_dir {
            let path = dir.join(name);
            std::fs::write(&path, contents)?;
            self.outputs.push(path);
        }
        Ok(())
    }
}

/// Runs one subcommand. Human-readable output (or streamed CSV) goes to
/// `stdout`; files go to `options.out_dir` when given.
pub fn dispatch(
    cmd: Subcommand,
    cfg: &ScenarioConfig,
    options: &DispatchOptions,
    stdout: &mut dyn Write,
) -> Result<RunRecord, DispatchError> {
    let start = Instant::now();
    if let Some(dir) = &options.out_dir {
        std::fs::create_dir_all(dir)?;
    }
    let mut sink = Sink {
        out_dir: options.out_dir.as_deref(),
        outputs: Vec::new(),
    };
    let (status, exit_code) = match cmd {
        Subcommand::Speeds => speeds(cfg, &mut sink, stdout)?,
        Subcommand::Stability => stability(cfg, &mut sink, stdout)?,
        Subcommand::Dispersion => dispersion(cfg, options, &mut sink, stdout)?,
        Subcommand::Simulate => simulate(cfg, options, &mut sink, stdout)?,
        Subcommand::BlowupCert => blowup_cert(cfg, stdout)?,
    };
    let mut record = RunRecord {
        subcommand: cmd,
        config_echo: cfg.to_text(),
        outputs: sink.outputs.clone(),
        status,
        exit_code,
        wall_time: start.elapsed().as_secs_f64(),
        version: VERSION,
    };
    if let Some(dir) = &options.out_dir {
        let path = dir.join("run_record.txt");
        record.outputs.push(path.clone());
        std::fs::write(&path, record.to_text())?;
    }
    Ok(record)
}

fn fmt_vec(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:?}")).collect();
    format!("[{}]", parts.join(", "))
}

fn speeds(cfg: &ScenarioConfig, sink: &mut Sink, out: &mut dyn Write) -> Result<(String, i32), DispatchError> {
    let law = build_law(cfg)?;
    let d = cfg.analysis.direction;
    let norm = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
    let n = [d[0] / norm, d[1] / norm, d[2] / norm];
    let r = &cfg.reference;
    let numerical = |e: crate::quasilinear::QuasilinearError| DispatchError::Numerical(e.to_string());
    let (sys, closed) = match cfg.system {
        SystemKind::Bulk => {
            let st = BulkState::new(r.rho_bar, r.v_bar, r.pi_bar);
            (
                assemble_bulk(&st, &law).map_err(numerical)?,
                characteristic_speeds_bulk_closed(&st, &law, &n).map_err(numerical)?,
            )
        }
        SystemKind::Shear => {
            let st = ShearState::new(r.rho_bar, r.v_bar, StressTensor::isotropic(r.pi_bar));
            (
                assemble_shear(&st, &law).map_err(numerical)?,
                characteristic_speeds_shear_closed(&st, &law, &n).map_err(numerical)?,
            )
        }
    };
    let opts = SpectralOptions {
        condition_cap: cfg.tolerances.condition_cap,
        symmetry_tol: cfg.tolerances.symmetry_tol,
    };
    let rep = characteristic_speeds_numeric(&sys, &n, &opts);

    let mut text = String::new();
    let _ = writeln!(
        text,
        "{:<24}{}",
        "system",
        if cfg.system == SystemKind::Bulk {
            "bulk"
        } else {
            "shear"
        }
    );
    let _ = writeln!(text, "{:<24}{}", "direction", fmt_vec(&n));
    let _ = writeln!(text, "{:<24}{}", "verdict", rep.verdict);
    let _ = writeln!(text, "{:<24}{}", "symmetric", rep.symmetric);
    let _ = writeln!(text, "{:<24}{}", "A0 positive definite", rep.a0_posdef);
    let _ = writeln!(text, "{:<24}{:?}", "eigenvector condition", rep.eigenvector_condition);
    let _ = writeln!(text, "{:<24}{}", "closed-form speeds", fmt_vec(&closed));
    let _ = writeln!(text, "{:>24}  {:>12}", "speed", "multiplicity");
    let mut csv = String::from("speed,multiplicity\n");
    for (s, m) in &rep.multiplicities {
        let _ = writeln!(text, "{:>24}  {:>12}", format!("{s:?}"), m);
        let _ = writeln!(csv, "{s:?},{m}");
    }
    out.write_all(text.as_bytes())?;
    sink.write("speeds.csv", &csv)?;
    Ok((format!("ok: {}", rep.verdict), 0))
}

fn write_verdict(text: &mut String, label: &str, v: &StabilityVerdict, shift: f64) {
    let _ = writeln!(text, "[{label}]");
    let _ = writeln!(text, "{:<16}{}", "deltas", fmt_vec(&v.deltas));
    let _ = writeln!(text, "{:<16}{}", "hurwitz stable", v.stable);
    let _ = writeln!(text, "{:<16}{:?}", "classification", v.classification);
    let _ = writeln!(text, "{:<16}{:?}", "max Re x", v.max_real_part);
    for x in &v.roots {
        let w = omega_from_x(*x, shift);
        let _ = writeln!(text, "  x = {:?} {:+?}i    omega = {:?} {:+?}i", x.re, x.im, w.re, w.im);
    }
}

fn stability(cfg: &ScenarioConfig, sink: &mut Sink, out: &mut dyn Write) -> Result<(String, i32), DispatchError> {
    let law = build_law(cfg)?;
    let bg = Background::from_reference(&law, &cfg.reference).map_err(|e| DispatchError::Numerical(e.to_string()))?;
    let k = cfg.analysis.wavevector;
    let band = cfg.tolerances.marginal_band;
    let num = |e: crate::stability::StabilityError| DispatchError::Numerical(e.to_string());
    let mut text = String::new();
    let _ = writeln!(text, "wavevector {}", fmt_vec(&k));
    let mut csv = String::from("factor,re_x,im_x,re_omega,im_omega\n");
    let mut push_roots = |label: &str, v: &StabilityVerdict, shift: f64| {
        for x in &v.roots {
            let w = omega_from_x(*x, shift);
            let _ = writeln!(csv, "{label},{:?},{:?},{:?},{:?}", x.re, x.im, w.re, w.im);
        }
    };
    let stable = match cfg.system {
        SystemKind::Bulk => {
            let p = bulk_dispersion(&bg, &k);
            let v = p.verdict(band).map_err(num)?;
            write_verdict(&mut text, "bulk cubic", &v, p.shift);
            push_roots("bulk", &v, p.shift);
            v.stable
        }
        SystemKind::Shear => {
            let s = shear_dispersion(&bg, &k);
            let v = s.verdict(band).map_err(num)?;
            for (label, f) in [
                ("relaxation", &v.relaxation),
                ("shear", &v.shear),
                ("acoustic", &v.acoustic),
            ] {
                write_verdict(&mut text, label, f, s.shift);
                push_roots(label, f, s.shift);
            }
            v.stable
        }
    };
    let _ = writeln!(text, "verdict {}", if stable { "stable" } else { "not stable" });
    out.write_all(text.as_bytes())?;
    sink.write("stability.csv", &csv)?;
    Ok((format!("ok: {}", if stable { "stable" } else { "not stable" }), 0))
}

/// CSV with one `(Re omega, Im omega)` column pair per branch.
pub fn dispersion_csv(bg: &Background, system: SystemKind, sweep: &SweepSpec) -> Result<String, DispatchError> {
    let sys = match system {
        SystemKind::Bulk => DispersionSystem::Bulk,
        SystemKind::Shear => DispersionSystem::Shear,
    };
    let rows = dispersion_sweep(bg, sys, sweep).map_err(|e| DispatchError::Numerical(e.to_string()))?;
    let branches = rows.first().map_or(0, |r| r.omegas.len());
    let mut csv = String::from("k");
    for b in 1..=branches {
        let _ = write!(csv, ",re_omega_{b},im_omega_{b}");
    }
    csv.push('\n');
    for r in rows {
        let _ = write!(csv, "{:?}", r.k);
        for w in r.omegas {
            let _ = write!(csv, ",{:?},{:?}", w.re, w.im);
        }
        csv.push('\n');
    }
    Ok(csv)
}

fn dispersion(
    cfg: &ScenarioConfig,
    options: &DispatchOptions,
    sink: &mut Sink,
    out: &mut dyn Write,
) -> Result<(String, i32), DispatchError> {
    let law = build_law(cfg)?;
    let bg = Background::from_reference(&law, &cfg.reference).map_err(|e| DispatchError::Numerical(e.to_string()))?;
    let sweep = options.sweep.unwrap_or(cfg.analysis.sweep);
    let csv = dispersion_csv(&bg, cfg.system, &sweep)?;
    if sink.out_dir.is_some() {
        sink.write("dispersion.csv", &csv)?;
    } else {
        out.write_all(csv.as_bytes())?;
    }
    Ok((format!("ok: {} wavenumbers", sweep.count), 0))
}

fn simulate(
    cfg: &ScenarioConfig,
    options: &DispatchOptions,
    sink: &mut Sink,
    out: &mut dyn Write,
) -> Result<(String, i32), DispatchError> {
    let setup = simulation_setup(cfg)?;
    let mut sim = init_scenario(&setup).map_err(|e| DispatchError::Config(e.to_string()))?;
    let control = RunControl {
        t_end: cfg.run.t_end,
        series_cadence: cfg.run.series_cadence,
        snapshot_times: cfg.run.snapshot_times.clone(),
        max_steps: (cfg.run.max_steps > 0).then_some(cfg.run.max_steps),
    };
    let mut io_error: Option<std::io::Error> = None;
    let mut snapshots: Vec<String> = Vec::new();
    let mut worst_exterior: f64 = 0.0;
    if options.diagnostics {
        writeln!(out, "{}", BreakdownReport::CSV_HEADER)?;
    }
    let result = run(&mut sim, &control, |s, o| match o {
        Observation::Sample(sample) => {
            worst_exterior = worst_exterior.max(s.exterior_deviation());
            if options.diagnostics && io_error.is_none() {
                let row = BreakdownReport::csv_row(&sample);
                if let Err(e) = writeln!(out, "{row}") {
                    io_error = Some(e);
                }
            }
        }
        Observation::Snapshot => snapshots.push(s.snapshot_csv()),
    })
    .map_err(|e| DispatchError::Config(e.to_string()))?;
    if let Some(e) = io_error {
        return Err(e.into());
    }
    let report = &result.report;
    sink.write("series.csv", &report.to_csv())?;
    for (i, snap) in snapshots.iter().enumerate() {
        sink.write(&format!("snapshot_{i:03}.csv"), snap)?;
    }
    let final_status = result.final_outcome.status;
    if !options.diagnostics {
        let mut text = String::new();
        let _ = writeln!(text, "{:<20}{}", "status", final_status);
        let _ = writeln!(text, "{:<20}{:?}", "t", sim.t);
        let _ = writeln!(text, "{:<20}{}", "steps", sim.step_count);
        if let Some(tb) = report.breakdown_time {
            let _ = writeln!(text, "{:<20}{:?}", "breakdown time", tb);
        }
        if let Some(last) = report.samples.last() {
            let _ = writeln!(text, "{:<20}{:?}", "F", last.f);
            let _ = writeln!(text, "{:<20}{:?}", "dM", last.dm);
            let _ = writeln!(text, "{:<20}{:?}", "G", last.g);
        }
        let _ = writeln!(text, "{:<20}{}", "verdict", report.verdict);
        out.write_all(text.as_bytes())?;
    }
    match final_status {
        StepStatus::Ok if worst_exterior > cfg.tolerances.exterior_tol => Err(DispatchError::Numerical(format!(
            "front containment violated: exterior deviation {worst_exterior:e} exceeds {:e} \
             (refine the grid or use grid.limiter = mc)",
            cfg.tolerances.exterior_tol
        ))),
        StepStatus::Ok => Ok((report.verdict.clone(), 0)),
        _ => Ok((report.verdict.clone(), 3)),
    }
}

fn blowup_cert(cfg: &ScenarioConfig, out: &mut dyn Write) -> Result<(String, i32), DispatchError> {
    let setup = simulation_setup(cfg)?;
    let sim = init_scenario(&setup).map_err(|e| DispatchError::Config(e.to_string()))?;
    let c = certificate(&sim).map_err(|e| DispatchError::Config(e.to_string()))?;
    let mut text = String::new();
    for (name, value) in [
        ("R", c.radius),
        ("c_v", c.front_speed),
        ("max rho0", c.max_rho0),
        ("threshold", c.threshold),
        ("F0", c.f0),
        ("dM0", c.dm0),
        ("G0", c.g0),
    ] {
        let _ = writeln!(text, "{name:<12}{value:?}");
    }
    let _ = writeln!(text, "{:<12}{}", "satisfied", c.satisfied);
    out.write_all(text.as_bytes())?;
    Ok((
        format!(
            "ok: certificate {}",
            if c.satisfied { "satisfied" } else { "not satisfied" }
        ),
        0,
    ))
}
