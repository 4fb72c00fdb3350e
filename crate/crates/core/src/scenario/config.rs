//! Line-oriented scenario configuration.
//!
//! ```text
//! # comment
//! system = bulk            # bare keys resolve to their unique section
//! [material]
//! gamma = 2.0
//! zeta = power(1.0, 0.5)
//! grid.n_cells = 1024      # dotted keys work anywhere
//! ```

use std::collections::HashMap;
use std::fmt::{self, Write as _};

use crate::fluid_model::{Invariants, MaterialLaw, ReferenceState, TransportLaw, Vec3};
use crate::quasilinear::SystemKind;
use crate::solver::{reference_signal_speed, Boundary, Geometry, InitialProfile, Integrator, Limiter, VelocityShape};
use crate::stability::SweepSpec;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    /// 1-based line in the config text; `None` for overrides and defaults.
    pub line: Option<usize>,
    pub key: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}: {}", self.key, self.message),
            None if self.key.is_empty() => f.write_str(&self.message),
            None => write!(f, "{}: {}", self.key, self.message),
        }
    }
}

/// Every problem found in one config, in line order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigErrors(pub Vec<ConfigError>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_char('\n')?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

#[derive(Debug, Clone, PartialEq)]
pub struct GridConfig {
    pub n_cells: usize,
    pub x_min: f64,
    pub x_max: f64,
    pub cfl: f64,
    pub limiter: Limiter,
    pub integrator: Integrator,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub t_end: f64,
    pub snapshot_times: Vec<f64>,
    pub series_cadence: usize,
    pub deterministic: bool,
    /// 0 means unlimited.
    pub max_steps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisConfig {
    /// Direction for `speeds`; normalised before use.
    pub direction: Vec3,
    /// Wavevector for `stability`.
    pub wavevector: Vec3,
    pub sweep: SweepSpec,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tolerances {
    pub marginal_band: f64,
    pub condition_cap: f64,
    pub symmetry_tol: f64,
    pub density_floor: f64,
    pub grad_factor: f64,
    pub dt_floor: f64,
    pub front_slack_cells: f64,
    pub exterior_tol: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub system: SystemKind,
    pub geometry: Geometry,
    pub boundary: Boundary,
    pub law: MaterialLaw,
    pub reference: ReferenceState,
    pub profile: InitialProfile,
    pub grid: GridConfig,
    pub run: RunConfig,
    pub analysis: AnalysisConfig,
    pub tolerances: Tolerances,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        let one = TransportLaw::Constant(1.0);
        Self {
            system: SystemKind::Bulk,
            geometry: Geometry::Spherical,
            boundary: Boundary::Reference,
            law: MaterialLaw {
                amplitude: 1.0,
                gamma: 2.0,
                zeta: one.clone(),
                eta: one.clone(),
                tau: one,
            },
            reference: ReferenceState::at_rest(1.0, 1.0),
            profile: InitialProfile::default(),
            grid: GridConfig {
                n_cells: 512,
                x_min: 0.0,
                x_max: 4.0,
                cfl: 0.4,
                limiter: Limiter::Minmod,
                integrator: Integrator::SspRk2,
            },
            run: RunConfig {
                t_end: 1.0,
                snapshot_times: Vec::new(),
                series_cadence: 1,
                deterministic: true,
                max_steps: 0,
            },
            analysis: AnalysisConfig {
                direction: [1.0, 0.0, 0.0],
                wavevector: [1.0, 0.0, 0.0],
                sweep: SweepSpec {
                    k_min: 0.0,
                    k_max: 5.0,
                    count: 51,
                },
            },
            tolerances: Tolerances {
                marginal_band: 1e-9,
                condition_cap: 1e8,
                symmetry_tol: 1e-12,
                density_floor: 1e-12,
                grad_factor: 1e3,
                dt_floor: 1e-12,
                front_slack_cells: 2.0,
                exterior_tol: 1e-8,
            },
        }
    }
}

/// Every accepted key, in print order.
pub const KEYS: &[&str] = &[
    "model.system",
    "model.geometry",
    "model.boundary",
    "material.A",
    "material.gamma",
    "material.zeta",
    "material.eta",
    "material.tau",
    "reference.rho_bar",
    "reference.pi_bar",
    "reference.v_bar",
    "reference.R",
    "profile.density",
    "profile.velocity",
    "profile.stress",
    "profile.transverse",
    "profile.velocity_shape",
    "profile.center",
    "grid.n_cells",
    "grid.x_min",
    "grid.x_max",
    "grid.cfl",
    "grid.limiter",
    "grid.integrator",
    "run.t_end",
    "run.snapshot_times",
    "run.series_cadence",
    "run.deterministic",
    "run.max_steps",
    "analysis.direction",
    "analysis.wavevector",
    "analysis.sweep",
    "tolerances.marginal_band",
    "tolerances.condition_cap",
    "tolerances.symmetry_tol",
    "tolerances.density_floor",
    "tolerances.grad_factor",
    "tolerances.dt_floor",
    "tolerances.front_slack_cells",
    "tolerances.exterior_tol",
];

fn resolve_key(section: Option<&str>, key: &str) -> Option<&'static str> {
    let find = |full: &str| KEYS.iter().copied().find(|k| *k == full);
    if key.contains('.') {
        return find(key);
    }
    match section {
        Some(s) => find(&format!("{s}.{key}")),
        None => {
            let mut hits = KEYS.iter().copied().filter(|k| k.rsplit('.').next() == Some(key));
            let first = hits.next()?;
            hits.next().is_none().then_some(first)
        }
    }
}

fn parse_f64(v: &str) -> Result<f64, String> {
    let x: f64 = v.parse().map_err(|_| format!("expected a number, got '{v}'"))?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(format!("expected a finite number, got '{v}'"))
    }
}

fn parse_usize(v: &str) -> Result<usize, String> {
    v.parse()
        .map_err(|_| format!("expected a non-negative integer, got '{v}'"))
}

fn parse_bool(v: &str) -> Result<bool, String> {
    match v {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(format!("expected true or false, got '{v}'")),
    }
}

fn parse_list(v: &str) -> Result<Vec<f64>, String> {
    if v.trim().is_empty() {
        return Ok(Vec::new());
    }
    v.split(',').map(|p| parse_f64(p.trim())).collect()
}

fn parse_vec3(v: &str) -> Result<Vec3, String> {
    let l = parse_list(v)?;
    <[f64; 3]>::try_from(l).map_err(|_| format!("expected three comma-separated numbers, got '{v}'"))
}

fn parse_enum<T: Copy>(v: &str, options: &[(&str, T)]) -> Result<T, String> {
    options
        .iter()
        .find(|(name, _)| *name == v)
        .map(|(_, t)| *t)
        .ok_or_else(|| {
            let names: Vec<&str> = options.iter().map(|(n, _)| *n).collect();
            format!("expected one of {}, got '{v}'", names.join(" | "))
        })
}

const SYSTEMS: &[(&str, SystemKind)] = &[("bulk", SystemKind::Bulk), ("shear", SystemKind::Shear)];
const GEOMETRIES: &[(&str, Geometry)] = &[("planar", Geometry::Planar), ("spherical", Geometry::Spherical)];
const BOUNDARIES: &[(&str, Boundary)] = &[("reference", Boundary::Reference), ("periodic", Boundary::Periodic)];
const SHAPES: &[(&str, VelocityShape)] = &[("radial", VelocityShape::Radial), ("bump", VelocityShape::Bump)];
const LIMITERS: &[(&str, Limiter)] = &[("minmod", Limiter::Minmod), ("mc", Limiter::MonotonizedCentral)];
const INTEGRATORS: &[(&str, Integrator)] = &[("rk2", Integrator::SspRk2), ("rk3", Integrator::SspRk3)];

fn name_of<T: PartialEq + Copy>(t: T, options: &[(&'static str, T)]) -> &'static str {
    options.iter().find(|(_, x)| *x == t).map(|(n, _)| *n).unwrap_or("?")
}

/// Parses a transport law: a number, `power(scale, exponent)`,
/// `bulk-saturating(scale, stiffness)` or `stress-saturating(scale, stiffness)`.
pub fn parse_law(text: &str) -> Result<TransportLaw, String> {
    let t = text.trim();
    if let Some(open) = t.find('(') {
        let name = t[..open].trim();
        let args = t[open + 1..]
            .strip_suffix(')')
            .ok_or_else(|| format!("unclosed parenthesis in '{t}'"))?;
        let a = parse_list(args)?;
        let [p, q] = <[f64; 2]>::try_from(a).map_err(|_| format!("'{name}' takes two arguments"))?;
        return match name {
            "power" => Ok(TransportLaw::Power { scale: p, exponent: q }),
            "bulk-saturating" => Ok(TransportLaw::BulkSaturating { scale: p, stiffness: q }),
            "stress-saturating" => Ok(TransportLaw::StressSaturating { scale: p, stiffness: q }),
            _ => Err(format!("unknown law '{name}'")),
        };
    }
    parse_f64(t).map(TransportLaw::Constant)
}

/// Splits `key=value`.
pub fn parse_override(text: &str) -> Result<(String, String), ConfigError> {
    let (k, v) = text.split_once('=').ok_or_else(|| ConfigError {
        line: None,
        key: text.trim().to_string(),
        message: "expected key=value".into(),
    })?;
    Ok((k.trim().to_string(), v.trim().to_string()))
}

impl ScenarioConfig {
    fn set(&mut self, key: &str, v: &str) -> Result<(), String> {
        let law = &mut self.law;
        match key {
            "model.system" => self.system = parse_enum(v, SYSTEMS)?,
            "model.geometry" => self.geometry = parse_enum(v, GEOMETRIES)?,
            "model.boundary" => self.boundary = parse_enum(v, BOUNDARIES)?,
            "material.A" => law.amplitude = parse_f64(v)?,
            "material.gamma" => law.gamma = parse_f64(v)?,
            "material.zeta" => law.zeta = parse_law(v)?,
            "material.eta" => law.eta = parse_law(v)?,
            "material.tau" => law.tau = parse_law(v)?,
            "reference.rho_bar" => self.reference.rho_bar = parse_f64(v)?,
            "reference.pi_bar" => self.reference.pi_bar = parse_f64(v)?,
            "reference.v_bar" => self.reference.v_bar = parse_vec3(v)?,
            "reference.R" => self.reference.radius = parse_f64(v)?,
            "profile.density" => self.profile.density = parse_f64(v)?,
            "profile.velocity" => self.profile.velocity = parse_f64(v)?,
            "profile.stress" => self.profile.stress = parse_f64(v)?,
            "profile.transverse" => self.profile.transverse = parse_f64(v)?,
            "profile.velocity_shape" => self.profile.velocity_shape = parse_enum(v, SHAPES)?,
            "profile.center" => self.profile.center = parse_f64(v)?,
            "grid.n_cells" => self.grid.n_cells = parse_usize(v)?,
            "grid.x_min" => self.grid.x_min = parse_f64(v)?,
            "grid.x_max" => self.grid.x_max = parse_f64(v)?,
            "grid.cfl" => self.grid.cfl = parse_f64(v)?,
            "grid.limiter" => self.grid.limiter = parse_enum(v, LIMITERS)?,
            "grid.integrator" => self.grid.integrator = parse_enum(v, INTEGRATORS)?,
            "run.t_end" => self.run.t_end = parse_f64(v)?,
            "run.snapshot_times" => self.run.snapshot_times = parse_list(v)?,
            "run.series_cadence" => self.run.series_cadence = parse_usize(v)?,
            "run.deterministic" => self.run.deterministic = parse_bool(v)?,
            "run.max_steps" => self.run.max_steps = parse_usize(v)?,
            "analysis.direction" => self.analysis.direction = parse_vec3(v)?,
            "analysis.wavevector" => self.analysis.wavevector = parse_vec3(v)?,
            "analysis.sweep" => self.analysis.sweep = SweepSpec::parse(v).map_err(|e| e.to_string())?,
            "tolerances.marginal_band" => self.tolerances.marginal_band = parse_f64(v)?,
            "tolerances.condition_cap" => self.tolerances.condition_cap = parse_f64(v)?,
            "tolerances.symmetry_tol" => self.tolerances.symmetry_tol = parse_f64(v)?,
            "tolerances.density_floor" => self.tolerances.density_floor = parse_f64(v)?,
            "tolerances.grad_factor" => self.tolerances.grad_factor = parse_f64(v)?,
            "tolerances.dt_floor" => self.tolerances.dt_floor = parse_f64(v)?,
            "tolerances.front_slack_cells" => self.tolerances.front_slack_cells = parse_f64(v)?,
            "tolerances.exterior_tol" => self.tolerances.exterior_tol = parse_f64(v)?,
            _ => return Err("unknown key".into()),
        }
        Ok(())
    }

    fn get(&self, key: &str) -> String {
        let f = |x: f64| format!("{x:?}");
        let list = |v: &[f64]| v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(", ");
        match key {
            "model.system" => name_of(self.system, SYSTEMS).into(),
            "model.geometry" => name_of(self.geometry, GEOMETRIES).into(),
            "model.boundary" => name_of(self.boundary, BOUNDARIES).into(),
            "material.A" => f(self.law.amplitude),
            "material.gamma" => f(self.law.gamma),
            "material.zeta" => self.law.zeta.to_string(),
            "material.eta" => self.law.eta.to_string(),
            "material.tau" => self.law.tau.to_string(),
            "reference.rho_bar" => f(self.reference.rho_bar),
            "reference.pi_bar" => f(self.reference.pi_bar),
            "reference.v_bar" => list(&self.reference.v_bar),
            "reference.R" => f(self.reference.radius),
            "profile.density" => f(self.profile.density),
            "profile.velocity" => f(self.profile.velocity),
            "profile.stress" => f(self.profile.stress),
            "profile.transverse" => f(self.profile.transverse),
            "profile.velocity_shape" => name_of(self.profile.velocity_shape, SHAPES).into(),
            "profile.center" => f(self.profile.center),
            "grid.n_cells" => self.grid.n_cells.to_string(),
            "grid.x_min" => f(self.grid.x_min),
            "grid.x_max" => f(self.grid.x_max),
            "grid.cfl" => f(self.grid.cfl),
            "grid.limiter" => name_of(self.grid.limiter, LIMITERS).into(),
            "grid.integrator" => name_of(self.grid.integrator, INTEGRATORS).into(),
            "run.t_end" => f(self.run.t_end),
            "run.snapshot_times" => list(&self.run.snapshot_times),
            "run.series_cadence" => self.run.series_cadence.to_string(),
            "run.deterministic" => self.run.deterministic.to_string(),
            "run.max_steps" => self.run.max_steps.to_string(),
            "analysis.direction" => list(&self.analysis.direction),
            "analysis.wavevector" => list(&self.analysis.wavevector),
            "analysis.sweep" => self.analysis.sweep.to_string(),
            "tolerances.marginal_band" => f(self.tolerances.marginal_band),
            "tolerances.condition_cap" => f(self.tolerances.condition_cap),
            "tolerances.symmetry_tol" => f(self.tolerances.symmetry_tol),
            "tolerances.density_floor" => f(self.tolerances.density_floor),
            "tolerances.grad_factor" => f(self.tolerances.grad_factor),
            "tolerances.dt_floor" => f(self.tolerances.dt_floor),
            "tolerances.front_slack_cells" => f(self.tolerances.front_slack_cells),
            "tolerances.exterior_tol" => f(self.tolerances.exterior_tol),
            _ => unreachable!("key table and printer disagree on {key}"),
        }
    }

    /// Canonical text with every key spelled out; parses back to `self`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut section = "";
        for key in KEYS {
            let (s, name) = key.split_once('.').expect("keys are dotted");
            if s != section {
                if !section.is_empty() {
                    out.push('\n');
                }
                let _ = writeln!(out, "[{s}]");
                section = s;
            }
            let line = format!("{name} = {}", self.get(key));
            let _ = writeln!(out, "{}", line.trim_end());
        }
        out
    }
}

#[derive(Debug, Default)]
struct Origins(HashMap<&'static str, usize>);

impl Origins {
    fn line(&self, key: &str) -> Option<usize> {
        self.0.get(key).copied()
    }
}

/// Parses and validates a config, reporting every problem found.
pub fn parse_config(text: &str) -> Result<ScenarioConfig, ConfigErrors> {
    parse_with_overrides(text, &[])
}

/// Parses `text`, applies `key=value` overrides on top, then validates.
pub fn parse_with_overrides(text: &str, overrides: &[String]) -> Result<ScenarioConfig, ConfigErrors> {
    let mut cfg = ScenarioConfig::default();
    let mut errors = Vec::new();
    let mut origins = Origins::default();
    let mut section: Option<String> = None;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            match rest.strip_suffix(']') {
                Some(name) if KEYS.iter().any(|k| k.split('.').next() == Some(name.trim())) => {
                    section = Some(name.trim().to_string());
                }
                _ => errors.push(ConfigError {
                    line: Some(line_no),
                    key: line.into(),
                    message: "unknown section".into(),
                }),
            }
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            errors.push(ConfigError {
                line: Some(line_no),
                key: line.into(),
                message: "expected key = value".into(),
            });
            continue;
        };
        let (k, v) = (k.trim(), v.trim());
        let Some(key) = resolve_key(section.as_deref(), k) else {
            errors.push(ConfigError {
                line: Some(line_no),
                key: k.into(),
                message: "unknown key".into(),
            });
            continue;
        };
        if let Some(prev) = origins.line(key) {
            errors.push(ConfigError {
                line: Some(line_no),
                key: key.into(),
                message: format!("duplicate key, first set on line {prev}"),
            });
            continue;
        }
        match cfg.set(key, v) {
            Ok(()) => {
                origins.0.insert(key, line_no);
            }
            Err(message) => errors.push(ConfigError {
                line: Some(line_no),
                key: key.into(),
                message,
            }),
        }
    }

    for o in overrides {
        let (k, v) = match parse_override(o) {
            Ok(kv) => kv,
            Err(e) => {
                errors.push(e);
                continue;
            }
        };
        let Some(key) = resolve_key(None, &k) else {
            errors.push(ConfigError {
                line: None,
                key: k,
                message: "unknown key in override".into(),
            });
            continue;
        };
        origins.0.remove(key);
        if let Err(message) = cfg.set(key, &v) {
            errors.push(ConfigError {
                line: None,
                key: key.into(),
                message,
            });
        }
    }

    for (key, message) in cfg.constraint_violations() {
        errors.push(ConfigError {
            line: origins.line(key),
            key: key.into(),
            message,
        });
    }
    if errors.is_empty() {
        Ok(cfg)
    } else {
        errors.sort_by_key(|e| e.line.unwrap_or(usize::MAX));
        Err(ConfigErrors(errors))
    }
}

impl ScenarioConfig {
    /// Physical and numerical constraints, as `(key, message)` pairs.
    pub fn constraint_violations(&self) -> Vec<(&'static str, String)> {
        let mut v: Vec<(&'static str, String)> = Vec::new();
        fn need(v: &mut Vec<(&'static str, String)>, ok: bool, key: &'static str, msg: String) {
            if !ok {
                v.push((key, msg));
            }
        }
        let law = &self.law;
        need(&mut v, law.amplitude > 0.0, "material.A", "A must be positive".into());
        need(&mut v, law.gamma > 1.0, "material.gamma", "gamma must exceed 1".into());
        let r = &self.reference;
        need(
            &mut v,
            r.rho_bar > 0.0,
            "reference.rho_bar",
            "rho_bar must be positive".into(),
        );
        need(&mut v, r.radius > 0.0, "reference.R", "R must be positive".into());
        if r.rho_bar > 0.0 {
            let inv = Invariants {
                rho: r.rho_bar,
                pi: r.pi_bar,
                pi_contracted: 3.0 * r.pi_bar * r.pi_bar,
            };
            for (key, name, l) in [
                ("material.zeta", "zeta", &law.zeta),
                ("material.eta", "eta", &law.eta),
                ("material.tau", "tau", &law.tau),
            ] {
                let x = l.eval(inv);
                need(
                    &mut v,
                    x.is_finite() && x > 0.0,
                    key,
                    format!("{name} must be positive on the reference state, got {x}"),
                );
            }
        }
        need(
            &mut v,
            !(self.system == SystemKind::Shear && self.geometry == Geometry::Spherical),
            "model.geometry",
            "unsupported combination: shear runs are planar only".into(),
        );
        if self.geometry == Geometry::Spherical {
            need(
                &mut v,
                self.boundary == Boundary::Reference,
                "model.boundary",
                "spherical runs need the reference boundary".into(),
            );
            need(
                &mut v,
                self.grid.x_min == 0.0,
                "grid.x_min",
                "spherical grids start at x_min = 0".into(),
            );
            need(
                &mut v,
                !(self.profile.velocity_shape == VelocityShape::Bump && self.profile.velocity != 0.0),
                "profile.velocity_shape",
                "spherical velocity must vanish at r = 0; use radial".into(),
            );
        }
        let g = &self.grid;
        need(
            &mut v,
            g.n_cells >= 4,
            "grid.n_cells",
            "n_cells must be at least 4".into(),
        );
        need(
            &mut v,
            g.x_max > g.x_min,
            "grid.x_max",
            "x_max must exceed x_min".into(),
        );
        need(
            &mut v,
            g.cfl > 0.0 && g.cfl <= 1.0,
            "grid.cfl",
            "cfl must lie in (0, 1]".into(),
        );
        let run = &self.run;
        need(&mut v, run.t_end > 0.0, "run.t_end", "t_end must be positive".into());
        need(
            &mut v,
            run.series_cadence >= 1,
            "run.series_cadence",
            "series_cadence must be at least 1".into(),
        );
        need(
            &mut v,
            run.snapshot_times.iter().all(|&t| (0.0..=run.t_end).contains(&t)),
            "run.snapshot_times",
            "snapshot times must lie in [0, t_end]".into(),
        );
        need(
            &mut v,
            r.rho_bar + self.profile.density > 0.0,
            "profile.density",
            "initial density must stay positive".into(),
        );
        need(
            &mut v,
            self.analysis.direction != [0.0; 3],
            "analysis.direction",
            "direction must be nonzero".into(),
        );
        let t = &self.tolerances;
        for (key, x) in [
            ("tolerances.marginal_band", t.marginal_band),
            ("tolerances.condition_cap", t.condition_cap),
            ("tolerances.symmetry_tol", t.symmetry_tol),
            ("tolerances.density_floor", t.density_floor),
            ("tolerances.grad_factor", t.grad_factor),
            ("tolerances.dt_floor", t.dt_floor),
            ("tolerances.exterior_tol", t.exterior_tol),
        ] {
            need(&mut v, x > 0.0, key, "tolerance must be positive".into());
        }
        need(
            &mut v,
            t.front_slack_cells >= 0.0,
            "tolerances.front_slack_cells",
            "slack must be non-negative".into(),
        );

        if v.is_empty() && self.boundary == Boundary::Reference {
            if let Ok(law) = MaterialLaw::new(
                law.amplitude,
                law.gamma,
                law.zeta.clone(),
                law.eta.clone(),
                law.tau.clone(),
            ) {
                if let Ok(c) = reference_signal_speed(self.system, r, &law) {
                    let reach = r.radius + (c + r.v_bar[0].abs()) * run.t_end;
                    let center = match self.geometry {
                        Geometry::Spherical => 0.0,
                        Geometry::Planar => self.profile.center,
                    };
                    need(
                        &mut v,
                        self.geometry == Geometry::Spherical || center - reach > g.x_min,
                        "grid.x_min",
                        format!(
                            "front {center:?} - (R + c t_end) = {:?} is not contained in the domain",
                            center - reach
                        ),
                    );
                    need(
                        &mut v,
                        center + reach < g.x_max,
                        "grid.x_max",
                        format!(
                            "front {center:?} + R + c t_end = {:?} is not contained in the domain",
                            center + reach
                        ),
                    );
                }
            }
        }
        v
    }
}
