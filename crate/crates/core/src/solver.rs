//! Finite-volume method of lines for the 1-D planar and spherically
//! symmetric reductions.
//!
//! Each step is `relax(dt/2) . transport(dt) . relax(dt/2)`. The transport
//! part uses MUSCL reconstruction of primitive variables with a Rusanov flux
//! and an SSP Runge-Kutta integrator; mass and stresses are advanced in
//! divergence form so that their integrals only change through boundary
//! fluxes. The relaxation part solves `tau dPi/dt = Pi_NS - Pi` exactly with
//! the velocity frozen.

use std::f64::consts::PI;

use thiserror::Error;

use crate::diagnostics::{self, BreakdownReport, SeriesSample};
use crate::fluid_model::{BulkState, MaterialLaw, ModelError, ReferenceState, ShearState, StressTensor};
use crate::quasilinear::SystemKind;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Geometry {
    Planar,
    Spherical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    /// Ghost cells hold the reference state (spherical: outer edge only).
    Reference,
    Periodic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Limiter {
    Minmod,
    MonotonizedCentral,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Integrator {
    SspRk2,
    SspRk3,
}

const GHOSTS: usize = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct Grid1D {
    pub geometry: Geometry,
    pub boundary: Boundary,
    pub n_cells: usize,
    pub x_min: f64,
    pub x_max: f64,
    pub dx: f64,
    pub centers: Vec<f64>,
    /// Face areas per unit solid angle (`r^2`), or 1 when planar.
    pub face_area: Vec<f64>,
    /// Cell volumes per unit solid angle (`(r+^3 - r-^3)/3`), or `dx`.
    pub volume: Vec<f64>,
}

impl Grid1D {
    pub fn new(
        geometry: Geometry,
        boundary: Boundary,
        n_cells: usize,
        x_min: f64,
        x_max: f64,
    ) -> Result<Self, SolverError> {
        if n_cells < 4 {
            return Err(SolverError::Config(format!(
                "n_cells must be at least 4, got {n_cells}"
            )));
        }
        if !(x_min.is_finite() && x_max.is_finite() && x_max > x_min) {
            return Err(SolverError::Config(format!("empty domain [{x_min}, {x_max}]")));
        }
        if geometry == Geometry::Spherical {
            if x_min != 0.0 {
                return Err(SolverError::Config("spherical grids start at r = 0".into()));
            }
            if boundary != Boundary::Reference {
                return Err(SolverError::Config(
                    "spherical grids need a reference outer boundary".into(),
                ));
            }
        }
        let dx = (x_max - x_min) / n_cells as f64;
        let face = |f: usize| x_min + dx * f as f64;
        let centers = (0..n_cells).map(|i| x_min + dx * (i as f64 + 0.5)).collect();
        let (face_area, volume) = match geometry {
            Geometry::Planar => (vec![1.0; n_cells + 1], vec![dx; n_cells]),
            Geometry::Spherical => (
                (0..=n_cells).map(|f| face(f) * face(f)).collect(),
                (0..n_cells)
                    .map(|i| (face(i + 1).powi(3) - face(i).powi(3)) / 3.0)
                    .collect(),
            ),
        };
        Ok(Self {
            geometry,
            boundary,
            n_cells,
            x_min,
            x_max,
            dx,
            centers,
            face_area,
            volume,
        })
    }

    /// Quadrature weight of cell `i` for integrals over the physical domain.
    pub fn weight(&self, i: usize) -> f64 {
        match self.geometry {
            Geometry::Planar => self.dx,
            Geometry::Spherical => 4.0 * PI * self.volume[i],
        }
    }
}

pub const RHO: usize = 0;
pub const U: usize = 1;
/// Bulk pressure in the bulk system.
pub const PI_BULK: usize = 2;
pub const V2: usize = 2;
pub const V3: usize = 3;
/// First stress variable in the shear system; slots follow `StressTensor::COMPONENTS`.
pub const STRESS: usize = 4;

/// Cell averages, one array per variable.
#[derive(Debug, Clone, PartialEq)]
pub struct FluidFields {
    pub kind: SystemKind,
    vars: Vec<Vec<f64>>,
}

impl FluidFields {
    pub fn n_vars(kind: SystemKind) -> usize {
        match kind {
            SystemKind::Bulk => 3,
            SystemKind::Shear => 10,
        }
    }

    pub fn uniform(kind: SystemKind, n_cells: usize, reference: &ReferenceState) -> Self {
        let vars = (0..Self::n_vars(kind))
            .map(|v| vec![reference_value(kind, v, reference); n_cells])
            .collect();
        Self { kind, vars }
    }

    pub fn from_vars(kind: SystemKind, vars: Vec<Vec<f64>>) -> Result<Self, SolverError> {
        let n = vars.first().map_or(0, Vec::len);
        if vars.len() != Self::n_vars(kind) || vars.iter().any(|v| v.len() != n) {
            return Err(SolverError::Config("field arrays have inconsistent shapes".into()));
        }
        Ok(Self { kind, vars })
    }

    pub fn n_cells(&self) -> usize {
        self.vars[0].len()
    }

    pub fn var(&self, v: usize) -> &[f64] {
        &self.vars[v]
    }

    pub fn var_mut(&mut self, v: usize) -> &mut [f64] {
        &mut self.vars[v]
    }

    pub fn rho(&self) -> &[f64] {
        &self.vars[RHO]
    }

    pub fn u(&self) -> &[f64] {
        &self.vars[U]
    }

    /// `Pi` for bulk runs, the stress trace for shear runs.
    pub fn trace(&self, i: usize) -> f64 {
        match self.kind {
            SystemKind::Bulk => self.vars[PI_BULK][i],
            SystemKind::Shear => self.vars[STRESS][i] + self.vars[STRESS + 3][i] + self.vars[STRESS + 5][i],
        }
    }

    pub fn bulk_state(&self, i: usize) -> BulkState {
        let pi = match self.kind {
            SystemKind::Bulk => self.vars[PI_BULK][i],
            SystemKind::Shear => self.trace(i) / 3.0,
        };
        BulkState::new(self.vars[RHO][i], self.velocity(i), pi)
    }

    pub fn shear_state(&self, i: usize) -> ShearState {
        let stress = match self.kind {
            SystemKind::Bulk => StressTensor::isotropic(self.vars[PI_BULK][i]),
            SystemKind::Shear => StressTensor::from_components(std::array::from_fn(|s| self.vars[STRESS + s][i])),
        };
        ShearState::new(self.vars[RHO][i], self.velocity(i), stress)
    }

    fn velocity(&self, i: usize) -> [f64; 3] {
        match self.kind {
            SystemKind::Bulk => [self.vars[U][i], 0.0, 0.0],
            SystemKind::Shear => [self.vars[U][i], self.vars[V2][i], self.vars[V3][i]],
        }
    }

    pub fn column_names(kind: SystemKind) -> &'static [&'static str] {
        match kind {
            SystemKind::Bulk => &["rho", "u", "Pi"],
            SystemKind::Shear => &["rho", "u", "v2", "v3", "Pi11", "Pi12", "Pi13", "Pi22", "Pi23", "Pi33"],
        }
    }

    fn axpy_from(&mut self, base: &FluidFields, weight: f64, other: &FluidFields) {
        // self = base + weight * (other - base)
        for ((dst, b), o) in self.vars.iter_mut().zip(&base.vars).zip(&other.vars) {
            for ((d, &bv), &ov) in dst.iter_mut().zip(b).zip(o) {
                *d = bv + weight * (ov - bv);
            }
        }
    }

    fn add_scaled(&mut self, dt: f64, rhs: &[Vec<f64>]) {
        for (dst, r) in self.vars.iter_mut().zip(rhs) {
            for (d, &rv) in dst.iter_mut().zip(r) {
                *d += dt * rv;
            }
        }
    }
}

/// Fastest signal speed of `kind` on the reference state, measured in the rest frame of the reference flow.
pub fn reference_signal_speed(
    kind: SystemKind,
    reference: &ReferenceState,
    law: &MaterialLaw,
) -> Result<f64, ModelError> {
    match kind {
        SystemKind::Bulk => reference.front_speed(law),
        SystemKind::Shear => reference.shear_front_speed(law),
    }
}

fn reference_value(kind: SystemKind, var: usize, r: &ReferenceState) -> f64 {
    match (kind, var) {
        (_, RHO) => r.rho_bar,
        (_, U) => r.v_bar[0],
        (SystemKind::Bulk, PI_BULK) => r.pi_bar,
        (SystemKind::Shear, V2) => r.v_bar[1],
        (SystemKind::Shear, V3) => r.v_bar[2],
        (SystemKind::Shear, v) => {
            let (i, j) = StressTensor::COMPONENTS[v - STRESS];
            if i == j {
                r.pi_bar
            } else {
                0.0
            }
        }
        _ => unreachable!("variable index out of range"),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonitorSettings {
    /// Breakdown when the gradient exceeds `grad_factor * (initial + c_v / R)`.
    pub grad_factor: f64,
    pub dt_floor: f64,
}

impl Default for MonitorSettings {
    fn default() -> Self {
        Self {
            grad_factor: 1e3,
            dt_floor: 1e-12,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub cfl: f64,
    pub limiter: Limiter,
    pub integrator: Integrator,
    /// Density floor relative to `rho_bar`; states at or below it are rejected.
    pub density_floor: f64,
    pub monitor: MonitorSettings,
    /// Cells of slack added to the front radius in the containment check.
    pub front_slack_cells: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            cfl: 0.4,
            limiter: Limiter::Minmod,
            integrator: Integrator::SspRk2,
            density_floor: 1e-12,
            monitor: MonitorSettings::default(),
            front_slack_cells: 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VelocityShape {
    /// `u = b (s) phi(s)`, odd about the centre; the radial profile.
    Radial,
    /// `u = b phi(s)`; planar only.
    Bump,
}

/// Amplitudes of the compactly supported bump `phi(s) = exp(1 - 1/(1 - s^2))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialProfile {
    pub density: f64,
    pub velocity: f64,
    pub stress: f64,
    pub transverse: f64,
    pub velocity_shape: VelocityShape,
    /// Planar centre of the bump.
    pub center: f64,
}

impl Default for InitialProfile {
    fn default() -> Self {
        Self {
            density: 0.0,
            velocity: 0.0,
            stress: 0.0,
            transverse: 0.0,
            velocity_shape: VelocityShape::Radial,
            center: 0.0,
        }
    }
}

/// Smooth bump with support `|s| < 1` and `bump(0) = 1`.
pub fn bump(s: f64) -> f64 {
    if s.abs() < 1.0 {
        (1.0 - 1.0 / (1.0 - s * s)).exp()
    } else {
        0.0
    }
}

#[derive(Debug, Clone)]
pub struct SimulationSetup {
    pub system: SystemKind,
    pub grid: Grid1D,
    pub law: MaterialLaw,
    pub reference: ReferenceState,
    pub profile: InitialProfile,
    pub options: SolverOptions,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BreakdownCause {
    GradientBlowup,
    DtCollapse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepStatus {
    Ok,
    Breakdown(BreakdownCause),
    InvalidState,
}

impl std::fmt::Display for StepStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            StepStatus::Ok => "ok",
            StepStatus::Breakdown(BreakdownCause::GradientBlowup) => "breakdown (gradient blow-up)",
            StepStatus::Breakdown(BreakdownCause::DtCollapse) => "breakdown (time step collapse)",
            StepStatus::InvalidState => "invalid state",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub status: StepStatus,
    pub dt_used: f64,
    pub max_wave_speed: f64,
    pub max_gradient: f64,
    pub max_grad_u: f64,
    pub max_grad_rho: f64,
    /// Largest relative departure from the reference state beyond the front radius.
    pub exterior_deviation: f64,
    /// Which cell and which check failed, when the status is not ok.
    pub detail: String,
}

#[derive(Debug)]
struct StepFailure {
    cell: usize,
    reason: String,
}

pub struct Simulation {
    pub grid: Grid1D,
    pub fields: FluidFields,
    pub law: MaterialLaw,
    pub reference: ReferenceState,
    pub options: SolverOptions,
    pub t: f64,
    pub step_count: usize,
    /// Planar bump centre (0 for spherical runs).
    pub center: f64,
    /// Fastest signal speed on the reference state (`c_v` for bulk runs).
    pub front_speed: f64,
    /// Gradient of the initial data, the baseline for the C^1 monitor.
    pub baseline_gradient: f64,
    pub initial_fields: FluidFields,
}

pub fn init_scenario(setup: &SimulationSetup) -> Result<Simulation, SolverError> {
    let SimulationSetup {
        system,
        grid,
        law,
        reference,
        profile,
        options,
    } = setup;
    if *system == SystemKind::Shear && grid.geometry == Geometry::Spherical {
        return Err(SolverError::Config("shear runs are planar only".into()));
    }
    if grid.geometry == Geometry::Spherical && profile.velocity_shape == VelocityShape::Bump && profile.velocity != 0.0
    {
        return Err(SolverError::Config(
            "a spherical velocity profile must vanish at r = 0; use the radial shape".into(),
        ));
    }
    let center = match grid.geometry {
        Geometry::Planar => profile.center,
        Geometry::Spherical => 0.0,
    };
    let mut fields = FluidFields::uniform(*system, grid.n_cells, reference);
    let radius = reference.radius;
    for (i, &x) in grid.centers.iter().enumerate() {
        let s = (x - center) / radius;
        let phi = bump(s);
        if phi == 0.0 {
            continue;
        }
        let rho = reference.rho_bar + profile.density * phi;
        if !(rho > 0.0) {
            return Err(SolverError::Config(format!(
                "initial density {rho} is not positive at x = {x}"
            )));
        }
        fields.vars[RHO][i] = rho;
        fields.vars[U][i] += profile.velocity
            * match profile.velocity_shape {
                VelocityShape::Radial => s * phi,
                VelocityShape::Bump => phi,
            };
        let pi = reference.pi_bar + profile.stress * phi;
        match system {
            SystemKind::Bulk => fields.vars[PI_BULK][i] = pi,
            SystemKind::Shear => {
                fields.vars[V2][i] += profile.transverse * phi;
                for (slot, &(a, b)) in StressTensor::COMPONENTS.iter().enumerate() {
                    if a == b {
                        fields.vars[STRESS + slot][i] = pi;
                    }
                }
            }
        }
    }
    Simulation::from_fields(grid.clone(), fields, law.clone(), *reference, *options, center)
}

impl Simulation {
    pub fn from_fields(
        grid: Grid1D,
        fields: FluidFields,
        law: MaterialLaw,
        reference: ReferenceState,
        options: SolverOptions,
        center: f64,
    ) -> Result<Self, SolverError> {
        reference.validate()?;
        if fields.n_cells() != grid.n_cells {
            return Err(SolverError::Config("field length does not match the grid".into()));
        }
        if !(options.cfl > 0.0 && options.cfl <= 1.0) {
            return Err(SolverError::Config(format!(
                "cfl must lie in (0, 1], got {}",
                options.cfl
            )));
        }
        let front_speed = reference_signal_speed(fields.kind, &reference, &law)?;
        let mut sim = Self {
            grid,
            initial_fields: fields.clone(),
            fields,
            law,
            reference,
            options,
            t: 0.0,
            step_count: 0,
            center,
            front_speed,
            baseline_gradient: 0.0,
        };
        if let Err(e) = sim.validate_cells() {
            return Err(SolverError::Config(format!(
                "initial state invalid at cell {}: {}",
                e.cell, e.reason
            )));
        }
        if let Err(e) = sim.cell_speeds(&sim.fields) {
            return Err(SolverError::Config(format!(
                "initial state invalid at cell {}: {}",
                e.cell, e.reason
            )));
        }
        let (gu, gr) = diagnostics::gradients(&sim);
        sim.baseline_gradient = gu.0.max(gr.0);
        Ok(sim)
    }

    pub fn kind(&self) -> SystemKind {
        self.fields.kind
    }

    fn density_floor(&self) -> f64 {
        self.options.density_floor * self.reference.rho_bar
    }

    fn validate_cells(&self) -> Result<(), StepFailure> {
        let floor = self.density_floor();
        for i in 0..self.grid.n_cells {
            let res = match self.kind() {
                SystemKind::Bulk => self.fields.bulk_state(i).validate(floor),
                SystemKind::Shear => self.fields.shear_state(i).validate(floor),
            };
            res.map_err(|e| StepFailure {
                cell: i,
                reason: e.to_string(),
            })?;
        }
        Ok(())
    }

    /// `|u| + c_fast` at one point.
    fn point_speed(&self, rho: f64, u: f64, sigma_nn: f64, stress: Option<&StressTensor>) -> Result<f64, String> {
        let cs2 = self.law.sound_speed_squared(rho).map_err(|e| e.to_string())?;
        let (inv, base) = match stress {
            None => (BulkState::new(rho, [u, 0.0, 0.0], sigma_nn).invariants(), 0.0),
            Some(s) => (ShearState::new(rho, [u, 0.0, 0.0], *s).invariants(), 4.0 / 3.0),
        };
        let tr = self.law.eval_transport(inv).map_err(|e| e.to_string())?;
        let zeta_eff = tr.zeta + base * tr.eta + tr.tau * sigma_nn;
        if !(zeta_eff > 0.0) {
            return Err(format!(
                "hyperbolicity lost: effective longitudinal viscosity {zeta_eff}"
            ));
        }
        let c = (cs2 + zeta_eff / (rho * tr.tau)).sqrt();
        let s = u.abs() + c;
        if s.is_finite() {
            Ok(s)
        } else {
            Err(format!("non-finite wave speed {s}"))
        }
    }

    fn cell_speeds(&self, f: &FluidFields) -> Result<Vec<f64>, StepFailure> {
        (0..f.n_cells())
            .map(|i| {
                let r = match f.kind {
                    SystemKind::Bulk => self.point_speed(f.vars[RHO][i], f.vars[U][i], f.vars[PI_BULK][i], None),
                    SystemKind::Shear => {
                        let st = f.shear_state(i);
                        self.point_speed(st.rho, st.v[0], st.stress.get(0, 0), Some(&st.stress))
                    }
                };
                r.map_err(|reason| StepFailure { cell: i, reason })
            })
            .collect()
    }

    /// Largest `|u| + c_fast` over the cells.
    pub fn max_wave_speed(&self) -> Result<f64, String> {
        let s = self
            .cell_speeds(&self.fields)
            .map_err(|e| format!("cell {}: {}", e.cell, e.reason))?;
        Ok(s.into_iter().fold(0.0, f64::max))
    }

    /// `cfl * dx / max(|u| + c_fast)`.
    pub fn cfl_dt(&self) -> Result<f64, String> {
        Ok(self.options.cfl * self.grid.dx / self.max_wave_speed()?)
    }

    /// Ghost-extended copy of one variable.
    fn extend(&self, f: &FluidFields, var: usize) -> Vec<f64> {
        let n = f.n_cells();
        let src = &f.vars[var];
        let mut e = vec![0.0; n + 2 * GHOSTS];
        e[GHOSTS..GHOSTS + n].copy_from_slice(src);
        let reference = reference_value(f.kind, var, &self.reference);
        match (self.grid.geometry, self.grid.boundary) {
            (_, Boundary::Periodic) => {
                for g in 0..GHOSTS {
                    e[g] = src[n - GHOSTS + g];
                    e[n + GHOSTS + g] = src[g];
                }
            }
            (Geometry::Planar, Boundary::Reference) => {
                for g in 0..GHOSTS {
                    e[g] = reference;
                    e[n + GHOSTS + g] = reference;
                }
            }
            (Geometry::Spherical, Boundary::Reference) => {
                let parity = if var == U { -1.0 } else { 1.0 };
                for g in 0..GHOSTS {
                    e[GHOSTS - 1 - g] = parity * src[g];
                    e[n + GHOSTS + g] = reference;
                }
            }
        }
        e
    }

    fn limited_slopes(&self, e: &[f64]) -> Vec<f64> {
        let mut s = vec![0.0; e.len()];
        for j in 1..e.len() - 1 {
            let (l, r) = (e[j] - e[j - 1], e[j + 1] - e[j]);
            s[j] = match self.options.limiter {
                Limiter::Minmod => minmod(l, r),
                Limiter::MonotonizedCentral => {
                    if l * r <= 0.0 {
                        0.0
                    } else {
                        let m = (2.0 * l.abs()).min(2.0 * r.abs()).min(0.5 * (l + r).abs());
                        m * l.signum()
                    }
                }
            };
        }
        s
    }

    /// Spatial operator of the transport part.
    fn transport_rhs(&self, f: &FluidFields) -> Result<Vec<Vec<f64>>, StepFailure> {
        let n = f.n_cells();
        let nv = FluidFields::n_vars(f.kind);
        let ext: Vec<Vec<f64>> = (0..nv).map(|v| self.extend(f, v)).collect();
        let slopes: Vec<Vec<f64>> = ext.iter().map(|e| self.limited_slopes(e)).collect();
        let face_value = |v: usize, face: usize, right: bool| -> f64 {
            if right {
                ext[v][face + GHOSTS] - 0.5 * slopes[v][face + GHOSTS]
            } else {
                ext[v][face + GHOSTS - 1] + 0.5 * slopes[v][face + GHOSTS - 1]
            }
        };

        // Rusanov speeds from the two cells adjacent to each face.
        let mut speed = vec![0.0; n + 2];
        for (j, sp) in speed.iter_mut().enumerate() {
            let k = j + GHOSTS - 1;
            let rho = ext[RHO][k];
            let u = ext[U][k];
            let r = match f.kind {
                SystemKind::Bulk => self.point_speed(rho, u, ext[PI_BULK][k], None),
                SystemKind::Shear => {
                    let st = StressTensor::from_components(std::array::from_fn(|s| ext[STRESS + s][k]));
                    self.point_speed(rho, u, st.get(0, 0), Some(&st))
                }
            };
            *sp = r.map_err(|reason| StepFailure {
                cell: j.saturating_sub(1).min(n - 1),
                reason,
            })?;
        }

        let sigma_var = match f.kind {
            SystemKind::Bulk => PI_BULK,
            SystemKind::Shear => STRESS,
        };
        let mut mass = vec![0.0; n + 1];
        let mut burgers = vec![0.0; n + 1];
        let mut normal_stress = vec![0.0; n + 1];
        let mut u_face = vec![0.0; n + 1];
        let advected: Vec<usize> = match f.kind {
            SystemKind::Bulk => vec![PI_BULK],
            SystemKind::Shear => (V2..STRESS + 6).collect(),
        };
        let mut adv_flux = vec![vec![0.0; n + 1]; nv];
        let mut shear_face = [vec![0.0; n + 1], vec![0.0; n + 1]];

        for face in 0..=n {
            let a = speed[face].max(speed[face + 1]);
            let (rl, rr) = (face_value(RHO, face, false), face_value(RHO, face, true));
            let (ul, ur) = (face_value(U, face, false), face_value(U, face, true));
            let pl = self.law.pressure(rl).map_err(|e| StepFailure {
                cell: face.min(n - 1),
                reason: e.to_string(),
            })?;
            let pr = self.law.pressure(rr).map_err(|e| StepFailure {
                cell: face.min(n - 1),
                reason: e.to_string(),
            })?;
            mass[face] = 0.5 * (rl * ul + rr * ur) - 0.5 * a * (rr - rl);
            burgers[face] = 0.25 * (ul * ul + ur * ur) - 0.5 * a * (ur - ul);
            normal_stress[face] =
                0.5 * (pl + pr) + 0.5 * (face_value(sigma_var, face, false) + face_value(sigma_var, face, true));
            u_face[face] = 0.5 * (ul + ur);
            for &v in &advected {
                let (ql, qr) = (face_value(v, face, false), face_value(v, face, true));
                adv_flux[v][face] = 0.5 * (ul * ql + ur * qr) - 0.5 * a * (qr - ql);
            }
            if f.kind == SystemKind::Shear {
                for (t, comp) in [(0, STRESS + 1), (1, STRESS + 2)] {
                    shear_face[t][face] = 0.5 * (face_value(comp, face, false) + face_value(comp, face, true));
                }
            }
        }

        let g = &self.grid;
        let div = |flux: &[f64], i: usize| (g.face_area[i + 1] * flux[i + 1] - g.face_area[i] * flux[i]) / g.volume[i];
        let mut rhs = vec![vec![0.0; n]; nv];
        for i in 0..n {
            let rho = f.vars[RHO][i];
            rhs[RHO][i] = -div(&mass, i);
            rhs[U][i] =
                -(burgers[i + 1] - burgers[i]) / g.dx - (normal_stress[i + 1] - normal_stress[i]) / (rho * g.dx);
            match f.kind {
                SystemKind::Bulk => rhs[PI_BULK][i] = -div(&adv_flux[PI_BULK], i),
                SystemKind::Shear => {
                    let du = (u_face[i + 1] - u_face[i]) / g.dx;
                    for (t, v) in [(0, V2), (1, V3)] {
                        rhs[v][i] = -(adv_flux[v][i + 1] - adv_flux[v][i]) / g.dx + f.vars[v][i] * du
                            - (shear_face[t][i + 1] - shear_face[t][i]) / (rho * g.dx);
                    }
                    for v in STRESS..STRESS + 6 {
                        rhs[v][i] = -div(&adv_flux[v], i);
                    }
                }
            }
        }
        Ok(rhs)
    }

    /// Exact relaxation of the stresses toward their Navier-Stokes values over `h`.
    fn relax(&self, f: &mut FluidFields, h: f64) -> Result<(), StepFailure> {
        let n = f.n_cells();
        let g = &self.grid;
        let face_avg = |e: &[f64], face: usize| 0.5 * (e[face + GHOSTS - 1] + e[face + GHOSTS]);
        let ue = self.extend(f, U);
        let transverse = match f.kind {
            SystemKind::Bulk => None,
            SystemKind::Shear => Some((self.extend(f, V2), self.extend(f, V3))),
        };
        for i in 0..n {
            let div = (g.face_area[i + 1] * face_avg(&ue, i + 1) - g.face_area[i] * face_avg(&ue, i)) / g.volume[i];
            let fail = |e: ModelError| StepFailure {
                cell: i,
                reason: e.to_string(),
            };
            match f.kind {
                SystemKind::Bulk => {
                    let tr = self.law.eval_transport(f.bulk_state(i).invariants()).map_err(fail)?;
                    let decay = (-h / tr.tau).exp();
                    let target = -tr.zeta * div;
                    let pi = &mut f.vars[PI_BULK][i];
                    *pi = target + (*pi - target) * decay;
                }
                SystemKind::Shear => {
                    let tr = self.law.eval_transport(f.shear_state(i).invariants()).map_err(fail)?;
                    let decay = (-h / tr.tau).exp();
                    let (v2e, v3e) = transverse.as_ref().expect("shear fields carry transverse velocity");
                    let grad = |e: &[f64]| (face_avg(e, i + 1) - face_avg(e, i)) / g.dx;
                    let (dv2, dv3) = (grad(v2e), grad(v3e));
                    let diag = -(tr.zeta - 2.0 * tr.eta / 3.0) * div;
                    let targets = [
                        -(tr.zeta + 4.0 * tr.eta / 3.0) * div,
                        -tr.eta * dv2,
                        -tr.eta * dv3,
                        diag,
                        0.0,
                        diag,
                    ];
                    for (slot, target) in targets.into_iter().enumerate() {
                        let p = &mut f.vars[STRESS + slot][i];
                        *p = target + (*p - target) * decay;
                    }
                }
            }
        }
        Ok(())
    }

    fn check_density(&self, f: &FluidFields) -> Result<(), StepFailure> {
        let floor = self.density_floor();
        match f.vars[RHO].iter().position(|r| !(*r > floor)) {
            Some(cell) => Err(StepFailure {
                cell,
                reason: format!("density {} at or below floor {floor}", f.vars[RHO][cell]),
            }),
            None => Ok(()),
        }
    }

    fn stage(&self, f: &FluidFields, dt: f64) -> Result<FluidFields, StepFailure> {
        let rhs = self.transport_rhs(f)?;
        let mut out = f.clone();
        out.add_scaled(dt, &rhs);
        self.check_density(&out)?;
        Ok(out)
    }

    fn transport(&self, u0: &FluidFields, dt: f64) -> Result<FluidFields, StepFailure> {
        let u1 = self.stage(u0, dt)?;
        let mut next = u0.clone();
        match self.options.integrator {
            Integrator::SspRk2 => {
                let u2 = self.stage(&u1, dt)?;
                next.axpy_from(u0, 0.5, &u2);
            }
            Integrator::SspRk3 => {
                let mut u2 = u0.clone();
                u2.axpy_from(u0, 0.25, &self.stage(&u1, dt)?);
                self.check_density(&u2)?;
                next.axpy_from(u0, 2.0 / 3.0, &self.stage(&u2, dt)?);
            }
        }
        self.check_density(&next)?;
        Ok(next)
    }

    fn advance(&self, dt: f64) -> Result<FluidFields, StepFailure> {
        let mut f = self.fields.clone();
        self.relax(&mut f, 0.5 * dt)?;
        let mut f = self.transport(&f, dt)?;
        self.relax(&mut f, 0.5 * dt)?;
        Ok(f)
    }

    /// One step with the CFL time step.
    pub fn step(&mut self) -> StepOutcome {
        match self.cfl_dt() {
            Ok(dt) => self.step_with_dt(dt),
            Err(detail) => self.failed(StepStatus::InvalidState, 0.0, f64::NAN, detail),
        }
    }

    /// One step of size `dt`. A step producing an invalid state is rolled
    /// back; a breakdown step is kept.
    pub fn step_with_dt(&mut self, dt: f64) -> StepOutcome {
        let max_wave_speed = self.max_wave_speed().unwrap_or(f64::NAN);
        if !(dt >= self.options.monitor.dt_floor) {
            return self.failed(
                StepStatus::Breakdown(BreakdownCause::DtCollapse),
                dt,
                max_wave_speed,
                format!("time step {dt} below floor {}", self.options.monitor.dt_floor),
            );
        }
        let next = match self.advance(dt) {
            Ok(f) => f,
            Err(e) => {
                return self.failed(
                    StepStatus::InvalidState,
                    dt,
                    max_wave_speed,
                    format!("cell {}: {}", e.cell, e.reason),
                )
            }
        };
        let previous = std::mem::replace(&mut self.fields, next);
        if let Err(e) = self
            .validate_cells()
            .and_then(|_| self.cell_speeds(&self.fields).map(|_| ()))
        {
            self.fields = previous;
            return self.failed(
                StepStatus::InvalidState,
                dt,
                max_wave_speed,
                format!("cell {}: {}", e.cell, e.reason),
            );
        }
        self.t += dt;
        self.step_count += 1;

        let c1 = diagnostics::monitor_c1(self);
        let (status, detail) = if c1.breakdown {
            (
                StepStatus::Breakdown(BreakdownCause::GradientBlowup),
                format!(
                    "cell {}: gradient {} exceeds threshold {}",
                    c1.cell, c1.max_grad, c1.threshold
                ),
            )
        } else {
            (StepStatus::Ok, String::new())
        };
        StepOutcome {
            status,
            dt_used: dt,
            max_wave_speed,
            max_gradient: c1.max_grad,
            max_grad_u: c1.max_grad_u,
            max_grad_rho: c1.max_grad_rho,
            exterior_deviation: self.exterior_deviation(),
            detail,
        }
    }

    fn failed(&self, status: StepStatus, dt: f64, max_wave_speed: f64, detail: String) -> StepOutcome {
        let c1 = diagnostics::monitor_c1(self);
        StepOutcome {
            status,
            dt_used: dt,
            max_wave_speed,
            max_gradient: c1.max_grad,
            max_grad_u: c1.max_grad_u,
            max_grad_rho: c1.max_grad_rho,
            exterior_deviation: self.exterior_deviation(),
            detail,
        }
    }

    /// Radius `R + (c + |v_x|) t` plus slack, beyond which the state must equal the reference.
    pub fn front_radius(&self) -> f64 {
        let reach = self.front_speed + self.reference.v_bar[0].abs();
        self.reference.radius + reach * self.t + self.options.front_slack_cells * self.grid.dx
    }

    /// Largest relative departure from the reference state outside the front
    /// radius; zero for periodic runs.
    pub fn exterior_deviation(&self) -> f64 {
        if self.grid.boundary == Boundary::Periodic {
            return 0.0;
        }
        let r = &self.reference;
        let scale_v = self.front_speed;
        let scale_p = r.rho_bar * self.front_speed * self.front_speed;
        let reach = self.front_radius();
        let mut worst: f64 = 0.0;
        for (i, &x) in self.grid.centers.iter().enumerate() {
            if (x - self.center).abs() <= reach {
                continue;
            }
            for v in 0..FluidFields::n_vars(self.kind()) {
                let scale = match v {
                    RHO => r.rho_bar,
                    U => scale_v,
                    _ if self.kind() == SystemKind::Shear && (v == V2 || v == V3) => scale_v,
                    _ => scale_p,
                };
                let d = (self.fields.vars[v][i] - reference_value(self.kind(), v, r)).abs() / scale;
                worst = worst.max(d);
            }
        }
        worst
    }

    /// Snapshot rows `t,cell_center,<variables>`.
    pub fn snapshot_csv(&self) -> String {
        let mut out = String::from("t,cell_center");
        for name in FluidFields::column_names(self.kind()) {
            out.push(',');
            out.push_str(name);
        }
        out.push('\n');
        for (i, x) in self.grid.centers.iter().enumerate() {
            out.push_str(&format!("{:?},{:?}", self.t, x));
            for v in &self.fields.vars {
                out.push_str(&format!(",{:?}", v[i]));
            }
            out.push('\n');
        }
        out
    }
}

fn minmod(a: f64, b: f64) -> f64 {
    if a * b <= 0.0 {
        0.0
    } else if a.abs() < b.abs() {
        a
    } else {
        b
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunControl {
    pub t_end: f64,
    /// Record a series sample every this many steps.
    pub series_cadence: usize,
    pub snapshot_times: Vec<f64>,
    pub max_steps: Option<usize>,
}

impl RunControl {
    pub fn until(t_end: f64) -> Self {
        Self {
            t_end,
            series_cadence: 1,
            snapshot_times: Vec::new(),
            max_steps: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Observation {
    Sample(SeriesSample),
    Snapshot,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub final_outcome: StepOutcome,
    pub report: BreakdownReport,
}

/// Advance to `t_end` or the first non-ok step, sampling diagnostics along
/// the way. The observer sees the state at every sample and snapshot.
pub fn run(
    sim: &mut Simulation,
    control: &RunControl,
    mut observer: impl FnMut(&Simulation, Observation),
) -> Result<RunOutput, SolverError> {
    if !(control.t_end > sim.t) {
        return Err(SolverError::Config(format!(
            "t_end {} must exceed the current time {}",
            control.t_end, sim.t
        )));
    }
    let cadence = control.series_cadence.max(1);
    let mut snapshots: Vec<f64> = control
        .snapshot_times
        .iter()
        .copied()
        .filter(|t| t.is_finite())
        .collect();
    snapshots.sort_by(f64::total_cmp);
    snapshots.dedup();
    let mut stops: Vec<f64> = snapshots
        .iter()
        .copied()
        .filter(|&t| t > sim.t && t < control.t_end)
        .collect();
    stops.push(control.t_end);

    let mut report = BreakdownReport::default();
    let first = diagnostics::sample(sim, 0.0);
    report.push(first);
    observer(sim, Observation::Sample(first));
    if snapshots.iter().any(|&t| t <= sim.t) {
        observer(sim, Observation::Snapshot);
    }

    let mut outcome = StepOutcome {
        status: StepStatus::Ok,
        dt_used: 0.0,
        max_wave_speed: sim.max_wave_speed().unwrap_or(f64::NAN),
        max_gradient: sim.baseline_gradient,
        max_grad_u: 0.0,
        max_grad_rho: 0.0,
        exterior_deviation: sim.exterior_deviation(),
        detail: String::new(),
    };
    let mut next_stop = 0;
    while next_stop < stops.len() {
        if control.max_steps.is_some_and(|m| sim.step_count >= m) {
            break;
        }
        let stop = stops[next_stop];
        let t_before = sim.t;
        let dt_cfl = match sim.cfl_dt() {
            Ok(dt) => dt,
            Err(detail) => {
                outcome = sim.failed(StepStatus::InvalidState, 0.0, f64::NAN, detail);
                report.breakdown_time = Some(sim.t);
                break;
            }
        };
        let hit = stop - t_before <= dt_cfl;
        outcome = if dt_cfl < sim.options.monitor.dt_floor {
            sim.step_with_dt(dt_cfl)
        } else if hit {
            sim.step_with_dt(stop - t_before)
        } else {
            sim.step_with_dt(dt_cfl)
        };
        match outcome.status {
            StepStatus::InvalidState => {
                report.breakdown_time = Some(t_before + outcome.dt_used);
                break;
            }
            StepStatus::Breakdown(BreakdownCause::DtCollapse) => {
                report.breakdown_time = Some(t_before);
                break;
            }
            _ => {}
        }
        if hit {
            sim.t = stop;
        }
        let failed = outcome.status != StepStatus::Ok;
        if hit || failed || sim.step_count.is_multiple_of(cadence) {
            let s = diagnostics::sample(sim, outcome.dt_used);
            report.push(s);
            observer(sim, Observation::Sample(s));
        }
        if hit {
            if snapshots.contains(&stop) {
                observer(sim, Observation::Snapshot);
            }
            next_stop += 1;
        }
        if failed {
            report.breakdown_time = Some(sim.t);
            break;
        }
    }
    report.final_status = Some(outcome.status);
    report.verdict = match outcome.status {
        StepStatus::Ok => format!("smooth through t = {:?}", sim.t),
        s => format!(
            "{s} at t = {:?}: {}",
            report.breakdown_time.unwrap_or(sim.t),
            outcome.detail
        ),
    };
    Ok(RunOutput {
        final_outcome: outcome,
        report,
    })
}
