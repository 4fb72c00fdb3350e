//! Integral functionals, the blow-up certificate and the C^1 monitor.

use std::f64::consts::PI;

use thiserror::Error;

use crate::solver::{Geometry, Simulation, StepStatus};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiagnosticsError {
    #[error("certificate refused: {0}")]
    CertificateRefused(String),
    #[error("insufficient data: {0} smooth samples, need at least 10")]
    InsufficientData(usize),
}

/// Position relative to the bump centre (the radius when spherical).
fn lever(sim: &Simulation, i: usize) -> f64 {
    sim.grid.centers[i] - sim.center
}

/// `F = int x . rho v`: `4 pi int r^3 rho u dr` when spherical, `int (x - x0) rho u dx` when planar.
pub fn sideris_f(sim: &Simulation) -> f64 {
    let (rho, u) = (sim.fields.rho(), sim.fields.u());
    (0..sim.grid.n_cells)
        .map(|i| sim.grid.weight(i) * lever(sim, i) * rho[i] * u[i])
        .sum()
}

/// Signed Richardson estimate of the quadrature error in `F`, from merging cell pairs.
pub fn sideris_f_error(sim: &Simulation) -> f64 {
    let (rho, u) = (sim.fields.rho(), sim.fields.u());
    let g = &sim.grid;
    let mut coarse = 0.0;
    let mut i = 0;
    while i < g.n_cells {
        let j = (i + 1).min(g.n_cells - 1);
        if j == i {
            coarse += g.weight(i) * lever(sim, i) * rho[i] * u[i];
            break;
        }
        let (wi, wj) = (g.weight(i), g.weight(j));
        let w = wi + wj;
        let r = (wi * rho[i] + wj * rho[j]) / w;
        let v = (wi * u[i] + wj * u[j]) / w;
        let x = 0.5 * (lever(sim, i) + lever(sim, j));
        coarse += w * x * r * v;
        i += 2;
    }
    (sideris_f(sim) - coarse) / 3.0
}

/// `Delta M = int (rho - rho_bar)`.
pub fn relative_mass(sim: &Simulation) -> f64 {
    let rho_bar = sim.reference.rho_bar;
    sim.fields
        .rho()
        .iter()
        .enumerate()
        .map(|(i, r)| sim.grid.weight(i) * (r - rho_bar))
        .sum()
}

/// `G = int Pi` for bulk runs, `int Pi^i_i` for shear runs.
pub fn bulk_g(sim: &Simulation) -> f64 {
    (0..sim.grid.n_cells)
        .map(|i| sim.grid.weight(i) * sim.fields.trace(i))
        .sum()
}

/// Largest one-sided differences of `u` and `rho`, with the cell where each occurs.
pub fn gradients(sim: &Simulation) -> ((f64, usize), (f64, usize)) {
    let dx = sim.grid.dx;
    let max_diff = |a: &[f64]| {
        let mut best = (0.0, 0);
        let n = a.len();
        let pairs = if sim.grid.boundary == crate::solver::Boundary::Periodic {
            n
        } else {
            n - 1
        };
        for i in 0..pairs {
            let d = (a[(i + 1) % n] - a[i]).abs() / dx;
            if d > best.0 || d.is_nan() {
                best = (d, i);
            }
        }
        best
    };
    (max_diff(sim.fields.u()), max_diff(sim.fields.rho()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct C1Status {
    pub max_grad_u: f64,
    pub max_grad_rho: f64,
    pub max_grad: f64,
    /// Cell at which the larger gradient sits.
    pub cell: usize,
    pub threshold: f64,
    pub breakdown: bool,
}

/// Breakdown when `max_grad > grad_factor * (initial max_grad + c_v / R)`.
pub fn monitor_c1(sim: &Simulation) -> C1Status {
    let ((gu, cu), (gr, cr)) = gradients(sim);
    let (max_grad, cell) = if gu >= gr { (gu, cu) } else { (gr, cr) };
    let threshold = sim.options.monitor.grad_factor * (sim.baseline_gradient + sim.front_speed / sim.reference.radius);
    C1Status {
        max_grad_u: gu,
        max_grad_rho: gr,
        max_grad,
        cell,
        threshold,
        breakdown: !(max_grad <= threshold),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesSample {
    pub t: f64,
    pub dt: f64,
    pub f: f64,
    pub dm: f64,
    pub g: f64,
    pub max_grad_u: f64,
    pub max_grad_rho: f64,
    pub f_error: f64,
}

pub fn sample(sim: &Simulation, dt: f64) -> SeriesSample {
    let ((gu, _), (gr, _)) = gradients(sim);
    SeriesSample {
        t: sim.t,
        dt,
        f: sideris_f(sim),
        dm: relative_mass(sim),
        g: bulk_g(sim),
        max_grad_u: gu,
        max_grad_rho: gr,
        f_error: sideris_f_error(sim),
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BreakdownReport {
    pub samples: Vec<SeriesSample>,
    pub breakdown_time: Option<f64>,
    pub final_status: Option<StepStatus>,
    pub verdict: String,
}

impl BreakdownReport {
    /// Appends a sample; samples not later than the last one are dropped.
    pub fn push(&mut self, s: SeriesSample) {
        if self.samples.last().is_none_or(|last| s.t > last.t) {
            self.samples.push(s);
        }
    }

    /// Samples strictly before the breakdown time.
    pub fn smooth_phase(&self) -> &[SeriesSample] {
        match self.breakdown_time {
            None => &self.samples,
            Some(tb) => {
                let end = self
                    .samples
                    .iter()
                    .position(|s| s.t >= tb)
                    .unwrap_or(self.samples.len());
                &self.samples[..end]
            }
        }
    }

    pub const CSV_HEADER: &'static str = "t,dt,F,dM,G,max_grad_u,max_grad_rho";

    pub fn csv_row(s: &SeriesSample) -> String {
        format!(
            "{:?},{:?},{:?},{:?},{:?},{:?},{:?}",
            s.t, s.dt, s.f, s.dm, s.g, s.max_grad_u, s.max_grad_rho
        )
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for s in &self.samples {
            out.push_str(&Self::csv_row(s));
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SiderisCertificate {
    pub radius: f64,
    pub front_speed: f64,
    pub max_rho0: f64,
    /// `(16 pi / 3) c_v R^4 max rho0`.
    pub threshold: f64,
    pub f0: f64,
    pub dm0: f64,
    pub g0: f64,
    pub satisfied: bool,
}

pub fn certificate_threshold(front_speed: f64, radius: f64, max_rho0: f64) -> f64 {
    16.0 * PI / 3.0 * front_speed * radius.powi(4) * max_rho0
}

/// Checks the finite-lifespan criterion on the current state of `sim`.
pub fn certificate(sim: &Simulation) -> Result<SiderisCertificate, DiagnosticsError> {
    let refuse = |m: &str| Err(DiagnosticsError::CertificateRefused(m.to_string()));
    if sim.grid.geometry != Geometry::Spherical {
        return refuse("planar geometry");
    }
    if !sim.law.has_constant_coefficients() {
        return refuse("transport coefficients depend on the state");
    }
    let r = &sim.reference;
    if r.pi_bar != 0.0 || r.v_bar != [0.0; 3] {
        return refuse("reference state must be at rest with zero viscous pressure");
    }
    let reference = crate::solver::FluidFields::uniform(sim.kind(), 1, r);
    for (i, &x) in sim.grid.centers.iter().enumerate() {
        if x < r.radius {
            continue;
        }
        for v in 0..crate::solver::FluidFields::n_vars(sim.kind()) {
            if sim.fields.var(v)[i] != reference.var(v)[0] {
                return refuse(&format!("initial data differ from the reference state at r = {x}"));
            }
        }
    }
    let max_rho0 = sim.fields.rho().iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let threshold = certificate_threshold(sim.front_speed, r.radius, max_rho0);
    let (f0, dm0, g0) = (sideris_f(sim), relative_mass(sim), bulk_g(sim));
    Ok(SiderisCertificate {
        radius: r.radius,
        front_speed: sim.front_speed,
        max_rho0,
        threshold,
        f0,
        dm0,
        g0,
        satisfied: dm0 >= 0.0 && g0 >= 0.0 && f0 > threshold,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthMargin {
    pub t: f64,
    pub margin: f64,
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GrowthCheck {
    pub margins: Vec<GrowthMargin>,
    /// Fraction of intervals with `margin >= -tol`.
    pub fraction_ok: f64,
    pub f_monotone: bool,
}

/// Compares the discrete growth of `F` with `F^2 / ((4 pi / 3) (R + c_v t)^5 max rho0)`
/// over the smooth part of the series.
pub fn check_growth(report: &BreakdownReport, cert: &SiderisCertificate) -> Result<GrowthCheck, DiagnosticsError> {
    let s = report.smooth_phase();
    if s.len() < 10 {
        return Err(DiagnosticsError::InsufficientData(s.len()));
    }
    let rate: Vec<f64> = s.windows(2).map(|w| (w[1].f - w[0].f) / (w[1].t - w[0].t)).collect();
    let mut margins = Vec::with_capacity(rate.len());
    for (n, &d) in rate.iter().enumerate() {
        let (a, b) = (&s[n], &s[n + 1]);
        let ball = 4.0 * PI / 3.0 * (cert.radius + cert.front_speed * a.t).powi(5) * cert.max_rho0;
        let q = a.f * a.f / ball;
        let neighbour = if n > 0 {
            rate[n - 1]
        } else {
            rate.get(1).copied().unwrap_or(d)
        };
        let time_err = (d - neighbour).abs();
        let quad_err =
            (b.f_error - a.f_error).abs() / (b.t - a.t) + 2.0 * a.f_error.abs() / a.f.abs().max(f64::MIN_POSITIVE) * q;
        margins.push(GrowthMargin {
            t: a.t,
            margin: d - q,
            tol: time_err + quad_err,
        });
    }
    let ok = margins.iter().filter(|m| m.margin >= -m.tol).count();
    Ok(GrowthCheck {
        fraction_ok: ok as f64 / margins.len() as f64,
        f_monotone: s.windows(2).all(|w| w[1].f >= w[0].f),
        margins,
    })
}
