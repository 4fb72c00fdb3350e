//! Ring-down comparison between the dispersion roots and the nonlinear solver
//! in its linear regime.

use std::f64::consts::PI;

use super::{bulk_dispersion, poly_roots, shear_dispersion, Background, Complex64, StabilityError};
use crate::fluid_model::{MaterialLaw, ReferenceState};
use crate::quasilinear::SystemKind;
use crate::solver::{
    run, Boundary, FluidFields, Geometry, Grid1D, Observation, RunControl, Simulation, SolverOptions, PI_BULK, RHO,
    STRESS, U, V2,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerificationMode {
    /// Bulk system, acoustic branch, density signal.
    BulkLongitudinal,
    /// Shear system, transverse velocity signal.
    ShearTransverse,
    /// Shear system, acoustic branch, density signal.
    ShearLongitudinal,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerificationSettings {
    pub cells: usize,
    /// Density (or velocity) amplitude relative to `rho0` (or `c_s`).
    pub amplitude: f64,
    /// Run length; defaults to four e-folding times of the seeded root, at least two periods.
    pub duration: Option<f64>,
    /// Relative tolerance on decay rate and frequency.
    pub tolerance: f64,
    /// Upper bound on the rms residual of the log-amplitude fit.
    pub max_residual: f64,
    pub options: SolverOptions,
}

impl Default for VerificationSettings {
    fn default() -> Self {
        Self {
            cells: 512,
            amplitude: 1e-6,
            duration: None,
            tolerance: 0.02,
            max_residual: 0.05,
            options: SolverOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRecord {
    pub mode: VerificationMode,
    pub k: f64,
    /// Seeded root of the dispersion polynomial, in `x = -i Omega`.
    pub root: Complex64,
    /// Predicted and fitted `-Re x` (positive for decay).
    pub predicted_decay: f64,
    pub fitted_decay: f64,
    /// Predicted and fitted `|Im x|`, in the frame of the background flow.
    pub predicted_frequency: f64,
    pub fitted_frequency: f64,
    pub decay_error: f64,
    pub frequency_error: f64,
    pub residual: f64,
    pub samples: usize,
    pub passed: bool,
}

fn law_for(bg: &Background) -> Result<MaterialLaw, StabilityError> {
    let gamma = 2.0;
    let amplitude = bg.cs * bg.cs / (gamma * bg.rho0);
    Ok(MaterialLaw::constant(amplitude, gamma, bg.zeta, bg.eta, bg.tau)?)
}

fn least_damped(roots: &[Complex64]) -> Complex64 {
    let mut best = roots[0];
    for &r in roots {
        if r.re > best.re + 1e-12 || ((r.re - best.re).abs() <= 1e-12 && r.im > best.im) {
            best = r;
        }
    }
    best
}

/// Runs a periodic plane wave seeded on the least-damped root of the
/// relevant factor and fits decay rate and frequency of its Fourier
/// coefficient at `k`.
pub fn verify_against_simulation(
    background: &Background,
    k: f64,
    mode: VerificationMode,
    settings: &VerificationSettings,
) -> Result<ComparisonRecord, StabilityError> {
    if !(k > 0.0 && k.is_finite()) {
        return Err(StabilityError::Simulation(format!(
            "wavenumber must be positive, got {k}"
        )));
    }
    let bg = *background;
    let law = law_for(&bg)?;
    let kv = [k, 0.0, 0.0];
    let poly = match mode {
        VerificationMode::BulkLongitudinal => bulk_dispersion(&bg, &kv).poly,
        VerificationMode::ShearTransverse => shear_dispersion(&bg, &kv).shear.poly,
        VerificationMode::ShearLongitudinal => shear_dispersion(&bg, &kv).acoustic.poly,
    };
    let root = least_damped(&poly_roots(&poly)?.roots);

    let length = 2.0 * PI / k;
    let kind = match mode {
        VerificationMode::BulkLongitudinal => SystemKind::Bulk,
        _ => SystemKind::Shear,
    };
    let grid = Grid1D::new(Geometry::Planar, Boundary::Periodic, settings.cells, 0.0, length)
        .map_err(|e| StabilityError::Simulation(e.to_string()))?;
    let mut reference = ReferenceState::at_rest(bg.rho0, length);
    reference.v_bar = bg.v0;
    let mut fields = FluidFields::uniform(kind, settings.cells, &reference);

    let ik = Complex64::new(0.0, k);
    let one = Complex64::new(1.0, 0.0);
    let relax = one + root * bg.tau;
    let drho = -ik * bg.rho0 / root;
    // (variable, complex amplitude per unit velocity)
    let mut shape: Vec<(usize, Complex64)> = Vec::new();
    let signal_var = match mode {
        VerificationMode::BulkLongitudinal => {
            shape.extend([(RHO, drho), (U, one), (PI_BULK, -ik * bg.zeta / relax)]);
            RHO
        }
        VerificationMode::ShearLongitudinal => {
            let diag = -ik * (bg.zeta - 2.0 * bg.eta / 3.0) / relax;
            shape.extend([
                (RHO, drho),
                (U, one),
                (STRESS, -ik * (bg.zeta + 4.0 * bg.eta / 3.0) / relax),
                (STRESS + 3, diag),
                (STRESS + 5, diag),
            ]);
            RHO
        }
        VerificationMode::ShearTransverse => {
            shape.extend([(V2, one), (STRESS + 1, -ik * bg.eta / relax)]);
            V2
        }
    };
    let signal_scale = if signal_var == RHO {
        bg.rho0 / drho.norm()
    } else {
        bg.cs
    };
    let amp = settings.amplitude * signal_scale;
    for (var, c) in &shape {
        let base = fields.var(*var).to_vec();
        for ((dst, x), b) in fields.var_mut(*var).iter_mut().zip(&grid.centers).zip(base) {
            let phase = Complex64::new(0.0, k * x).exp();
            *dst = b + amp * (c * phase).re;
        }
    }

    let mut sim = Simulation::from_fields(grid, fields, law, reference, settings.options, 0.0)
        .map_err(|e| StabilityError::Simulation(e.to_string()))?;
    let duration = settings.duration.unwrap_or_else(|| {
        let efold = if root.re < 0.0 { 4.0 / -root.re } else { 4.0 };
        let period = if root.im != 0.0 {
            2.0 * 2.0 * PI / root.im.abs()
        } else {
            0.0
        };
        efold.max(period)
    });
    let mut signal: Vec<(f64, Complex64)> = Vec::new();
    let coefficient = |s: &Simulation| -> Complex64 {
        let base = s.reference.rho_bar * f64::from(u8::from(signal_var == RHO));
        s.fields
            .var(signal_var)
            .iter()
            .zip(&s.grid.centers)
            .map(|(f, x)| (f - base) * Complex64::new(0.0, -k * x).exp() * s.grid.dx)
            .sum()
    };
    let control = RunControl::until(duration);
    let out = run(&mut sim, &control, |s, o| {
        if let Observation::Sample(_) = o {
            signal.push((s.t, coefficient(s)));
        }
    })
    .map_err(|e| StabilityError::Simulation(e.to_string()))?;
    if out.final_outcome.status != crate::solver::StepStatus::Ok {
        return Err(StabilityError::Simulation(out.report.verdict));
    }

    let (decay_slope, residual) = linear_fit(signal.iter().map(|(t, c)| (*t, c.norm().ln())));
    let mut unwrapped = Vec::with_capacity(signal.len());
    let mut offset = 0.0;
    let mut last = f64::NAN;
    for (t, c) in &signal {
        let a = c.arg();
        if last.is_finite() {
            let d = a - last;
            if d > PI {
                offset -= 2.0 * PI;
            } else if d < -PI {
                offset += 2.0 * PI;
            }
        }
        last = a;
        unwrapped.push((*t, a + offset));
    }
    let (phase_slope, _) = linear_fit(unwrapped.into_iter());
    if !(residual <= settings.max_residual) {
        return Err(StabilityError::Fit(format!(
            "log-amplitude residual {residual:.3e} exceeds {:.3e} over {} samples",
            settings.max_residual,
            signal.len()
        )));
    }

    // lab-frame phase advance carries -k v0 from the background flow
    let fitted_frequency = (phase_slope + k * bg.v0[0]).abs();
    let fitted_decay = -decay_slope;
    let predicted_decay = -root.re;
    let predicted_frequency = root.im.abs();
    let scale = root.norm();
    let rel = |a: f64, b: f64| {
        if b.abs() > 1e-12 * scale {
            (a - b).abs() / b.abs()
        } else {
            (a - b).abs() / scale
        }
    };
    let decay_error = rel(fitted_decay, predicted_decay);
    let frequency_error = rel(fitted_frequency, predicted_frequency);
    Ok(ComparisonRecord {
        mode,
        k,
        root,
        predicted_decay,
        fitted_decay,
        predicted_frequency,
        fitted_frequency,
        decay_error,
        frequency_error,
        residual,
        samples: signal.len(),
        passed: decay_error <= settings.tolerance && frequency_error <= settings.tolerance,
    })
}

/// Least-squares slope and rms residual.
fn linear_fit(points: impl Iterator<Item = (f64, f64)>) -> (f64, f64) {
    let pts: Vec<(f64, f64)> = points.collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let ss: f64 = pts.iter().map(|p| (p.1 - my - slope * (p.0 - mx)).powi(2)).sum();
    (slope, (ss / n).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fit_recovers_line() {
        let (s, r) = linear_fit((0..10).map(|i| (i as f64, 2.0 - 0.5 * i as f64)));
        assert!((s + 0.5).abs() < 1e-14);
        assert!(r < 1e-14);
    }

    #[test]
    fn least_damped_prefers_positive_frequency() {
        let roots = [
            Complex64::new(-0.2, -1.0),
            Complex64::new(-0.5, 0.0),
            Complex64::new(-0.2, 1.0),
        ];
        assert_eq!(least_damped(&roots), Complex64::new(-0.2, 1.0));
    }

    #[test]
    fn shear_transverse_ring_down() {
        let settings = VerificationSettings {
            cells: 256,
            ..Default::default()
        };
        let rec =
            verify_against_simulation(&Background::unit(), 1.0, VerificationMode::ShearTransverse, &settings).unwrap();
        assert!(rec.passed, "{rec:?}");
    }
}
