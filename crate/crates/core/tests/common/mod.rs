#![allow(dead_code)]

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use viscoflow::fluid_model::{MaterialLaw, ReferenceState};
use viscoflow::quasilinear::SystemKind;
use viscoflow::solver::{Boundary, Geometry, Grid1D, InitialProfile, SimulationSetup, SolverOptions};
use viscoflow::stability::Complex64;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Durand-Kerner iteration on the monic polynomial, highest degree first.
pub fn durand_kerner(poly: &[f64]) -> Vec<Complex64> {
    let lead = poly.iter().position(|&c| c != 0.0).expect("nonzero polynomial");
    let p: Vec<f64> = poly[lead..].iter().map(|c| c / poly[lead]).collect();
    let n = p.len() - 1;
    if n == 0 {
        return Vec::new();
    }
    let eval = |z: Complex64| p.iter().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c);
    let radius = 1.0 + p[1..].iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let seed = Complex64::new(0.4, 0.9);
    let mut z: Vec<Complex64> = (0..n).map(|i| seed.powu(i as u32) * radius).collect();
    for _ in 0..2000 {
        let mut delta = 0.0f64;
        for i in 0..n {
            let mut den = Complex64::new(1.0, 0.0);
            for j in 0..n {
                if j != i {
                    den *= z[i] - z[j];
                }
            }
            let step = eval(z[i]) / den;
            z[i] -= step;
            delta = delta.max(step.norm());
        }
        if delta < 1e-15 * radius {
            break;
        }
    }
    z
}

/// Cofactor expansion along the first row.
pub fn laplace_det(m: &[Vec<f64>]) -> f64 {
    let n = m.len();
    match n {
        0 => 1.0,
        1 => m[0][0],
        2 => m[0][0] * m[1][1] - m[0][1] * m[1][0],
        _ => (0..n)
            .filter(|&j| m[0][j] != 0.0)
            .map(|j| {
                let minor: Vec<Vec<f64>> = m[1..]
                    .iter()
                    .map(|row| {
                        row.iter()
                            .enumerate()
                            .filter(|&(c, _)| c != j)
                            .map(|(_, &x)| x)
                            .collect()
                    })
                    .collect();
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                sign * m[0][j] * laplace_det(&minor)
            })
            .sum(),
    }
}

pub fn unit_law() -> MaterialLaw {
    MaterialLaw::constant(1.0, 2.0, 1.0, 1.0, 1.0).unwrap()
}

/// Density bump amplitude giving `max rho0 = 2 sqrt(2/3)` for the breakdown scenario.
pub const BREAKDOWN_DENSITY: f64 = 0.6329931618554521;
/// Radial velocity amplitude giving `F(0) = 1.1` times the certificate threshold.
pub const BREAKDOWN_VELOCITY: f64 = 100.53291095387645;

pub fn breakdown_setup(n_cells: usize) -> SimulationSetup {
    let mut options = SolverOptions::default();
    options.monitor.grad_factor = 10.0;
    SimulationSetup {
        system: SystemKind::Bulk,
        grid: Grid1D::new(Geometry::Spherical, Boundary::Reference, n_cells, 0.0, 2.0).unwrap(),
        law: unit_law(),
        reference: ReferenceState::at_rest(1.0, 1.0),
        profile: InitialProfile {
            density: BREAKDOWN_DENSITY,
            velocity: BREAKDOWN_VELOCITY,
            ..Default::default()
        },
        options,
    }
}

/// A small smooth bump in all fields, contained for `t <= 1`.
pub fn smooth_setup(system: SystemKind, geometry: Geometry, n_cells: usize) -> SimulationSetup {
    let (x_min, x_max, center) = match geometry {
        Geometry::Spherical => (0.0, 4.0, 0.0),
        Geometry::Planar => (-4.0, 4.0, 0.0),
    };
    let profile = InitialProfile {
        density: 0.05,
        velocity: 0.05,
        stress: 0.2,
        transverse: if system == SystemKind::Shear { 0.05 } else { 0.0 },
        center,
        ..Default::default()
    };
    SimulationSetup {
        system,
        grid: Grid1D::new(geometry, Boundary::Reference, n_cells, x_min, x_max).unwrap(),
        law: unit_law(),
        reference: ReferenceState::at_rest(1.0, 1.0),
        profile,
        options: SolverOptions::default(),
    }
}
