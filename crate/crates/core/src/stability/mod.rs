//! Linear stability of the uniform equilibrium.
//!
//! Plane waves `exp(-i omega t + i k.x)` around `(rho0, v0, Pi = 0)` give
//! polynomials in `x = -i Omega`, `Omega = omega - v0.k`. A mode decays iff
//! `Re x < 0`. Stability is decided twice: by Hurwitz determinants and by
//! the roots themselves.

mod verify;

pub use verify::{verify_against_simulation, ComparisonRecord, VerificationMode, VerificationSettings};

use nalgebra::{Complex, DMatrix};
use rayon::prelude::*;
use thiserror::Error;

use crate::fluid_model::{dot, Invariants, MaterialLaw, ModelError, ReferenceState, Vec3};
use crate::quasilinear::general_eigenvalues;

pub type Complex64 = Complex<f64>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StabilityError {
    #[error("polynomial has no nonzero coefficient")]
    ZeroPolynomial,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("invalid sweep '{0}': expected kmin:kmax:n with n >= 1 and finite bounds")]
    Sweep(String),
    #[error("signal fit failed: {0}")]
    Fit(String),
    #[error("simulation failed: {0}")]
    Simulation(String),
    #[error("companion eigenvalue iteration did not converge")]
    NoConvergence,
}

/// Equilibrium coefficients the linearisation is taken around.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Background {
    pub rho0: f64,
    pub cs: f64,
    pub zeta: f64,
    pub eta: f64,
    pub tau: f64,
    pub v0: Vec3,
}

impl Background {
    /// `rho0 = c_s = zeta = eta = tau = 1`, at rest.
    pub fn unit() -> Self {
        Self {
            rho0: 1.0,
            cs: 1.0,
            zeta: 1.0,
            eta: 1.0,
            tau: 1.0,
            v0: [0.0; 3],
        }
    }

    pub fn from_reference(law: &MaterialLaw, reference: &ReferenceState) -> Result<Self, StabilityError> {
        let rho0 = reference.rho_bar;
        let cs = law.sound_speed(rho0)?;
        let tr = law.eval_transport(Invariants::equilibrium(rho0))?;
        Ok(Self {
            rho0,
            cs,
            zeta: tr.zeta,
            eta: tr.eta,
            tau: tr.tau,
            v0: reference.v_bar,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DispersionProblem {
    pub k: Vec3,
    pub background: Background,
    /// Coefficients in `x = -i Omega`, highest degree first.
    pub poly: Vec<f64>,
    /// `v0.k`, so that `omega = Omega + shift`.
    pub shift: f64,
}

impl DispersionProblem {
    pub fn verdict(&self, marginal_band: f64) -> Result<StabilityVerdict, StabilityError> {
        routh_hurwitz(&self.poly, marginal_band)
    }

    /// Frequencies `omega` of every branch.
    pub fn omegas(&self) -> Result<Vec<Complex64>, StabilityError> {
        Ok(poly_roots(&self.poly)?
            .roots
            .iter()
            .map(|&x| omega_from_x(x, self.shift))
            .collect())
    }
}

/// `omega = i x + v0.k`.
pub fn omega_from_x(x: Complex64, shift: f64) -> Complex64 {
    Complex64::new(-x.im + shift, x.re)
}

/// Bulk dispersion cubic `tau x^3 + x^2 + k^2 (tau c_s^2 + zeta/rho0) x + k^2 c_s^2`.
pub fn bulk_dispersion(background: &Background, k: &Vec3) -> DispersionProblem {
    let b = background;
    let k2 = dot(k, k);
    let cs2 = b.cs * b.cs;
    DispersionProblem {
        k: *k,
        background: *b,
        poly: vec![b.tau, 1.0, k2 * (b.tau * cs2 + b.zeta / b.rho0), k2 * cs2],
        shift: dot(&b.v0, k),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Factor {
    pub poly: Vec<f64>,
    pub multiplicity: usize,
}

/// Factored determinant of the 10x10 shear+bulk linear system.
#[derive(Debug, Clone, PartialEq)]
pub struct ShearDispersion {
    pub k: Vec3,
    pub background: Background,
    /// `1 + tau x`, three times.
    pub relaxation: Factor,
    /// `rho tau x^2 + rho x + eta k^2`, once per transverse polarisation.
    pub shear: Factor,
    /// `rho tau x^3 + rho x^2 + (zeta + 4 eta/3 + c_s^2 rho tau) k^2 x + c_s^2 rho k^2`.
    pub acoustic: Factor,
    pub shift: f64,
}

pub fn shear_dispersion(background: &Background, k: &Vec3) -> ShearDispersion {
    let b = background;
    let k2 = dot(k, k);
    let cs2 = b.cs * b.cs;
    let rt = b.rho0 * b.tau;
    ShearDispersion {
        k: *k,
        background: *b,
        relaxation: Factor {
            poly: vec![b.tau, 1.0],
            multiplicity: 3,
        },
        shear: Factor {
            poly: vec![rt, b.rho0, b.eta * k2],
            multiplicity: 2,
        },
        acoustic: Factor {
            poly: vec![
                rt,
                b.rho0,
                (b.zeta + 4.0 * b.eta / 3.0 + cs2 * rt) * k2,
                cs2 * b.rho0 * k2,
            ],
            multiplicity: 1,
        },
        shift: dot(&b.v0, k),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShearVerdict {
    pub relaxation: StabilityVerdict,
    pub shear: StabilityVerdict,
    pub acoustic: StabilityVerdict,
    pub stable: bool,
}

impl ShearDispersion {
    pub fn factors(&self) -> [&Factor; 3] {
        [&self.relaxation, &self.shear, &self.acoustic]
    }

    /// All ten roots in `x`, with multiplicity, sorted.
    pub fn roots(&self) -> Result<Vec<Complex64>, StabilityError> {
        let mut out = Vec::with_capacity(10);
        for f in self.factors() {
            let r = poly_roots(&f.poly)?;
            for _ in 0..f.multiplicity {
                out.extend_from_slice(&r.roots);
            }
        }
        sort_complex(&mut out);
        Ok(out)
    }

    pub fn omegas(&self) -> Result<Vec<Complex64>, StabilityError> {
        Ok(self.roots()?.into_iter().map(|x| omega_from_x(x, self.shift)).collect())
    }

    /// Stable iff every factor's roots lie in the open left half plane; exact
    /// zero roots from `k = 0` are neutral and do not count against it.
    pub fn verdict(&self, marginal_band: f64) -> Result<ShearVerdict, StabilityError> {
        let relaxation = routh_hurwitz(&self.relaxation.poly, marginal_band)?;
        let shear = routh_hurwitz(&self.shear.poly, marginal_band)?;
        let acoustic = routh_hurwitz(&self.acoustic.poly, marginal_band)?;
        let neutral_ok = |v: &StabilityVerdict| {
            v.roots
                .iter()
                .all(|x| x.re < -marginal_band || (x.norm() == 0.0 && dot(&self.k, &self.k) == 0.0))
        };
        let stable = [&relaxation, &shear, &acoustic].iter().all(|v| neutral_ok(v));
        Ok(ShearVerdict {
            relaxation,
            shear,
            acoustic,
            stable,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RootClass {
    Stable,
    /// Some root within the marginal band of the imaginary axis, none to its right.
    Marginal,
    Unstable,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityVerdict {
    /// Leading principal minors of the Hurwitz matrix.
    pub deltas: Vec<f64>,
    /// All deltas positive (leading coefficient normalised positive).
    pub stable: bool,
    pub roots: Vec<Complex64>,
    pub max_real_part: f64,
    pub classification: RootClass,
}

/// Hurwitz determinants of `p` (highest degree first) plus the root-based
/// classification used as their cross-check.
pub fn routh_hurwitz(poly: &[f64], marginal_band: f64) -> Result<StabilityVerdict, StabilityError> {
    let deltas = hurwitz_determinants(poly)?;
    let stable = deltas.iter().all(|&d| d > 0.0);
    let roots = poly_roots(poly)?.roots;
    let max_real_part = roots.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
    let classification = if max_real_part < -marginal_band {
        RootClass::Stable
    } else if max_real_part <= marginal_band {
        RootClass::Marginal
    } else {
        RootClass::Unstable
    };
    Ok(StabilityVerdict {
        deltas,
        stable,
        roots,
        max_real_part,
        classification,
    })
}

/// Leading principal minors `Delta_1..Delta_n` of the Hurwitz matrix of `p`,
/// after stripping leading zeros and normalising the leading coefficient to
/// be positive. For `a0 x^3 + a1 x^2 + a2 x + a3` these are
/// `a1`, `a1 a2 - a0 a3`, `a3 (a1 a2 - a0 a3)`.
pub fn hurwitz_determinants(poly: &[f64]) -> Result<Vec<f64>, StabilityError> {
    let p = strip_leading_zeros(poly)?;
    let sign = p[0].signum();
    let a: Vec<f64> = p.iter().map(|c| c * sign).collect();
    let n = a.len() - 1;
    let coeff = |k: isize| -> f64 {
        if k < 0 || k as usize > n {
            0.0
        } else {
            a[k as usize]
        }
    };
    let h = DMatrix::from_fn(n, n, |i, j| coeff(2 * (j as isize + 1) - (i as isize + 1)));
    Ok((1..=n)
        .map(|m| h.view((0, 0), (m, m)).into_owned().lu().determinant())
        .collect())
}

fn strip_leading_zeros(poly: &[f64]) -> Result<&[f64], StabilityError> {
    let first = poly
        .iter()
        .position(|&c| c != 0.0)
        .ok_or(StabilityError::ZeroPolynomial)?;
    Ok(&poly[first..])
}

#[derive(Debug, Clone, PartialEq)]
pub struct RootSet {
    /// Sorted by real part, then imaginary part.
    pub roots: Vec<Complex64>,
    /// Number of zero leading coefficients that were dropped.
    pub degree_reduced_by: usize,
}

impl RootSet {
    pub fn degree_was_reduced(&self) -> bool {
        self.degree_reduced_by > 0
    }
}

pub fn poly_eval(poly: &[f64], x: Complex64) -> Complex64 {
    poly.iter().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * x + c)
}

fn poly_eval_with_derivative(poly: &[f64], x: Complex64) -> (Complex64, Complex64) {
    let zero = Complex64::new(0.0, 0.0);
    poly.iter().fold((zero, zero), |(p, dp), &c| (p * x + c, dp * x + p))
}

/// Roots of `p` (highest degree first) as eigenvalues of the companion
/// matrix, each polished by one Newton step when that lowers the residual.
/// Exact zero roots are factored out first.
pub fn poly_roots(poly: &[f64]) -> Result<RootSet, StabilityError> {
    let first = poly
        .iter()
        .position(|&c| c != 0.0)
        .ok_or(StabilityError::ZeroPolynomial)?;
    let p = &poly[first..];
    let zero_roots = p.iter().rev().take_while(|&&c| c == 0.0).count();
    let q = &p[..p.len() - zero_roots];
    let n = q.len() - 1;

    let mut roots = vec![Complex64::new(0.0, 0.0); zero_roots];
    if n > 0 {
        let lead = q[0];
        let companion = DMatrix::from_fn(n, n, |i, j| {
            if i == 0 {
                -q[j + 1] / lead
            } else if i == j + 1 {
                1.0
            } else {
                0.0
            }
        });
        for z in general_eigenvalues(&companion)
            .ok_or(StabilityError::NoConvergence)?
            .iter()
        {
            roots.push(newton_polish(q, *z));
        }
    }
    sort_complex(&mut roots);
    Ok(RootSet {
        roots,
        degree_reduced_by: first,
    })
}

fn newton_polish(p: &[f64], z: Complex64) -> Complex64 {
    let (f, df) = poly_eval_with_derivative(p, z);
    if df.norm() == 0.0 {
        return z;
    }
    let candidate = z - f / df;
    let fc = poly_eval(p, candidate);
    if candidate.re.is_finite() && candidate.im.is_finite() && fc.norm() < f.norm() {
        candidate
    } else {
        z
    }
}

fn sort_complex(v: &mut [Complex64]) {
    v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
}

/// `kmin:kmax:n` wavenumber sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSpec {
    pub k_min: f64,
    pub k_max: f64,
    pub count: usize,
}

impl SweepSpec {
    pub fn parse(text: &str) -> Result<Self, StabilityError> {
        let bad = || StabilityError::Sweep(text.to_string());
        let mut parts = text.trim().split(':');
        let (Some(a), Some(b), Some(c), None) = (parts.next(), parts.next(), parts.next(), parts.next()) else {
            return Err(bad());
        };
        let k_min: f64 = a.trim().parse().map_err(|_| bad())?;
        let k_max: f64 = b.trim().parse().map_err(|_| bad())?;
        let count: usize = c.trim().parse().map_err(|_| bad())?;
        if !k_min.is_finite() || !k_max.is_finite() || k_min > k_max || count == 0 || (count == 1 && k_min != k_max) {
            return Err(bad());
        }
        Ok(Self { k_min, k_max, count })
    }

    pub fn wavenumbers(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.k_min];
        }
        let last = (self.count - 1) as f64;
        (0..self.count)
            .map(|i| {
                let t = i as f64 / last;
                (1.0 - t) * self.k_min + t * self.k_max
            })
            .collect()
    }
}

impl std::fmt::Display for SweepSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:?}:{:?}:{}", self.k_min, self.k_max, self.count)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DispersionSystem {
    Bulk,
    Shear,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub k: f64,
    pub omegas: Vec<Complex64>,
}

/// Branch frequencies over a sweep of `k` along x. Rows come back in sweep
/// order regardless of how many workers evaluate them.
pub fn dispersion_sweep(
    background: &Background,
    system: DispersionSystem,
    sweep: &SweepSpec,
) -> Result<Vec<SweepRow>, StabilityError> {
    sweep
        .wavenumbers()
        .into_par_iter()
        .map(|k| {
            let kv = [k, 0.0, 0.0];
            let omegas = match system {
                DispersionSystem::Bulk => bulk_dispersion(background, &kv).omegas()?,
                DispersionSystem::Shear => shear_dispersion(background, &kv).omegas()?,
            };
            Ok(SweepRow { k, omegas })
        })
        .collect()
}
