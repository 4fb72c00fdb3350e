//! Quasilinear form `A0 d_t Phi + A^k d_k Phi + B Phi = 0` of both systems,
//! principal symbols and characteristic speeds.
//!
//! Variable ordering is fixed:
//!
//! * bulk: `(rho, v1, v2, v3, Pi)`
//! * shear: `(rho, v1, v2, v3, Pi11, Pi12, Pi13, Pi22, Pi23, Pi33)`
//!
//! Rows of the bulk system are those of the mass, momentum and relaxation
//! equations scaled to make every matrix symmetric. The relaxation equation
//! is written in divergence form `tau d_i(v^i Pi)`, whose `tau Pi d_i v^i`
//! piece is principal; it enters through the effective bulk coefficient
//! `zeta + tau Pi`, which is exactly `zeta` at vanishing stress.
//!
//! Stress rows of the shear system are scaled by `1/((zeta + 4 eta/3) c_s^2)`
//! (diagonal components) and `1/(eta c_s^2)` (off-diagonal components). With
//! that scaling the system is symmetric at vanishing stress iff
//! `zeta = 2 eta / 3`.

use nalgebra::{Complex, DMatrix, DVector, Schur};
use thiserror::Error;

use crate::fluid_model::{dot, BulkState, MaterialLaw, ModelError, ShearState, StressTensor, Vec3};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuasilinearError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("effective bulk coefficient zeta + tau*Pi = {0} is not positive; system is not hyperbolic here")]
    NotHyperbolic(f64),
    #[error("direction must be a unit vector (|n| = {0})")]
    Direction(f64),
    #[error("determinant closed form only exists for the bulk system")]
    WrongSystem,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SystemKind {
    Bulk,
    Shear,
}

impl SystemKind {
    pub fn dim(self) -> usize {
        match self {
            SystemKind::Bulk => 5,
            SystemKind::Shear => 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuasilinearSystem {
    pub kind: SystemKind,
    pub a0: DMatrix<f64>,
    pub a: [DMatrix<f64>; 3],
    pub b: DMatrix<f64>,
}

impl QuasilinearSystem {
    pub fn dim(&self) -> usize {
        self.kind.dim()
    }

    /// `xi0 A0 + xi_k A^k`.
    pub fn principal_symbol(&self, xi0: f64, xi: &Vec3) -> DMatrix<f64> {
        &self.a0 * xi0 + &self.a[0] * xi[0] + &self.a[1] * xi[1] + &self.a[2] * xi[2]
    }

    /// `xi_k A^k`.
    pub fn spatial_symbol(&self, xi: &Vec3) -> DMatrix<f64> {
        self.principal_symbol(0.0, xi)
    }

    /// Contracts the system with a field value, its time derivative and its
    /// three spatial derivatives.
    pub fn apply(&self, phi: &DVector<f64>, dphi_dt: &DVector<f64>, grad: &[DVector<f64>; 3]) -> DVector<f64> {
        &self.a0 * dphi_dt + &self.a[0] * &grad[0] + &self.a[1] * &grad[1] + &self.a[2] * &grad[2] + &self.b * phi
    }

    pub fn is_symmetric(&self, rel_tol: f64) -> bool {
        std::iter::once(&self.a0)
            .chain(self.a.iter())
            .chain(std::iter::once(&self.b))
            .all(|m| matrix_is_symmetric(m, rel_tol))
    }
}

fn matrix_is_symmetric(m: &DMatrix<f64>, rel_tol: f64) -> bool {
    let scale = m.amax().max(f64::MIN_POSITIVE);
    let n = m.nrows();
    (0..n).all(|i| (0..i).all(|j| (m[(i, j)] - m[(j, i)]).abs() <= rel_tol * scale))
}

/// Scalars shared by the assembly routines and the closed forms.
#[derive(Debug, Clone, Copy)]
struct PointCoefficients {
    rho: f64,
    cs2: f64,
    zeta: f64,
    eta: f64,
    tau: f64,
}

fn bulk_coefficients(state: &BulkState, law: &MaterialLaw) -> Result<PointCoefficients, QuasilinearError> {
    let cs2 = law.sound_speed_squared(state.rho)?;
    let tr = law.eval_transport(state.invariants())?;
    Ok(PointCoefficients {
        rho: state.rho,
        cs2,
        zeta: tr.zeta,
        eta: tr.eta,
        tau: tr.tau,
    })
}

fn shear_coefficients(state: &ShearState, law: &MaterialLaw) -> Result<PointCoefficients, QuasilinearError> {
    let cs2 = law.sound_speed_squared(state.rho)?;
    let tr = law.eval_transport(state.invariants())?;
    Ok(PointCoefficients {
        rho: state.rho,
        cs2,
        zeta: tr.zeta,
        eta: tr.eta,
        tau: tr.tau,
    })
}

fn effective_zeta(zeta: f64, tau: f64, pi: f64) -> Result<f64, QuasilinearError> {
    let z = zeta + tau * pi;
    if z > 0.0 && z.is_finite() {
        Ok(z)
    } else {
        Err(QuasilinearError::NotHyperbolic(z))
    }
}

pub fn assemble_bulk(state: &BulkState, law: &MaterialLaw) -> Result<QuasilinearSystem, QuasilinearError> {
    state.validate(0.0)?;
    let k = bulk_coefficients(state, law)?;
    let zeta_eff = effective_zeta(k.zeta, k.tau, state.pi)?;
    let (rho, cs2, tau) = (k.rho, k.cs2, k.tau);
    let inv_cs2 = 1.0 / cs2;
    let stress_scale = 1.0 / (zeta_eff * cs2);

    let mut a0 = DMatrix::zeros(5, 5);
    a0[(0, 0)] = 1.0 / rho;
    for i in 1..4 {
        a0[(i, i)] = rho * inv_cs2;
    }
    a0[(4, 4)] = tau * stress_scale;

    let a = [0usize, 1, 2].map(|dir| {
        let vk = state.v[dir];
        let mut m = DMatrix::zeros(5, 5);
        m[(0, 0)] = vk / rho;
        m[(0, 1 + dir)] = 1.0;
        m[(1 + dir, 0)] = 1.0;
        for i in 1..4 {
            m[(i, i)] = vk * rho * inv_cs2;
        }
        m[(1 + dir, 4)] = inv_cs2;
        m[(4, 1 + dir)] = inv_cs2;
        m[(4, 4)] = tau * vk * stress_scale;
        m
    });

    let mut b = DMatrix::zeros(5, 5);
    b[(4, 4)] = stress_scale;
    Ok(QuasilinearSystem {
        kind: SystemKind::Bulk,
        a0,
        a,
        b,
    })
}

/// Row scaling applied to the relaxation equation of stress slot `slot`.
pub fn shear_row_scale(slot: usize, zeta: f64, eta: f64, cs2: f64) -> f64 {
    let (i, j) = StressTensor::COMPONENTS[slot];
    if i == j {
        1.0 / ((zeta + 4.0 * eta / 3.0) * cs2)
    } else {
        1.0 / (eta * cs2)
    }
}

pub fn assemble_shear(state: &ShearState, law: &MaterialLaw) -> Result<QuasilinearSystem, QuasilinearError> {
    state.validate(0.0)?;
    let k = shear_coefficients(state, law)?;
    let (rho, cs2, zeta, eta, tau) = (k.rho, k.cs2, k.zeta, k.eta, k.tau);
    let inv_cs2 = 1.0 / cs2;
    let n = 10;
    let stress_var = |i: usize, j: usize| 4 + StressTensor::slot(i, j);

    let mut a0 = DMatrix::zeros(n, n);
    let mut a = [DMatrix::zeros(n, n), DMatrix::zeros(n, n), DMatrix::zeros(n, n)];
    let mut b = DMatrix::zeros(n, n);

    // continuity, divided by rho
    a0[(0, 0)] = 1.0 / rho;
    for dir in 0..3 {
        a[dir][(0, 0)] = state.v[dir] / rho;
        a[dir][(0, 1 + dir)] = 1.0;
    }

    // momentum, divided by c_s^2
    for i in 0..3 {
        let row = 1 + i;
        a0[(row, row)] = rho * inv_cs2;
        a[i][(row, 0)] = 1.0;
        for dir in 0..3 {
            a[dir][(row, row)] = state.v[dir] * rho * inv_cs2;
            a[dir][(row, stress_var(i, dir))] += inv_cs2;
        }
    }

    // stress relaxation
    for (slot, &(i, j)) in StressTensor::COMPONENTS.iter().enumerate() {
        let row = 4 + slot;
        let s = shear_row_scale(slot, zeta, eta, cs2);
        let pij = state.stress.get(i, j);
        a0[(row, row)] = s * tau;
        b[(row, row)] = s;
        for dir in 0..3 {
            a[dir][(row, row)] += s * tau * state.v[dir];
            // tau Pi_ij d_k v^k from the divergence-form advection
            a[dir][(row, 1 + dir)] += s * tau * pij;
        }
        a[i][(row, 1 + j)] += s * eta;
        a[j][(row, 1 + i)] += s * eta;
        if i == j {
            for dir in 0..3 {
                a[dir][(row, 1 + dir)] += s * (zeta - 2.0 * eta / 3.0);
            }
        }
    }

    Ok(QuasilinearSystem {
        kind: SystemKind::Shear,
        a0,
        a,
        b,
    })
}

fn check_direction(n: &Vec3) -> Result<(), QuasilinearError> {
    let norm = dot(n, n).sqrt();
    if (norm - 1.0).abs() > 1e-9 {
        Err(QuasilinearError::Direction(norm))
    } else {
        Ok(())
    }
}

/// Bulk front speed `c_v = sqrt(c_s^2 + (zeta + tau Pi) / (rho tau))`.
pub fn bulk_front_speed(state: &BulkState, law: &MaterialLaw) -> Result<f64, QuasilinearError> {
    let k = bulk_coefficients(state, law)?;
    let zeta_eff = effective_zeta(k.zeta, k.tau, state.pi)?;
    Ok((k.cs2 + zeta_eff / (k.rho * k.tau)).sqrt())
}

/// Characteristic speeds of the bulk system along `n`, with multiplicity:
/// `v.n` three times and `v.n +- c_v`. Sorted ascending.
pub fn characteristic_speeds_bulk_closed(
    state: &BulkState,
    law: &MaterialLaw,
    n: &Vec3,
) -> Result<Vec<f64>, QuasilinearError> {
    check_direction(n)?;
    let cv = bulk_front_speed(state, law)?;
    let vn = dot(&state.v, n);
    Ok(vec![vn - cv, vn, vn, vn, vn + cv])
}

/// The two nonzero speeds `(shear, fast)` of the shear system relative to the fluid.
pub fn shear_wave_speeds(state: &ShearState, law: &MaterialLaw) -> Result<(f64, f64), QuasilinearError> {
    let k = shear_coefficients(state, law)?;
    let zeta_eff = effective_zeta(k.zeta, k.tau, state.stress.bulk_scalar())?;
    let shear = (k.eta / (k.rho * k.tau)).sqrt();
    let fast = (k.cs2 + (zeta_eff + 4.0 * k.eta / 3.0) / (k.rho * k.tau)).sqrt();
    Ok((shear, fast))
}

/// Distinct characteristic speeds of the shear system along `n`, sorted:
/// `{v.n, v.n +- sqrt(eta/(rho tau)), v.n +- sqrt(c_s^2 + (zeta + 4eta/3)/(rho tau))}`.
///
/// Exact for isotropic stress; multiplicities come from the numeric route.
pub fn characteristic_speeds_shear_closed(
    state: &ShearState,
    law: &MaterialLaw,
    n: &Vec3,
) -> Result<Vec<f64>, QuasilinearError> {
    check_direction(n)?;
    let (shear, fast) = shear_wave_speeds(state, law)?;
    let vn = dot(&state.v, n);
    Ok(vec![vn - fast, vn - shear, vn, vn + shear, vn + fast])
}

/// Determinant of the principal symbol `xi0 A0 + xi_k A^k`.
pub fn det_principal_symbol(sys: &QuasilinearSystem, xi0: f64, xi: &Vec3) -> f64 {
    sys.principal_symbol(xi0, xi).lu().determinant()
}

/// `det L = rho^2 alpha^3 tau / (zeta c_s^8) (alpha^2 - c_v^2 |xi|^2)` with
/// `alpha = xi0 + v.xi` and `zeta` the effective bulk coefficient.
pub fn det_principal_symbol_bulk_closed(
    state: &BulkState,
    law: &MaterialLaw,
    xi0: f64,
    xi: &Vec3,
) -> Result<f64, QuasilinearError> {
    let k = bulk_coefficients(state, law)?;
    let zeta_eff = effective_zeta(k.zeta, k.tau, state.pi)?;
    let cv2 = k.cs2 + zeta_eff / (k.rho * k.tau);
    let alpha = xi0 + dot(&state.v, xi);
    Ok(k.rho * k.rho * alpha.powi(3) * k.tau / (zeta_eff * k.cs2.powi(4)) * (alpha * alpha - cv2 * dot(xi, xi)))
}

/// Eigenvalues of a square matrix from a bounded real Schur iteration.
///
/// The unshifted iteration can stall on some exactly structured matrices,
/// so a stalled attempt is retried on `m - s I` for two fixed shifts.
pub fn general_eigenvalues(m: &DMatrix<f64>) -> Option<Vec<Complex<f64>>> {
    let n = m.nrows();
    let scale = m.amax().max(f64::MIN_POSITIVE);
    for shift in [0.0, std::f64::consts::FRAC_1_PI, -0.577_215_664_901_532_9] {
        let s = shift * scale;
        let shifted = m - DMatrix::identity(n, n) * s;
        if let Some(schur) = Schur::try_new(shifted, f64::EPSILON, 200 * n.max(1)) {
            return Some(schur.complex_eigenvalues().iter().map(|z| z + s).collect());
        }
    }
    None
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DegenerateReason {
    SingularTimeMatrix,
    ComplexSpeeds,
    IncompleteEigenbasis,
    /// The eigenvalue iteration did not converge.
    NoConvergence,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HyperbolicVerdict {
    /// Symmetric matrices with positive definite `A0`.
    Fosh,
    StronglyHyperbolic,
    Degenerate(DegenerateReason),
}

impl std::fmt::Display for HyperbolicVerdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            HyperbolicVerdict::Fosh => f.write_str("FOSH"),
            HyperbolicVerdict::StronglyHyperbolic => f.write_str("strongly-hyperbolic"),
            HyperbolicVerdict::Degenerate(r) => write!(f, "degenerate ({r:?})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CharacteristicReport {
    pub direction: Vec3,
    /// Real parts of the eigenvalues of `A0^{-1} n_k A^k`, sorted, with multiplicity.
    pub speeds: Vec<f64>,
    /// Distinct speeds with algebraic multiplicity.
    pub multiplicities: Vec<(f64, usize)>,
    /// Condition number of the unit-column eigenvector matrix (infinite when incomplete).
    pub eigenvector_condition: f64,
    pub symmetric: bool,
    pub a0_posdef: bool,
    pub verdict: HyperbolicVerdict,
}

#[derive(Debug, Clone, Copy)]
pub struct SpectralOptions {
    /// Largest eigenvector condition number accepted as a complete basis.
    pub condition_cap: f64,
    /// Relative tolerance for symmetry checks.
    pub symmetry_tol: f64,
}

impl Default for SpectralOptions {
    fn default() -> Self {
        Self {
            condition_cap: 1e8,
            symmetry_tol: 1e-12,
        }
    }
}

/// Eigen-analysis of `A0^{-1} (n_k A^k)`. Serves as the oracle for the closed forms.
pub fn characteristic_speeds_numeric(
    sys: &QuasilinearSystem,
    direction: &Vec3,
    opts: &SpectralOptions,
) -> CharacteristicReport {
    let n = sys.dim();
    let symmetric = sys.is_symmetric(opts.symmetry_tol);
    let a0_posdef = matrix_is_symmetric(&sys.a0, opts.symmetry_tol)
        && sys.a0.iter().all(|x| x.is_finite())
        && sys.a0.clone().symmetric_eigen().eigenvalues.iter().all(|&l| l > 0.0);

    let degenerate = |reason, speeds: Vec<f64>| CharacteristicReport {
        direction: *direction,
        multiplicities: cluster(&speeds, 1e-7),
        speeds,
        eigenvector_condition: f64::INFINITY,
        symmetric,
        a0_posdef,
        verdict: HyperbolicVerdict::Degenerate(reason),
    };

    let a0_sv = sys.a0.singular_values();
    let (smax, smin) = (a0_sv.max(), a0_sv.min());
    if !(smin.is_finite() && smax.is_finite()) || smin <= 1e-13 * smax {
        return degenerate(DegenerateReason::SingularTimeMatrix, Vec::new());
    }
    let Some(m) = sys.a0.clone().lu().solve(&sys.spatial_symbol(direction)) else {
        return degenerate(DegenerateReason::SingularTimeMatrix, Vec::new());
    };

    let Some(eig) = general_eigenvalues(&m) else {
        return degenerate(DegenerateReason::NoConvergence, Vec::new());
    };
    let scale = eig.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let mut speeds: Vec<f64> = eig.iter().map(|z| z.re).collect();
    speeds.sort_by(f64::total_cmp);
    if eig.iter().any(|z| z.im.abs() > 1e-8 * scale) {
        return degenerate(DegenerateReason::ComplexSpeeds, speeds);
    }

    let multiplicities = cluster(&speeds, 1e-7 * scale);
    let null_tol = 1e-8 * scale.max(m.amax());
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(n);
    for &(lambda, mult) in &multiplicities {
        let shifted = &m - DMatrix::identity(n, n) * lambda;
        let svd = shifted.svd(false, true);
        let v_t = svd.v_t.expect("requested right singular vectors");
        let mut found = 0;
        for (idx, &s) in svd.singular_values.iter().enumerate() {
            if s <= null_tol && found < mult {
                basis.push(v_t.row(idx).transpose());
                found += 1;
            }
        }
        if found < mult {
            let mut r = degenerate(DegenerateReason::IncompleteEigenbasis, speeds);
            r.multiplicities = multiplicities;
            return r;
        }
    }
    let vmat = DMatrix::from_columns(&basis);
    let sv = vmat.singular_values();
    let condition = if sv.min() > 0.0 {
        sv.max() / sv.min()
    } else {
        f64::INFINITY
    };

    let verdict = if !(condition <= opts.condition_cap) {
        HyperbolicVerdict::Degenerate(DegenerateReason::IncompleteEigenbasis)
    } else if symmetric && a0_posdef {
        HyperbolicVerdict::Fosh
    } else {
        HyperbolicVerdict::StronglyHyperbolic
    };

    CharacteristicReport {
        direction: *direction,
        speeds,
        multiplicities,
        eigenvector_condition: condition,
        symmetric,
        a0_posdef,
        verdict,
    }
}

/// Groups sorted values whose neighbours differ by at most `tol`.
fn cluster(sorted: &[f64], tol: f64) -> Vec<(f64, usize)> {
    let mut out: Vec<(f64, usize)> = Vec::new();
    let mut group: Vec<f64> = Vec::new();
    for &x in sorted {
        if let Some(&last) = group.last() {
            if x - last > tol {
                let mean = group.iter().sum::<f64>() / group.len() as f64;
                out.push((mean, group.len()));
                group.clear();
            }
        }
        group.push(x);
    }
    if !group.is_empty() {
        let mean = group.iter().sum::<f64>() / group.len() as f64;
        out.push((mean, group.len()));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fluid_model::TransportLaw;

    fn unit_bulk_law() -> MaterialLaw {
        // A gamma = 1 at rho = 1 gives c_s = 1
        MaterialLaw::constant(0.5, 2.0, 1.0, 1.0, 1.0).unwrap()
    }

    const X: Vec3 = [1.0, 0.0, 0.0];

    #[test]
    fn bulk_matrices_at_unit_equilibrium() {
        let sys = assemble_bulk(&BulkState::new(1.0, [0.0; 3], 0.0), &unit_bulk_law()).unwrap();
        assert_eq!(sys.a0, DMatrix::identity(5, 5));
        let row: Vec<f64> = sys.a[0].row(0).iter().copied().collect();
        assert_eq!(row, vec![0.0, 1.0, 0.0, 0.0, 0.0]);
        assert_eq!(sys.b[(4, 4)], 1.0);
        assert_eq!(sys.b.iter().filter(|x| **x != 0.0).count(), 1);
        assert!(sys.is_symmetric(0.0));
    }

    #[test]
    fn bulk_a1_velocity_entry() {
        let sys = assemble_bulk(&BulkState::new(2.0, [0.3, 0.0, 0.0], 0.0), &unit_bulk_law_at(2.0)).unwrap();
        assert!((sys.a[0][(0, 0)] - 0.15).abs() < 1e-15);
    }

    // c_s = 1 at the given density
    fn unit_bulk_law_at(rho: f64) -> MaterialLaw {
        let gamma = 2.0;
        MaterialLaw::constant(1.0 / (gamma * rho), gamma, 1.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn bulk_closed_speeds() {
        let law = unit_bulk_law();
        let s = characteristic_speeds_bulk_closed(&BulkState::new(1.0, [0.0; 3], 0.0), &law, &X).unwrap();
        let r2 = 2f64.sqrt();
        assert_eq!(s, vec![-r2, 0.0, 0.0, 0.0, r2]);
        let s = characteristic_speeds_bulk_closed(&BulkState::new(1.0, [0.3, 0.0, 0.0], 0.0), &law, &X).unwrap();
        for (got, want) in s.iter().zip([0.3 - r2, 0.3, 0.3, 0.3, 0.3 + r2]) {
            assert!((got - want).abs() < 1e-15);
        }
    }

    #[test]
    fn bulk_ideal_limit() {
        let law = MaterialLaw::constant(0.5, 2.0, 1e-14, 1.0, 1.0).unwrap();
        let s = characteristic_speeds_bulk_closed(&BulkState::new(1.0, [0.0; 3], 0.0), &law, &X).unwrap();
        assert!((s[4] - 1.0).abs() < 1e-13);
    }

    #[test]
    fn shear_closed_speeds() {
        let law = unit_bulk_law();
        let st = ShearState::new(1.0, [0.0; 3], StressTensor::zero());
        let s = characteristic_speeds_shear_closed(&st, &law, &X).unwrap();
        assert_eq!(s[3], 1.0);
        assert!((s[4] - (10.0f64 / 3.0).sqrt()).abs() < 1e-15);

        let law = MaterialLaw::constant(0.5, 2.0, 1.0, 1.0, 1.0).unwrap();
        let st = ShearState::new(4.0, [0.0; 3], StressTensor::zero());
        let (shear, _) = shear_wave_speeds(&st, &law).unwrap();
        assert_eq!(shear, 0.5);
    }

    #[test]
    fn shear_inviscid_shear_limit_recovers_bulk() {
        let law = MaterialLaw::constant(0.5, 2.0, 1.0, 1e-16, 1.0).unwrap();
        let st = ShearState::new(1.0, [0.0; 3], StressTensor::zero());
        let (shear, fast) = shear_wave_speeds(&st, &law).unwrap();
        let cv = bulk_front_speed(&st.bulk_part(), &law).unwrap();
        assert!(shear < 1e-7);
        assert!((fast - cv).abs() < 1e-14);
    }

    #[test]
    fn shear_stress_row_coefficients() {
        let law = MaterialLaw::constant(0.5, 2.0, 0.7, 1.3, 1.0).unwrap();
        let st = ShearState::new(1.0, [0.0; 3], StressTensor::zero());
        let sys = assemble_shear(&st, &law).unwrap();
        let s = shear_row_scale(0, 0.7, 1.3, 1.0);
        // Pi11 row: 2 eta + (zeta - 2 eta/3) on d1 v1, (zeta - 2eta/3) on d2 v2
        assert!((sys.a[0][(4, 1)] / s - (2.0 * 1.3 + 0.7 - 2.0 * 1.3 / 3.0)).abs() < 1e-14);
        assert!((sys.a[1][(4, 2)] / s - (0.7 - 2.0 * 1.3 / 3.0)).abs() < 1e-14);
        // Pi12 row: eta on d1 v2 and on d2 v1
        let s12 = shear_row_scale(1, 0.7, 1.3, 1.0);
        assert!((sys.a[0][(5, 2)] / s12 - 1.3).abs() < 1e-14);
        assert!((sys.a[1][(5, 1)] / s12 - 1.3).abs() < 1e-14);
    }

    #[test]
    fn shear_symmetric_only_at_special_ratio() {
        let st = ShearState::new(1.3, [0.2, -0.1, 0.4], StressTensor::zero());
        let special = MaterialLaw::constant(0.5, 2.0, 2.0 / 3.0, 1.0, 0.8).unwrap();
        assert!(assemble_shear(&st, &special).unwrap().is_symmetric(1e-12));
        let generic = MaterialLaw::constant(0.5, 2.0, 1.0, 1.0, 0.8).unwrap();
        assert!(!assemble_shear(&st, &generic).unwrap().is_symmetric(1e-12));
    }

    #[test]
    fn numeric_bulk_equilibrium() {
        let sys = assemble_bulk(&BulkState::new(1.0, [0.0; 3], 0.0), &unit_bulk_law()).unwrap();
        let r = characteristic_speeds_numeric(&sys, &X, &SpectralOptions::default());
        let r2 = 2f64.sqrt();
        for (got, want) in r.speeds.iter().zip([-r2, 0.0, 0.0, 0.0, r2]) {
            assert!((got - want).abs() < 1e-10, "{:?}", r.speeds);
        }
        assert_eq!(r.verdict, HyperbolicVerdict::Fosh);
        assert_eq!(r.multiplicities.len(), 3);
        assert_eq!(r.multiplicities[1].1, 3);
    }

    #[test]
    fn numeric_shear_equilibrium_multiplicities() {
        let st = ShearState::new(1.0, [0.0; 3], StressTensor::zero());
        let sys = assemble_shear(&st, &unit_bulk_law()).unwrap();
        let r = characteristic_speeds_numeric(&sys, &X, &SpectralOptions::default());
        assert_eq!(r.verdict, HyperbolicVerdict::StronglyHyperbolic);
        let f = (10.0f64 / 3.0).sqrt();
        let want = [(-f, 1), (-1.0, 2), (0.0, 4), (1.0, 2), (f, 1)];
        assert_eq!(r.multiplicities.len(), want.len(), "{:?}", r.multiplicities);
        for ((got, m), (w, wm)) in r.multiplicities.iter().zip(want) {
            assert!((got - w).abs() < 1e-10);
            assert_eq!(*m, wm);
        }
    }

    #[test]
    fn singular_time_matrix_is_degenerate() {
        let mut sys = assemble_bulk(&BulkState::new(1.0, [0.0; 3], 0.0), &unit_bulk_law()).unwrap();
        sys.a0[(4, 4)] = 0.0;
        let r = characteristic_speeds_numeric(&sys, &X, &SpectralOptions::default());
        assert_eq!(
            r.verdict,
            HyperbolicVerdict::Degenerate(DegenerateReason::SingularTimeMatrix)
        );
        assert!(r.speeds.is_empty());
    }

    #[test]
    fn defective_symbol_is_detected() {
        // Jordan block: real eigenvalues but a single eigenvector.
        let mut sys = assemble_bulk(&BulkState::new(1.0, [0.0; 3], 0.0), &unit_bulk_law()).unwrap();
        sys.a = [DMatrix::zeros(5, 5), DMatrix::zeros(5, 5), DMatrix::zeros(5, 5)];
        sys.a[0][(0, 1)] = 1.0;
        let r = characteristic_speeds_numeric(&sys, &X, &SpectralOptions::default());
        assert_eq!(
            r.verdict,
            HyperbolicVerdict::Degenerate(DegenerateReason::IncompleteEigenbasis)
        );
    }

    #[test]
    fn complex_symbol_is_detected() {
        let mut sys = assemble_bulk(&BulkState::new(1.0, [0.0; 3], 0.0), &unit_bulk_law()).unwrap();
        sys.a[0][(4, 1)] = -1.0;
        let r = characteristic_speeds_numeric(&sys, &X, &SpectralOptions::default());
        assert_eq!(
            r.verdict,
            HyperbolicVerdict::Degenerate(DegenerateReason::ComplexSpeeds)
        );
    }

    #[test]
    fn stalling_schur_input_still_resolves() {
        // the unshifted real Schur iteration never converges on this symbol
        let law = MaterialLaw::constant(
            1.3846360903975252,
            2.9617066141670785,
            0.671515352691537,
            4.667702157472078,
            2.728827203907167,
        )
        .unwrap();
        let st = BulkState::new(
            2.010610114524475,
            [-2.9712314796190253, 0.2682154337832645, -2.3948572758638544],
            0.8659619347956737,
        );
        let n = [0.470320476989446, -0.8824102989711043, -0.012276530216078833];
        let sys = assemble_bulk(&st, &law).unwrap();
        let m = sys.a0.clone().lu().solve(&sys.spatial_symbol(&n)).unwrap();
        assert!(Schur::try_new(m.clone(), f64::EPSILON, 1000).is_none());
        assert_eq!(general_eigenvalues(&m).unwrap().len(), 5);
        let rep = characteristic_speeds_numeric(&sys, &n, &SpectralOptions::default());
        assert_eq!(rep.verdict, HyperbolicVerdict::Fosh);
        let closed = characteristic_speeds_bulk_closed(&st, &law, &n).unwrap();
        for (a, b) in rep.speeds.iter().zip(&closed) {
            assert!((a - b).abs() < 1e-12 * b.abs().max(1.0), "{a} {b}");
        }
    }

    #[test]
    fn det_examples() {
        let law = unit_bulk_law();
        let st = BulkState::new(1.0, [0.0; 3], 0.0);
        let sys = assemble_bulk(&st, &law).unwrap();
        let d = det_principal_symbol(&sys, 1.0, &X);
        assert!((d + 1.0).abs() < 1e-12);
        assert!((det_principal_symbol_bulk_closed(&st, &law, 1.0, &X).unwrap() + 1.0).abs() < 1e-15);

        let st = BulkState::new(1.2, [0.3, -0.4, 0.1], 0.05);
        let sys = assemble_bulk(&st, &law).unwrap();
        let xi = [0.6, 0.8, 0.0];
        let vxi = dot(&st.v, &xi);
        assert!(det_principal_symbol(&sys, -vxi, &xi).abs() < 1e-12);
        let cv = bulk_front_speed(&st, &law).unwrap();
        let d = det_principal_symbol(&sys, -vxi + cv, &xi);
        assert!(d.abs() < 1e-10, "{d}");
    }

    #[test]
    fn negative_effective_bulk_coefficient_is_rejected() {
        let law = unit_bulk_law();
        let err = assemble_bulk(&BulkState::new(1.0, [0.0; 3], -2.0), &law).unwrap_err();
        assert!(matches!(err, QuasilinearError::NotHyperbolic(_)));
    }

    #[test]
    fn rejects_non_unit_direction() {
        let st = BulkState::new(1.0, [0.0; 3], 0.0);
        assert!(characteristic_speeds_bulk_closed(&st, &unit_bulk_law(), &[2.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn state_dependent_law_enters_assembly() {
        let mut law = unit_bulk_law();
        law.zeta = TransportLaw::Power {
            scale: 1.0,
            exponent: 1.0,
        };
        let sys = assemble_bulk(&BulkState::new(2.0, [0.0; 3], 0.0), &law).unwrap();
        let cs2 = law.sound_speed_squared(2.0).unwrap();
        assert!((sys.a0[(4, 4)] - 1.0 / (2.0 * cs2)).abs() < 1e-15);
    }
}
