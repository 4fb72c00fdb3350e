//! Physical state, barotropic equation of state and transport laws.
//!
//! Everything here is a plain value type. The evolved unknowns are
//! `(rho, v, Pi)` for the bulk-viscous system and `(rho, v, Pi_ij)` for the
//! shear + bulk system; all quantities are in dimensionless code units.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("{quantity} must be positive and finite, got {value}")]
    Domain { quantity: &'static str, value: f64 },
    #[error("transport coefficient {coefficient} evaluated to {value} (must be positive and finite)")]
    Material { coefficient: &'static str, value: f64 },
    #[error("invalid state: {0}")]
    InvalidState(String),
}

pub type Vec3 = [f64; 3];

pub fn dot(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Symmetric 3x3 viscous stress stored as its six independent components
/// in the order `(11, 12, 13, 22, 23, 33)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StressTensor([f64; 6]);

impl StressTensor {
    pub const COMPONENTS: [(usize, usize); 6] = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)];

    pub fn zero() -> Self {
        Self([0.0; 6])
    }

    pub fn from_components(c: [f64; 6]) -> Self {
        Self(c)
    }

    /// `p * delta_ij`.
    pub fn isotropic(p: f64) -> Self {
        Self([p, 0.0, 0.0, p, 0.0, p])
    }

    /// Storage slot of component `(i, j)`; symmetric in its arguments.
    pub fn slot(i: usize, j: usize) -> usize {
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        match (a, b) {
            (0, 0) => 0,
            (0, 1) => 1,
            (0, 2) => 2,
            (1, 1) => 3,
            (1, 2) => 4,
            (2, 2) => 5,
            _ => panic!("stress index ({i}, {j}) out of range"),
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[Self::slot(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.0[Self::slot(i, j)] = value;
    }

    pub fn components(&self) -> [f64; 6] {
        self.0
    }

    pub fn trace(&self) -> f64 {
        self.0[0] + self.0[3] + self.0[5]
    }

    /// The bulk scalar `Pi = Pi_ii / 3`.
    pub fn bulk_scalar(&self) -> f64 {
        self.trace() / 3.0
    }

    /// `Pi_ij Pi^ij`.
    pub fn contraction(&self) -> f64 {
        let c = &self.0;
        c[0] * c[0] + c[3] * c[3] + c[5] * c[5] + 2.0 * (c[1] * c[1] + c[2] * c[2] + c[4] * c[4])
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BulkState {
    pub rho: f64,
    pub v: Vec3,
    pub pi: f64,
}

impl BulkState {
    pub fn new(rho: f64, v: Vec3, pi: f64) -> Self {
        Self { rho, v, pi }
    }

    pub fn invariants(&self) -> Invariants {
        Invariants {
            rho: self.rho,
            pi: self.pi,
            pi_contracted: 3.0 * self.pi * self.pi,
        }
    }

    pub fn validate(&self, density_floor: f64) -> Result<(), ModelError> {
        validate_common(self.rho, &self.v, self.pi.is_finite(), density_floor)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShearState {
    pub rho: f64,
    pub v: Vec3,
    pub stress: StressTensor,
}

impl ShearState {
    pub fn new(rho: f64, v: Vec3, stress: StressTensor) -> Self {
        Self { rho, v, stress }
    }

    pub fn invariants(&self) -> Invariants {
        Invariants {
            rho: self.rho,
            pi: self.stress.bulk_scalar(),
            pi_contracted: self.stress.contraction(),
        }
    }

    /// The bulk state seen by the trace sector.
    pub fn bulk_part(&self) -> BulkState {
        BulkState::new(self.rho, self.v, self.stress.bulk_scalar())
    }

    pub fn validate(&self, density_floor: f64) -> Result<(), ModelError> {
        validate_common(self.rho, &self.v, self.stress.is_finite(), density_floor)
    }
}

fn validate_common(rho: f64, v: &Vec3, stress_finite: bool, floor: f64) -> Result<(), ModelError> {
    if !rho.is_finite() || rho <= floor.max(0.0) {
        return Err(ModelError::InvalidState(format!(
            "density {rho} at or below floor {floor}"
        )));
    }
    if !v.iter().all(|x| x.is_finite()) || !stress_finite {
        return Err(ModelError::InvalidState("non-finite field".into()));
    }
    Ok(())
}

/// Rotationally invariant inputs a transport law may depend on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Invariants {
    pub rho: f64,
    /// `Pi = trace / 3`.
    pub pi: f64,
    /// `Pi_ij Pi^ij`.
    pub pi_contracted: f64,
}

impl Invariants {
    pub fn equilibrium(rho: f64) -> Self {
        Self {
            rho,
            pi: 0.0,
            pi_contracted: 0.0,
        }
    }
}

pub type InvariantFn = Arc<dyn Fn(Invariants) -> f64 + Send + Sync>;

/// A transport coefficient: either a constant or a function of the invariants.
#[derive(Clone)]
pub enum TransportLaw {
    Constant(f64),
    /// `scale * rho^exponent`
    Power {
        scale: f64,
        exponent: f64,
    },
    /// `scale / (1 + stiffness * Pi^2)`
    BulkSaturating {
        scale: f64,
        stiffness: f64,
    },
    /// `scale / (1 + stiffness * Pi_ij Pi^ij)`
    StressSaturating {
        scale: f64,
        stiffness: f64,
    },
    Custom(InvariantFn),
}

impl TransportLaw {
    pub fn custom(f: impl Fn(Invariants) -> f64 + Send + Sync + 'static) -> Self {
        TransportLaw::Custom(Arc::new(f))
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, TransportLaw::Constant(_))
    }

    pub fn eval(&self, inv: Invariants) -> f64 {
        match self {
            TransportLaw::Constant(c) => *c,
            TransportLaw::Power { scale, exponent } => scale * inv.rho.powf(*exponent),
            TransportLaw::BulkSaturating { scale, stiffness } => scale / (1.0 + stiffness * inv.pi * inv.pi),
            TransportLaw::StressSaturating { scale, stiffness } => scale / (1.0 + stiffness * inv.pi_contracted),
            TransportLaw::Custom(f) => f(inv),
        }
    }
}

impl fmt::Debug for TransportLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TransportLaw::Custom(_) => f.write_str("Custom(..)"),
            other => write!(f, "{other}"),
        }
    }
}

/// Canonical text form, parsed back by the scenario config.
impl fmt::Display for TransportLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TransportLaw::Constant(c) => write!(f, "{c:?}"),
            TransportLaw::Power { scale, exponent } => write!(f, "power({scale:?}, {exponent:?})"),
            TransportLaw::BulkSaturating { scale, stiffness } => {
                write!(f, "bulk-saturating({scale:?}, {stiffness:?})")
            }
            TransportLaw::StressSaturating { scale, stiffness } => {
                write!(f, "stress-saturating({scale:?}, {stiffness:?})")
            }
            TransportLaw::Custom(_) => f.write_str("custom"),
        }
    }
}

impl PartialEq for TransportLaw {
    fn eq(&self, other: &Self) -> bool {
        use TransportLaw::*;
        match (self, other) {
            (Constant(a), Constant(b)) => a == b,
            (Power { scale: a, exponent: b }, Power { scale: c, exponent: d }) => a == c && b == d,
            (BulkSaturating { scale: a, stiffness: b }, BulkSaturating { scale: c, stiffness: d }) => a == c && b == d,
            (StressSaturating { scale: a, stiffness: b }, StressSaturating { scale: c, stiffness: d }) => {
                a == c && b == d
            }
            (Custom(a), Custom(b)) => Arc::ptr_eq(a, b),
            _ => false,
        }
    }
}

/// Transport coefficients evaluated at one state point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transport {
    pub zeta: f64,
    pub eta: f64,
    pub tau: f64,
}

/// `P = A rho^gamma` together with the three transport laws.
#[derive(Debug, Clone, PartialEq)]
pub struct MaterialLaw {
    pub amplitude: f64,
    pub gamma: f64,
    pub zeta: TransportLaw,
    pub eta: TransportLaw,
    pub tau: TransportLaw,
}

impl MaterialLaw {
    pub fn new(
        amplitude: f64,
        gamma: f64,
        zeta: TransportLaw,
        eta: TransportLaw,
        tau: TransportLaw,
    ) -> Result<Self, ModelError> {
        if !(amplitude.is_finite() && amplitude > 0.0) {
            return Err(ModelError::Domain {
                quantity: "EOS amplitude A",
                value: amplitude,
            });
        }
        if !(gamma.is_finite() && gamma > 1.0) {
            return Err(ModelError::Domain {
                quantity: "gamma - 1",
                value: gamma - 1.0,
            });
        }
        Ok(Self {
            amplitude,
            gamma,
            zeta,
            eta,
            tau,
        })
    }

    /// Constant transport coefficients.
    pub fn constant(amplitude: f64, gamma: f64, zeta: f64, eta: f64, tau: f64) -> Result<Self, ModelError> {
        Self::new(
            amplitude,
            gamma,
            TransportLaw::Constant(zeta),
            TransportLaw::Constant(eta),
            TransportLaw::Constant(tau),
        )
    }

    pub fn has_constant_coefficients(&self) -> bool {
        self.zeta.is_constant() && self.eta.is_constant() && self.tau.is_constant()
    }

    pub fn pressure(&self, rho: f64) -> Result<f64, ModelError> {
        check_density(rho)?;
        Ok(self.amplitude * rho.powf(self.gamma))
    }

    /// `c_s = sqrt(dP/drho) = sqrt(A gamma rho^(gamma-1))`.
    pub fn sound_speed(&self, rho: f64) -> Result<f64, ModelError> {
        Ok(self.sound_speed_squared(rho)?.sqrt())
    }

    pub fn sound_speed_squared(&self, rho: f64) -> Result<f64, ModelError> {
        check_density(rho)?;
        Ok(self.amplitude * self.gamma * rho.powf(self.gamma - 1.0))
    }

    pub fn eval_transport(&self, inv: Invariants) -> Result<Transport, ModelError> {
        check_density(inv.rho)?;
        let zeta = positive("zeta", self.zeta.eval(inv))?;
        let eta = positive("eta", self.eta.eval(inv))?;
        let tau = positive("tau", self.tau.eval(inv))?;
        Ok(Transport { zeta, eta, tau })
    }
}

fn check_density(rho: f64) -> Result<(), ModelError> {
    if rho.is_finite() && rho > 0.0 {
        Ok(())
    } else {
        Err(ModelError::Domain {
            quantity: "density",
            value: rho,
        })
    }
}

fn positive(coefficient: &'static str, value: f64) -> Result<f64, ModelError> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(ModelError::Material { coefficient, value })
    }
}

/// The constant state outside the initial support.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceState {
    pub rho_bar: f64,
    pub pi_bar: f64,
    pub v_bar: Vec3,
    /// Radius of the initial support.
    pub radius: f64,
}

impl ReferenceState {
    pub fn at_rest(rho_bar: f64, radius: f64) -> Self {
        Self {
            rho_bar,
            pi_bar: 0.0,
            v_bar: [0.0; 3],
            radius,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.rho_bar.is_finite() && self.rho_bar > 0.0) {
            return Err(ModelError::Domain {
                quantity: "rho_bar",
                value: self.rho_bar,
            });
        }
        if !(self.radius.is_finite() && self.radius > 0.0) {
            return Err(ModelError::Domain {
                quantity: "support radius R",
                value: self.radius,
            });
        }
        if !self.pi_bar.is_finite() || !self.v_bar.iter().all(|x| x.is_finite()) {
            return Err(ModelError::InvalidState("non-finite reference state".into()));
        }
        Ok(())
    }

    /// Front speed `sqrt(c_s^2 + zeta / (rho tau))` evaluated on the reference state.
    pub fn front_speed(&self, law: &MaterialLaw) -> Result<f64, ModelError> {
        let cs2 = law.sound_speed_squared(self.rho_bar)?;
        let inv = BulkState::new(self.rho_bar, self.v_bar, self.pi_bar).invariants();
        let tr = law.eval_transport(inv)?;
        Ok((cs2 + tr.zeta / (self.rho_bar * tr.tau)).sqrt())
    }

    /// Fast speed `sqrt(c_s^2 + (zeta + 4 eta / 3) / (rho tau))` of the shear system on the reference state.
    pub fn shear_front_speed(&self, law: &MaterialLaw) -> Result<f64, ModelError> {
        let cs2 = law.sound_speed_squared(self.rho_bar)?;
        let inv = ShearState::new(self.rho_bar, self.v_bar, StressTensor::isotropic(self.pi_bar)).invariants();
        let tr = law.eval_transport(inv)?;
        Ok((cs2 + (tr.zeta + 4.0 * tr.eta / 3.0) / (self.rho_bar * tr.tau)).sqrt())
    }
}
