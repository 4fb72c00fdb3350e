//! Relaxation hydrodynamics with bulk and shear viscosity: model, characteristic
//! analysis, linear stability, a 1D finite-volume solver and breakdown diagnostics.

// NaN must fail these checks, so `!(x > 0.0)` is intended throughout.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod fluid_model;
pub mod quasilinear;
pub mod scenario;
pub mod solver;
pub mod stability;
