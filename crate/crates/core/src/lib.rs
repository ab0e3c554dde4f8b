//! Adiabatic charge transport driven by uniform shears of Hückel rings and
//! helical chains.
//!
//! The crate is organised bottom-up:
//!
//! - [`model`] builds the sheared necklace and trimer Hamiltonians and the
//!   [`ParametricFamily`](model::ParametricFamily) trait every numerical
//!   routine consumes.
//! - [`spectral`] holds the Jacobi eigensolver, band projections and gaps.
//! - [`berry`] computes gauge-invariant adiabatic curvature, Longuet-Higgins
//!   phases and cycle charges.
//! - [`twolevel`] is the effective 2×2 crossing theory.
//! - [`bands`] treats the infinite helix as a direct integral over Bloch
//!   momentum: band structure, axial curvature, Chern numbers.
//! - [`evolution`] integrates the time-dependent Schrödinger equation and
//!   checks the adiabatic operator identity.
//! - [`jahnteller`] minimises the static energy functional over shear and flux.
//!
//! Units: ħ = e = 1. Flux enters through the angle ϑ = 2πφ/Φ₀ everywhere
//! except in [`jahnteller`], which keeps Φ₀ explicit.

// `!(x > 0.0)` is how domain checks reject NaN along with the bad values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bands;
pub mod berry;
mod error;
pub mod evolution;
pub mod jahnteller;
pub mod linalg;
pub mod model;
pub(crate) mod quad;
pub mod spectral;
pub mod twolevel;

pub use error::{Error, Result};
pub use num_complex::Complex64;
