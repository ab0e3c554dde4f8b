//! Sheared Hückel Hamiltonians.
//!
//! A uniform shear of the plane is the complex number `x` acting on a bond
//! vector as `d → d + x d̄`. Hopping amplitudes depend on the squared bond
//! length through a [`HoppingLaw`]. Flux is threaded through the ring as a
//! phase `ξ = exp(iϑ)` on one bond.

mod family;
mod necklace;
mod trimer;

pub use family::{Derivatives, ParametricFamily};
pub use necklace::{
    bond_vectors, linearized_necklace, necklace_hamiltonian, necklace_hamiltonian_with_flux_bond, sheared_length_sq, LinearizedNecklace,
    LinearizedNecklaceModel, NecklaceModel, NecklaceSpec,
};
pub use trimer::{
    jacobi_from_sides, sides_from_jacobi, trimer_hamiltonian, trimer_hoppings, trimer_shear_cycle, TrimerCycleModel, TrimerHoppings, TrimerShape,
};

use crate::linalg::{self, CMatrix};
use crate::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Bond amplitude as a function of squared bond length, normalised so the
/// unstrained bond has `s = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HoppingLaw {
    /// `h(s) = t0 · exp(−β (s − 1) / 2)`
    Exponential { t0: f64, beta: f64 },
    /// `h(s) = h1 + slope · (s − 1)`
    Linear { h1: f64, slope: f64 },
}

impl Default for HoppingLaw {
    fn default() -> Self {
        HoppingLaw::Exponential { t0: 1.0, beta: 2.0 }
    }
}

impl HoppingLaw {
    pub fn exponential(t0: f64, beta: f64) -> Result<Self> {
        if !(t0 > 0.0) || !beta.is_finite() {
            return Err(Error::Domain(format!("exponential hopping needs t0 > 0, got t0 = {t0}, β = {beta}")));
        }
        Ok(HoppingLaw::Exponential { t0, beta })
    }

    pub fn linear(h1: f64, slope: f64) -> Result<Self> {
        if !(h1 > 0.0) || !slope.is_finite() {
            return Err(Error::Domain(format!("linear hopping needs h(1) > 0, got {h1}")));
        }
        Ok(HoppingLaw::Linear { h1, slope })
    }

    pub fn evaluate(&self, s: f64) -> f64 {
        match *self {
            HoppingLaw::Exponential { t0, beta } => t0 * (-beta * (s - 1.0) / 2.0).exp(),
            HoppingLaw::Linear { h1, slope } => h1 + slope * (s - 1.0),
        }
    }

    pub fn derivative(&self, s: f64) -> f64 {
        match *self {
            HoppingLaw::Exponential { t0, beta } => -0.5 * beta * t0 * (-beta * (s - 1.0) / 2.0).exp(),
            HoppingLaw::Linear { slope, .. } => slope,
        }
    }

    /// h(1)
    pub fn h1(&self) -> f64 {
        match *self {
            HoppingLaw::Exponential { t0, .. } => t0,
            HoppingLaw::Linear { h1, .. } => h1,
        }
    }

    /// h′(1)
    pub fn dh1(&self) -> f64 {
        match *self {
            HoppingLaw::Exponential { t0, beta } => -0.5 * beta * t0,
            HoppingLaw::Linear { slope, .. } => slope,
        }
    }
}

/// Uniform shear `x = x₁ + i x₂`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Shear(pub Complex64);

impl Shear {
    /// Beyond this modulus the linearised shear theory is not trustworthy.
    pub const LINEAR_REGIME: f64 = 0.5;

    pub fn new(re: f64, im: f64) -> Self {
        Shear(Complex64::new(re, im))
    }

    pub fn polar(radius: f64, angle: f64) -> Self {
        Shear(Complex64::from_polar(radius, angle))
    }

    pub fn value(&self) -> Complex64 {
        self.0
    }

    pub fn in_linear_regime(&self) -> bool {
        self.0.norm() < Self::LINEAR_REGIME
    }

    pub(crate) fn warn_if_nonlinear(&self) {
        if !self.in_linear_regime() {
            log::warn!("shear |x| = {:.3} is outside the linear regime |x| < {}", self.0.norm(), Self::LINEAR_REGIME);
        }
    }
}

impl From<Complex64> for Shear {
    fn from(x: Complex64) -> Self {
        Shear(x)
    }
}

/// Flux angle ϑ = 2πφ/Φ₀.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FluxAngle(pub f64);

impl FluxAngle {
    pub fn zero() -> Self {
        FluxAngle(0.0)
    }

    /// From a flux φ measured in units where the flux quantum is `phi0`.
    pub fn from_flux(phi: f64, phi0: f64) -> Self {
        FluxAngle(std::f64::consts::TAU * phi / phi0)
    }

    pub fn angle(&self) -> f64 {
        self.0
    }

    /// ξ = exp(iϑ)
    pub fn xi(&self) -> Complex64 {
        Complex64::from_polar(1.0, self.0)
    }
}

/// Dense Hermitian matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator(CMatrix);

impl HermitianOperator {
    /// Componentwise tolerance, relative to the largest entry.
    pub const TOLERANCE: f64 = 1e-14;

    pub fn new(m: CMatrix) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::Domain(format!("operator must be square, got {}x{}", m.nrows(), m.ncols())));
        }
        let defect = linalg::hermiticity_defect(&m);
        if defect > Self::TOLERANCE * linalg::max_abs(&m).max(1.0) {
            return Err(Error::NotHermitian(defect));
        }
        Ok(Self::symmetrized(m))
    }

    /// Replaces `m` by `(m + m†)/2`; callers guarantee `m` is Hermitian up to
    /// rounding.
    pub(crate) fn symmetrized(m: CMatrix) -> Self {
        let sym = (&m + &linalg::dagger(&m)).mapv(|z| z * 0.5);
        HermitianOperator(sym)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }
}
