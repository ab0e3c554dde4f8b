//! Effective two-level description of a crossing,
//! `H = n σ₊ + n̄ σ₋ + n₃ σ₃` with `n ≈ g x^m` and `n₃ ≈ f_ϑ ϑ`.

use crate::linalg::CMatrix;
use crate::model::{Derivatives, HermitianOperator, HoppingLaw, NecklaceSpec, ParametricFamily};
use crate::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossingCoefficients {
    /// Coefficient of the flux angle in `n₃`.
    pub f_theta: f64,
    /// Coefficient of `x^m` in `n`.
    pub g: Complex64,
    /// Order in the shear at which the crossing opens.
    pub m: usize,
    /// +1 for the upper of the two crossing levels, −1 for the lower.
    pub band_sign: i32,
}

impl CrossingCoefficients {
    pub fn new(f_theta: f64, g: Complex64, m: usize, band_sign: i32) -> Result<Self> {
        if m == 0 {
            return Err(Error::Domain("crossing order must be at least 1".into()));
        }
        if band_sign != 1 && band_sign != -1 {
            return Err(Error::Domain(format!("band sign must be ±1, got {band_sign}")));
        }
        Ok(CrossingCoefficients { f_theta, g, m, band_sign })
    }

    pub fn upper(self) -> Self {
        CrossingCoefficients { band_sign: 1, ..self }
    }

    pub fn lower(self) -> Self {
        CrossingCoefficients { band_sign: -1, ..self }
    }

    /// `n = g x^m`
    pub fn n(&self, x: Complex64) -> Complex64 {
        self.g * x.powi(self.m as i32)
    }

    /// `n₃ = f_ϑ ϑ`
    pub fn n3(&self, theta: f64) -> f64 {
        self.f_theta * theta
    }

    /// `|n⃗|`, half the splitting.
    pub fn half_gap(&self, x: Complex64, theta: f64) -> f64 {
        self.n(x).norm().hypot(self.n3(theta))
    }
}

fn sigma_plus() -> CMatrix {
    let mut s = CMatrix::zeros((2, 2));
    s[[1, 0]] = Complex64::new(1.0, 0.0);
    s
}

fn sigma_minus() -> CMatrix {
    let mut s = CMatrix::zeros((2, 2));
    s[[0, 1]] = Complex64::new(1.0, 0.0);
    s
}

fn sigma_3() -> CMatrix {
    let mut s = CMatrix::zeros((2, 2));
    s[[0, 0]] = Complex64::new(-1.0, 0.0);
    s[[1, 1]] = Complex64::new(1.0, 0.0);
    s
}

/// The 2×2 model as a parametric family, so that the general curvature and
/// transport routines can be run on it.
#[derive(Debug, Clone, Copy)]
pub struct TwoLevelModel {
    pub coeffs: CrossingCoefficients,
}

impl TwoLevelModel {
    pub fn new(coeffs: CrossingCoefficients) -> Self {
        TwoLevelModel { coeffs }
    }

    fn assemble(n: Complex64, n3: f64) -> CMatrix {
        sigma_plus().mapv(|z| z * n) + sigma_minus().mapv(|z| z * n.conj()) + sigma_3().mapv(|z| z * n3)
    }
}

impl ParametricFamily for TwoLevelModel {
    fn dim(&self) -> usize {
        2
    }

    fn hamiltonian(&self, x: Complex64, theta: f64) -> HermitianOperator {
        HermitianOperator::new(Self::assemble(self.coeffs.n(x), self.coeffs.n3(theta))).expect("Hermitian by construction")
    }

    fn derivatives(&self, x: Complex64, _theta: f64) -> Derivatives {
        let c = &self.coeffs;
        let dn = c.g * (c.m as f64) * x.powi(c.m as i32 - 1);
        Derivatives {
            d_theta: Self::assemble(Complex64::new(0.0, 0.0), c.f_theta),
            d_x1: Self::assemble(dn, 0.0),
            d_x2: Self::assemble(dn * Complex64::i(), 0.0),
        }
    }
}

/// Leading-order `Tr Ω_ϑx ≈ ± m f_ϑ |g|² |x|^{2m−2} x̄ / (4i |n⃗|³)`.
pub fn leading_curvature(coeffs: &CrossingCoefficients, x: Complex64, theta: f64) -> Result<Complex64> {
    let nn = coeffs.half_gap(x, theta);
    if nn == 0.0 {
        return Err(Error::Singular);
    }
    let m = coeffs.m as f64;
    let r = x.norm();
    let num = coeffs.band_sign as f64 * m * coeffs.f_theta * coeffs.g.norm_sqr() * r.powi(2 * coeffs.m as i32 - 2);
    Ok(x.conj() * num / (Complex64::new(0.0, 4.0) * nn.powi(3)))
}

/// Charge carried around the counterclockwise circle `|x| = eps` at flux
/// angle ϑ, to leading order:
///
/// ```text
/// Q = ∓ 2π² m f_ϑ |g|² eps^{2m} / (|g|² eps^{2m} + f_ϑ² ϑ²)^{3/2}
/// ```
///
/// with the upper sign for the upper level. At ϑ = 0 this is
/// `∓ 2π² m f_ϑ / |g eps^m|`; at fixed ϑ ≠ 0 it vanishes as eps → 0 and peaks
/// at `|g eps^m| = √2 f_ϑ ϑ` with value `4π² m / (3^{3/2} ϑ)`.
pub fn circle_charge(coeffs: &CrossingCoefficients, eps: f64, theta: f64) -> f64 {
    let gx2 = coeffs.g.norm_sqr() * eps.powi(2 * coeffs.m as i32);
    let n3 = coeffs.n3(theta);
    let q = 2.0 * PI * PI * coeffs.m as f64 * coeffs.f_theta * gx2 / (gx2 + n3 * n3).powf(1.5);
    -(coeffs.band_sign as f64) * q
}

/// Radius at which [`circle_charge`] peaks for fixed ϑ ≠ 0.
pub fn circle_charge_peak_radius(coeffs: &CrossingCoefficients, theta: f64) -> f64 {
    (2f64.sqrt() * (coeffs.f_theta * theta).abs() / coeffs.g.norm()).powf(1.0 / coeffs.m as f64)
}

/// Coefficients of the conic crossing of the equilateral trimer, for the
/// upper crossing level: `f_ϑ = h(1)/√3`, `g = 2ω̄h′(1)`, `m = 1`.
pub fn trimer_coefficients(hopping: &HoppingLaw) -> Result<CrossingCoefficients> {
    let dh = hopping.dh1();
    if dh == 0.0 {
        return Err(Error::DegenerateCrossing);
    }
    let omega_bar = Complex64::from_polar(1.0, -TAU / 3.0);
    CrossingCoefficients::new(hopping.h1() / 3f64.sqrt(), omega_bar * (2.0 * dh), 1, 1)
}

/// Coefficients of the crossing between the `±m` doublet levels of the
/// unstrained necklace, from degenerate perturbation theory in the shear to
/// order `m`:
///
/// ```text
/// g = 2(−h′)^m cos((m−1)θ) Π_{k=1}^{m−1} cos((2k−m−1)θ) / (cos mθ − cos((m−2k)θ)) · ω^{2m}
/// f_ϑ = −(2h/p) sin mθ
/// ```
pub fn necklace_coefficients(spec: &NecklaceSpec, m: usize) -> Result<CrossingCoefficients> {
    let p = spec.sites();
    if m == 0 || m > (p - 1) / 2 {
        return Err(Error::Domain(format!("doublet index must lie in 1..={}, got {m}", (p - 1) / 2)));
    }
    let law = spec.hopping();
    if law.dh1() == 0.0 {
        return Err(Error::DegenerateCrossing);
    }
    let theta = spec.angle();
    let mf = m as f64;
    let mut g_real = 2.0 * (-law.dh1()).powi(m as i32) * ((mf - 1.0) * theta).cos();
    for k in 1..m {
        let kf = k as f64;
        let denom = (mf * theta).cos() - ((mf - 2.0 * kf) * theta).cos();
        if denom.abs() < 1e-12 {
            return Err(Error::ResonantDenominator { m, other: m as i64 - 2 * k as i64, value: denom });
        }
        g_real *= ((2.0 * kf - mf - 1.0) * theta).cos() / denom;
    }
    let g = spec.omega().powi(2 * m as i32) * g_real;
    let f_theta = -(2.0 * law.h1() / p as f64) * (mf * theta).sin();
    CrossingCoefficients::new(f_theta, g, m, 1)
}

/// Zero-based indices `(lower, upper)` of the `±m` doublet in the ascending
/// spectrum of the unstrained necklace.
pub fn doublet_levels(p: usize, m: usize) -> (usize, usize) {
    (p - 1 - 2 * m, p - 2 * m)
}
