use super::HermitianOperator;
use crate::linalg::CMatrix;
use num_complex::Complex64;

/// Analytic first derivatives of `H(x, ϑ)`, with `x = x₁ + i x₂`.
#[derive(Debug, Clone)]
pub struct Derivatives {
    pub d_theta: CMatrix,
    pub d_x1: CMatrix,
    pub d_x2: CMatrix,
}

impl Derivatives {
    /// Wirtinger derivative ∂_x = (∂₁ − i∂₂)/2.
    pub fn d_x(&self) -> CMatrix {
        let half = Complex64::new(0.5, 0.0);
        let half_i = Complex64::new(0.0, 0.5);
        self.d_x1.mapv(|z| z * half) - self.d_x2.mapv(|z| z * half_i)
    }

    /// ∂_x̄ = (∂₁ + i∂₂)/2.
    pub fn d_xbar(&self) -> CMatrix {
        let half = Complex64::new(0.5, 0.0);
        let half_i = Complex64::new(0.0, 0.5);
        self.d_x1.mapv(|z| z * half) + self.d_x2.mapv(|z| z * half_i)
    }
}

/// A two-parameter family of Hamiltonians: complex shear `x` and flux angle ϑ
/// (or Bloch momentum, for chains).
pub trait ParametricFamily: Sync {
    fn dim(&self) -> usize;

    fn hamiltonian(&self, x: Complex64, theta: f64) -> HermitianOperator;

    fn derivatives(&self, x: Complex64, theta: f64) -> Derivatives;
}

impl<T: ParametricFamily + ?Sized> ParametricFamily for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn hamiltonian(&self, x: Complex64, theta: f64) -> HermitianOperator {
        (**self).hamiltonian(x, theta)
    }

    fn derivatives(&self, x: Complex64, theta: f64) -> Derivatives {
        (**self).derivatives(x, theta)
    }
}
