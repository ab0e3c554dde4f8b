use super::{Derivatives, FluxAngle, HermitianOperator, HoppingLaw, ParametricFamily};
use crate::linalg::CMatrix;
use crate::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

fn re(v: f64) -> Complex64 {
    Complex64::new(v, 0.0)
}

/// The 3×3 Hückel matrix of a triangle with hoppings `a` (sites 1–2), `b`
/// (sites 2–3) and `c` (sites 3–1). The flux phase sits on the `c` bond.
pub fn trimer_hamiltonian(a: f64, b: f64, c: f64, flux: FluxAngle) -> HermitianOperator {
    let xi = flux.xi();
    let mut m = CMatrix::zeros((3, 3));
    m[[0, 1]] = re(a);
    m[[1, 0]] = re(a);
    m[[1, 2]] = re(b);
    m[[2, 1]] = re(b);
    m[[0, 2]] = xi.conj() * c;
    m[[2, 0]] = xi * c;
    HermitianOperator(m)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrimerHoppings {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl TrimerHoppings {
    pub fn hamiltonian(&self, flux: FluxAngle) -> HermitianOperator {
        trimer_hamiltonian(self.a, self.b, self.c, flux)
    }
}

/// Phases `u` with side amplitude `h(1) + 2h′(1) Re(u x)`, in the order a, b, c.
fn side_phases() -> [Complex64; 3] {
    let omega = Complex64::from_polar(1.0, TAU / 3.0);
    [omega.conj(), re(1.0), omega]
}

/// Hoppings of the equilateral trimer under the small shear `x`, to first
/// order in `x`.
pub fn trimer_hoppings(x: Complex64, hopping: &HoppingLaw) -> TrimerHoppings {
    let h1 = hopping.h1();
    let dh = hopping.dh1();
    let [a, b, c] = side_phases().map(|u| h1 + 2.0 * dh * (u * x).re);
    TrimerHoppings { a, b, c }
}

/// Hoppings along the circle `x = eps·exp(2πi k/n)`, `k = 0..n`.
pub fn trimer_shear_cycle(eps: f64, n_samples: usize, hopping: &HoppingLaw) -> Result<Vec<TrimerHoppings>> {
    if !(eps >= 0.0) {
        return Err(Error::Domain(format!("cycle radius must be nonnegative, got {eps}")));
    }
    if n_samples < 8 {
        return Err(Error::Domain(format!("a cycle needs at least 8 samples, got {n_samples}")));
    }
    Ok((0..n_samples)
        .map(|k| {
            let x = Complex64::from_polar(eps, TAU * k as f64 / n_samples as f64);
            trimer_hoppings(x, hopping)
        })
        .collect())
}

/// The trimer as a function of shear and flux, with the first-order side
/// amplitudes of [`trimer_hoppings`].
#[derive(Debug, Clone, Copy, Default)]
pub struct TrimerCycleModel {
    pub hopping: HoppingLaw,
}

impl TrimerCycleModel {
    pub fn new(hopping: HoppingLaw) -> Self {
        TrimerCycleModel { hopping }
    }
}

impl ParametricFamily for TrimerCycleModel {
    fn dim(&self) -> usize {
        3
    }

    fn hamiltonian(&self, x: Complex64, theta: f64) -> HermitianOperator {
        trimer_hoppings(x, &self.hopping).hamiltonian(FluxAngle(theta))
    }

    fn derivatives(&self, x: Complex64, theta: f64) -> Derivatives {
        let dh = self.hopping.dh1();
        let [ua, ub, uc] = side_phases();
        let along = |d: [f64; 3]| trimer_hamiltonian(d[0], d[1], d[2], FluxAngle(theta)).into_matrix();
        let d_x1 = along([ua.re, ub.re, uc.re].map(|v| 2.0 * dh * v));
        let d_x2 = along([ua.im, ub.im, uc.im].map(|v| -2.0 * dh * v));
        let h = self.hamiltonian(x, theta);
        let mut d_theta = CMatrix::zeros((3, 3));
        d_theta[[2, 0]] = Complex64::i() * h.matrix()[[2, 0]];
        d_theta[[0, 2]] = -Complex64::i() * h.matrix()[[0, 2]];
        Derivatives { d_theta, d_x1, d_x2 }
    }
}

/// Jacobi shape coordinates of a triangle: overall size `q = a² + b² + c²`
/// and the point `(X, Y)` of the unit disc. The equilateral triangle is the
/// centre, degenerate (collinear) triangles the boundary circle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrimerShape {
    pub q: f64,
    pub x: f64,
    pub y: f64,
}

impl TrimerShape {
    /// Polar angle on the shape sphere, with `sin θ = √(X² + Y²)`.
    pub fn theta_shape(&self) -> f64 {
        self.x.hypot(self.y).min(1.0).asin()
    }

    pub fn phi_shape(&self) -> f64 {
        self.y.atan2(self.x)
    }

    pub fn is_degenerate(&self, tol: f64) -> bool {
        (self.x.hypot(self.y) - 1.0).abs() < tol
    }
}

/// Squared side lengths `(a², b², c²)` of the triangle with the given shape.
pub fn sides_from_jacobi(shape: &TrimerShape) -> [f64; 3] {
    let s = shape.q / 3.0;
    let r3 = 3f64.sqrt() / 2.0;
    [s * (1.0 + shape.x), s * (1.0 - shape.x / 2.0 - r3 * shape.y), s * (1.0 - shape.x / 2.0 + r3 * shape.y)]
}

/// Inverse of [`sides_from_jacobi`].
pub fn jacobi_from_sides(a2: f64, b2: f64, c2: f64) -> Result<TrimerShape> {
    if a2 < 0.0 || b2 < 0.0 || c2 < 0.0 {
        return Err(Error::Domain(format!("negative squared side in ({a2}, {b2}, {c2})")));
    }
    let q = a2 + b2 + c2;
    if q == 0.0 {
        return Err(Error::Domain("triangle has zero size".into()));
    }
    let x = 3.0 * a2 / q - 1.0;
    let y = 3f64.sqrt() * (c2 - b2) / q;
    let r2 = x * x + y * y;
    if r2 > 1.0 + 1e-12 {
        return Err(Error::Domain(format!("sides violate the triangle inequality (X² + Y² = {r2})")));
    }
    Ok(TrimerShape { q, x, y })
}
