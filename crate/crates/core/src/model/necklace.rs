use super::{Derivatives, FluxAngle, HermitianOperator, HoppingLaw, ParametricFamily, Shear};
use crate::linalg::CMatrix;
use crate::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Ring of `p` equidistant atoms on a circle of perimeter `p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NecklaceSpec {
    p: usize,
    hopping: HoppingLaw,
}

impl NecklaceSpec {
    pub fn new(p: usize, hopping: HoppingLaw) -> Result<Self> {
        if p < 3 {
            return Err(Error::TooFewSites(p));
        }
        if p.is_multiple_of(2) {
            return Err(Error::EvenSiteCount(p));
        }
        Ok(NecklaceSpec { p, hopping })
    }

    pub fn sites(&self) -> usize {
        self.p
    }

    pub fn hopping(&self) -> HoppingLaw {
        self.hopping
    }

    /// θ = 2π/p
    pub fn angle(&self) -> f64 {
        TAU / self.p as f64
    }

    /// ω = exp(iθ)
    pub fn omega(&self) -> Complex64 {
        Complex64::from_polar(1.0, self.angle())
    }

    /// Sites joined by bond `j` (1-based): `(j−1, j mod p)`, zero-based.
    fn bond_sites(&self, j: usize) -> (usize, usize) {
        (j - 1, j % self.p)
    }
}

/// Unstrained bond vectors `d_j = i ω^{j−1/2}`, `j = 1..p`.
pub fn bond_vectors(spec: &NecklaceSpec) -> Vec<Complex64> {
    let theta = spec.angle();
    (1..=spec.p).map(|j| I * Complex64::from_polar(1.0, theta * (j as f64 - 0.5))).collect()
}

/// Squared length of `d + x d̄`: `|d|² + x d̄² + x̄ d² + |x|²|d|²`.
pub fn sheared_length_sq(d: Complex64, x: Shear) -> f64 {
    let x = x.value();
    let dd = d.norm_sqr();
    let cross = x * d.conj() * d.conj() + x.conj() * d * d;
    dd + cross.re + x.norm_sqr() * dd
}

fn place_bond(m: &mut CMatrix, (a, b): (usize, usize), amplitude: Complex64) {
    m[[a, b]] = amplitude;
    m[[b, a]] = amplitude.conj();
}

/// Full (non-linearised) sheared necklace with the flux phase on bond `flux_bond`
/// (1-based). Bond `j` joins sites `(j−1, j mod p)` and carries `ξh` in the
/// entry `[j−1][j mod p]`, so the phase around the ring is `ξ` whichever bond
/// holds it.
pub fn necklace_hamiltonian_with_flux_bond(spec: &NecklaceSpec, x: Shear, flux: FluxAngle, flux_bond: usize) -> Result<HermitianOperator> {
    let p = spec.p;
    if !(1..=p).contains(&flux_bond) {
        return Err(Error::IndexOutOfRange { index: flux_bond, dim: p });
    }
    x.warn_if_nonlinear();
    let mut m = CMatrix::zeros((p, p));
    for (j, d) in bond_vectors(spec).into_iter().enumerate() {
        let j = j + 1;
        let amp = Complex64::new(spec.hopping.evaluate(sheared_length_sq(d, x)), 0.0);
        let phase = if j == flux_bond { flux.xi() } else { Complex64::new(1.0, 0.0) };
        place_bond(&mut m, spec.bond_sites(j), amp * phase);
    }
    Ok(HermitianOperator(m))
}

/// Sheared necklace Hamiltonian with the flux phase on the `(p, 1)` bond.
pub fn necklace_hamiltonian(spec: &NecklaceSpec, x: Shear, flux: FluxAngle) -> Result<HermitianOperator> {
    necklace_hamiltonian_with_flux_bond(spec, x, flux, spec.p)
}

/// Coefficients of `H(x) = H₀ + x ∂_xH + x̄ ∂_x̄H` at zero flux.
#[derive(Debug, Clone)]
pub struct LinearizedNecklace {
    pub h0: HermitianOperator,
    pub d_x: CMatrix,
    pub d_xbar: CMatrix,
}

impl LinearizedNecklace {
    pub fn evaluate(&self, x: Complex64) -> HermitianOperator {
        let m = self.h0.matrix() + &self.d_x.mapv(|z| z * x) + &self.d_xbar.mapv(|z| z * x.conj());
        HermitianOperator::symmetrized(m)
    }
}

/// Linearisation of the necklace in the shear: bond `j` carries
/// `−h′(1) ω^{2j−1}` in `∂_x̄H` and its conjugate in `∂_xH`.
pub fn linearized_necklace(spec: &NecklaceSpec) -> LinearizedNecklace {
    let p = spec.p;
    let h1 = spec.hopping.h1();
    let dh1 = spec.hopping.dh1();
    let omega = spec.omega();
    let mut h0 = CMatrix::zeros((p, p));
    let mut d_xbar = CMatrix::zeros((p, p));
    for j in 1..=p {
        let (a, b) = spec.bond_sites(j);
        h0[[a, b]] = Complex64::new(h1, 0.0);
        h0[[b, a]] = Complex64::new(h1, 0.0);
        let coupling = -dh1 * omega.powi(2 * j as i32 - 1);
        d_xbar[[a, b]] = coupling;
        d_xbar[[b, a]] = coupling;
    }
    let d_x = d_xbar.mapv(|z| z.conj());
    LinearizedNecklace { h0: HermitianOperator(h0), d_x, d_xbar }
}

fn apply_flux(m: &mut CMatrix, (a, b): (usize, usize), theta: f64) {
    let xi = Complex64::from_polar(1.0, theta);
    m[[a, b]] *= xi;
    m[[b, a]] *= xi.conj();
}

fn flux_derivative(m: &CMatrix, (a, b): (usize, usize)) -> CMatrix {
    let mut d = CMatrix::zeros(m.raw_dim());
    d[[a, b]] = I * m[[a, b]];
    d[[b, a]] = -I * m[[b, a]];
    d
}

/// The exact sheared necklace as a function of `(x, ϑ)`. For a helical chain ϑ
/// is the Bloch momentum.
#[derive(Debug, Clone, Copy)]
pub struct NecklaceModel {
    spec: NecklaceSpec,
    flux_bond: usize,
}

impl NecklaceModel {
    /// Flux on the `(p, 1)` bond.
    pub fn new(spec: NecklaceSpec) -> Self {
        NecklaceModel { spec, flux_bond: spec.p }
    }

    /// Flux on bond `flux_bond` (1-based). The spectrum does not depend on the
    /// choice, but the current operator `∂_ϑH` and hence the pointwise
    /// curvature do, by terms that integrate to zero around closed loops.
    pub fn with_flux_bond(spec: NecklaceSpec, flux_bond: usize) -> Result<Self> {
        if !(1..=spec.p).contains(&flux_bond) {
            return Err(Error::IndexOutOfRange { index: flux_bond, dim: spec.p });
        }
        Ok(NecklaceModel { spec, flux_bond })
    }

    pub fn spec(&self) -> &NecklaceSpec {
        &self.spec
    }
}

impl ParametricFamily for NecklaceModel {
    fn dim(&self) -> usize {
        self.spec.p
    }

    fn hamiltonian(&self, x: Complex64, theta: f64) -> HermitianOperator {
        necklace_hamiltonian_with_flux_bond(&self.spec, Shear(x), FluxAngle(theta), self.flux_bond).expect("validated at construction")
    }

    fn derivatives(&self, x: Complex64, theta: f64) -> Derivatives {
        let p = self.spec.p;
        let law = self.spec.hopping;
        let mut d1 = CMatrix::zeros((p, p));
        let mut d2 = CMatrix::zeros((p, p));
        for (j, d) in bond_vectors(&self.spec).into_iter().enumerate() {
            // w = d + x d̄; ∂s/∂x₁ = 2 Re(w̄ d̄), ∂s/∂x₂ = −2 Im(w̄ d̄)
            let w = d + x * d.conj();
            let wd = w.conj() * d.conj();
            let slope = law.derivative(w.norm_sqr());
            let sites = self.spec.bond_sites(j + 1);
            place_bond(&mut d1, sites, Complex64::new(2.0 * slope * wd.re, 0.0));
            place_bond(&mut d2, sites, Complex64::new(-2.0 * slope * wd.im, 0.0));
        }
        let bond = self.spec.bond_sites(self.flux_bond);
        apply_flux(&mut d1, bond, theta);
        apply_flux(&mut d2, bond, theta);
        let h = self.hamiltonian(x, theta);
        Derivatives { d_theta: flux_derivative(h.matrix(), bond), d_x1: d1, d_x2: d2 }
    }
}

/// The first-order shear model `H₀ + x∂_xH + x̄∂_x̄H` with flux on the `(p, 1)`
/// bond.
#[derive(Debug, Clone)]
pub struct LinearizedNecklaceModel {
    p: usize,
    lin: LinearizedNecklace,
}

impl LinearizedNecklaceModel {
    pub fn new(spec: &NecklaceSpec) -> Self {
        LinearizedNecklaceModel { p: spec.p, lin: linearized_necklace(spec) }
    }

    pub fn coefficients(&self) -> &LinearizedNecklace {
        &self.lin
    }
}

impl ParametricFamily for LinearizedNecklaceModel {
    fn dim(&self) -> usize {
        self.p
    }

    fn hamiltonian(&self, x: Complex64, theta: f64) -> HermitianOperator {
        let mut m = self.lin.evaluate(x).into_matrix();
        apply_flux(&mut m, (self.p - 1, 0), theta);
        HermitianOperator(m)
    }

    fn derivatives(&self, x: Complex64, theta: f64) -> Derivatives {
        let mut d1 = &self.lin.d_x + &self.lin.d_xbar;
        let mut d2 = (&self.lin.d_x - &self.lin.d_xbar).mapv(|z| z * I);
        let bond = (self.p - 1, 0);
        apply_flux(&mut d1, bond, theta);
        apply_flux(&mut d2, bond, theta);
        let h = self.hamiltonian(x, theta);
        Derivatives { d_theta: flux_derivative(h.matrix(), bond), d_x1: d1, d_x2: d2 }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{hermiticity_defect, max_abs};
    use crate::spectral::eigensystem;
    use std::f64::consts::PI;

    fn spec(p: usize) -> NecklaceSpec {
        NecklaceSpec::new(p, HoppingLaw::default()).unwrap()
    }

    #[test]
    fn rejects_small_and_even_rings() {
        assert_eq!(NecklaceSpec::new(1, HoppingLaw::default()), Err(Error::TooFewSites(1)));
        assert_eq!(NecklaceSpec::new(4, HoppingLaw::default()), Err(Error::EvenSiteCount(4)));
    }

    #[test]
    fn bonds_are_unit_and_close() {
        let d = bond_vectors(&spec(3));
        let expect = Complex64::from_polar(1.0, PI / 2.0 + PI / 3.0);
        assert!((d[0] - expect).norm() < 1e-15);
        for p in [3, 5, 7, 9] {
            let d = bond_vectors(&spec(p));
            assert!(d.iter().all(|z| (z.norm_sqr() - 1.0).abs() < 1e-15));
            assert!(d.iter().sum::<Complex64>().norm() < 1e-14);
        }
    }

    #[test]
    fn stretch_examples() {
        let one = Complex64::new(1.0, 0.0);
        assert_eq!(sheared_length_sq(one, Shear::default()), 1.0);
        assert!((sheared_length_sq(one, Shear::new(0.1, 0.0)) - 1.21).abs() < 1e-15);
        assert!((sheared_length_sq(I, Shear::new(0.1, 0.0)) - 0.81).abs() < 1e-15);
        // agrees with |d + x d̄|² directly
        let d = Complex64::new(0.3, -1.1);
        let x = Shear::new(0.07, 0.2);
        assert!((sheared_length_sq(d, x) - (d + x.0 * d.conj()).norm_sqr()).abs() < 1e-14);
    }

    #[test]
    fn unstrained_trimer_is_adjacency() {
        let h = necklace_hamiltonian(&spec(3), Shear::default(), FluxAngle::zero()).unwrap();
        for i in 0..3 {
            assert_eq!(h.matrix()[[i, i]], Complex64::new(0.0, 0.0));
            for j in 0..3 {
                if i != j {
                    assert!((h.matrix()[[i, j]] - 1.0).norm() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn unstrained_pentagon_spectrum() {
        let h = necklace_hamiltonian(&spec(5), Shear::default(), FluxAngle::zero()).unwrap();
        let es = eigensystem(&h).unwrap();
        let expect = [-1.618_033_988_749_895, -1.618_033_988_749_895, 0.618_033_988_749_895, 0.618_033_988_749_895, 2.0];
        for (e, x) in es.values().iter().zip(expect) {
            assert!((e - x).abs() < 1e-12, "{e} vs {x}");
        }
    }

    #[test]
    fn hermitian_for_any_shear_and_flux() {
        for p in [3, 5, 7] {
            let h = necklace_hamiltonian(&spec(p), Shear::new(0.13, -0.21), FluxAngle(0.77)).unwrap();
            assert!(hermiticity_defect(h.matrix()) <= 1e-14);
        }
    }

    #[test]
    fn flux_gauge_and_periodicity() {
        let s = spec(5);
        let x = Shear::new(0.05, 0.08);
        let base = eigensystem(&necklace_hamiltonian(&s, x, FluxAngle(0.9)).unwrap()).unwrap();
        for bond in 1..=5 {
            let moved = necklace_hamiltonian_with_flux_bond(&s, x, FluxAngle(0.9), bond).unwrap();
            let es = eigensystem(&moved).unwrap();
            for (a, b) in base.values().iter().zip(es.values()) {
                assert!((a - b).abs() < 1e-12);
            }
        }
        let shifted = eigensystem(&necklace_hamiltonian(&s, x, FluxAngle(0.9 + TAU)).unwrap()).unwrap();
        for (a, b) in base.values().iter().zip(shifted.values()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn retake_matrix_for_trimer() {
        let lin = linearized_necklace(&spec(3));
        let w = spec(3).omega();
        // −h′(1) = 1 for the default law
        assert!((lin.d_xbar[[0, 1]] - w).norm() < 1e-14);
        assert!((lin.d_xbar[[1, 2]] - 1.0).norm() < 1e-14);
        assert!((lin.d_xbar[[0, 2]] - w.conj()).norm() < 1e-14);
        assert!((lin.d_xbar[[2, 0]] - w.conj()).norm() < 1e-14);
        assert!(max_abs(&(&lin.d_x - &lin.d_xbar.mapv(|z| z.conj()))) == 0.0);
    }

    #[test]
    fn flat_hopping_has_no_shear_derivative() {
        let s = NecklaceSpec::new(5, HoppingLaw::linear(1.0, 0.0).unwrap()).unwrap();
        let lin = linearized_necklace(&s);
        assert_eq!(max_abs(&lin.d_x), 0.0);
        assert_eq!(max_abs(&lin.d_xbar), 0.0);
    }

    #[test]
    fn central_difference_matches_linear_part() {
        let s = spec(5);
        let lin = linearized_necklace(&s);
        let analytic = &lin.d_x + &lin.d_xbar;
        let fd_err = |delta: f64| {
            let hp = necklace_hamiltonian(&s, Shear::new(delta, 0.0), FluxAngle::zero()).unwrap();
            let hm = necklace_hamiltonian(&s, Shear::new(-delta, 0.0), FluxAngle::zero()).unwrap();
            let fd = (hp.matrix() - hm.matrix()).mapv(|z| z / (2.0 * delta));
            max_abs(&(fd - &analytic))
        };
        let e = fd_err(1e-4);
        assert!(e < 1e-4, "{e}");
        assert!(fd_err(1e-3) > e);
    }

    #[test]
    fn linearization_error_is_quadratic() {
        let s = spec(7);
        let lin = linearized_necklace(&s);
        let angle = 0.4;
        let radii = [0.01, 0.02, 0.04, 0.1];
        let errs: Vec<f64> = radii
            .iter()
            .map(|&r| {
                let x = Complex64::from_polar(r, angle);
                let exact = necklace_hamiltonian(&s, Shear(x), FluxAngle::zero()).unwrap();
                max_abs(&(exact.matrix() - lin.evaluate(x).matrix()))
            })
            .collect();
        let slope = (errs[3] / errs[0]).ln() / (radii[3] / radii[0]).ln();
        assert!((slope - 2.0).abs() < 0.1, "slope {slope}");
        assert!(errs.iter().zip(radii).all(|(e, r)| e / (r * r) < 10.0));
    }

    #[test]
    fn analytic_derivatives_match_finite_differences() {
        let s = spec(5);
        let models: [Box<dyn ParametricFamily>; 3] =
            [Box::new(NecklaceModel::new(s)), Box::new(NecklaceModel::with_flux_bond(s, 3).unwrap()), Box::new(LinearizedNecklaceModel::new(&s))];
        let x = Complex64::new(0.07, -0.03);
        let theta = 0.6;
        let h = 1e-6;
        for m in models.iter() {
            let d = m.derivatives(x, theta);
            let fd = |dx: Complex64, dt: f64| {
                (m.hamiltonian(x + dx, theta + dt).matrix() - m.hamiltonian(x - dx, theta - dt).matrix()).mapv(|z| z / (2.0 * h))
            };
            assert!(max_abs(&(fd(Complex64::new(h, 0.0), 0.0) - &d.d_x1)) < 1e-8);
            assert!(max_abs(&(fd(Complex64::new(0.0, h), 0.0) - &d.d_x2)) < 1e-8);
            assert!(max_abs(&(fd(Complex64::new(0.0, 0.0), h) - &d.d_theta)) < 1e-8);
        }
    }
}
