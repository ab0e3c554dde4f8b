//! Static energy of a molecule near a crossing as a function of shear and
//! spontaneous flux,
//!
//! `E(x, φ) = ±√(|g|²|x|^{2m} + (fφ)²) + (pK/4)|x|² + φ²/(2L)`, `f = 2π f_ϑ/Φ₀`,
//!
//! its minimizers, and the charge carried round the Jahn–Teller circle.

use crate::berry::{transport_cycle, CurvatureMethod, DeformationLoop, TransportOptions};
use crate::model::{NecklaceModel, NecklaceSpec, ParametricFamily};
use crate::spectral::{self, Band};
use crate::twolevel::{circle_charge, doublet_levels, CrossingCoefficients};
use crate::{Error, Result};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

pub const DEFAULT_PHI0: f64 = 137.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JTParameters {
    /// Spring constant `K`.
    pub k_spring: f64,
    /// Inductance constant `L`.
    pub inductance: f64,
    /// Flux quantum; 137 in atomic units.
    pub phi0: f64,
    /// −1 for the lower electronic surface, +1 for the upper.
    pub branch: i32,
    pub coeffs: CrossingCoefficients,
    /// Atoms in the ring, entering the elastic energy `(pK/4)|x|²`.
    pub sites: usize,
    /// Largest shear searched. The two-level surface is only meaningful for
    /// small shears and is unbounded below at large `|x|` when `m ≥ 2`.
    pub r_max: f64,
}

impl JTParameters {
    /// Lower surface, `Φ₀ = 137`, `r_max = 0.5`.
    pub fn new(k_spring: f64, inductance: f64, coeffs: CrossingCoefficients, sites: usize) -> Result<Self> {
        JTParameters { k_spring, inductance, phi0: DEFAULT_PHI0, branch: -1, coeffs, sites, r_max: 0.5 }.validated()
    }

    pub fn with_branch(self, branch: i32) -> Result<Self> {
        JTParameters { branch, ..self }.validated()
    }

    pub fn with_phi0(self, phi0: f64) -> Result<Self> {
        JTParameters { phi0, ..self }.validated()
    }

    pub fn validated(self) -> Result<Self> {
        for (name, v) in [("K", self.k_spring), ("L", self.inductance), ("Phi0", self.phi0), ("r_max", self.r_max)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Domain(format!("{name} must be positive, got {v}")));
            }
        }
        if self.branch != 1 && self.branch != -1 {
            return Err(Error::Domain(format!("branch must be ±1, got {}", self.branch)));
        }
        if self.sites < 3 {
            return Err(Error::TooFewSites(self.sites));
        }
        Ok(self)
    }

    /// `f = 2π f_ϑ/Φ₀`, the flux coefficient of the splitting.
    pub fn f(&self) -> f64 {
        TAU * self.coeffs.f_theta / self.phi0
    }

    fn stiffness(&self) -> f64 {
        self.sites as f64 * self.k_spring / 4.0
    }

    /// Radius `2|g|/(pK)` of the minimizing circle in the conic case.
    pub fn jt_radius(&self) -> f64 {
        2.0 * self.coeffs.g.norm() / (self.sites as f64 * self.k_spring)
    }

    /// `L|f|`, the spontaneous flux in the magnetic case.
    pub fn magnetic_flux(&self) -> f64 {
        self.inductance * self.f().abs()
    }

    fn radial_energy(&self, r: f64, phi: f64) -> f64 {
        let g2 = self.coeffs.g.norm_sqr();
        let s = (g2 * r.powi(2 * self.coeffs.m as i32) + (self.f() * phi).powi(2)).sqrt();
        self.branch as f64 * s + self.stiffness() * r * r + phi * phi / (2.0 * self.inductance)
    }

    /// Gradient and Hessian in `(r, φ)`. Where the square root vanishes its
    /// terms are dropped.
    fn radial_derivatives(&self, r: f64, phi: f64) -> ([f64; 2], [[f64; 2]; 2]) {
        let m = self.coeffs.m as i32;
        let g2 = self.coeffs.g.norm_sqr();
        let f2 = self.f().powi(2);
        let b = self.branch as f64;
        let a = g2 * r.powi(2 * m);
        let s = (a + f2 * phi * phi).sqrt();
        let k2 = 2.0 * self.stiffness();
        let il = 1.0 / self.inductance;
        if s == 0.0 {
            return ([k2 * r, phi * il], [[k2, 0.0], [0.0, il]]);
        }
        let mf = m as f64;
        // ∂_r a = 2m g² r^{2m−1}, ∂_r² a = 2m(2m−1) g² r^{2m−2}
        let ar = 2.0 * mf * g2 * r.powi(2 * m - 1);
        let arr = 2.0 * mf * (2.0 * mf - 1.0) * g2 * r.powi(2 * m - 2);
        let grad = [b * ar / (2.0 * s) + k2 * r, b * f2 * phi / s + phi * il];
        let srr = arr / (2.0 * s) - ar * ar / (4.0 * s.powi(3));
        let spp = f2 / s - f2 * f2 * phi * phi / s.powi(3);
        let srp = -ar * f2 * phi / (2.0 * s.powi(3));
        (grad, [[b * srr + k2, b * srp], [b * srp, b * spp + il]])
    }
}

/// Two-level energy functional at shear `x` and flux `φ`.
pub fn total_energy(params: &JTParameters, x: Complex64, phi: f64) -> f64 {
    params.radial_energy(x.norm(), phi)
}

/// The same functional with the electronic term replaced by the exact doublet
/// level of the necklace, measured from its value at the unstrained crossing.
pub fn total_energy_exact(params: &JTParameters, spec: &NecklaceSpec, x: Complex64, phi: f64) -> Result<f64> {
    let (lo, hi) = doublet_levels(spec.sites(), params.coeffs.m);
    let level = if params.branch < 0 { lo } else { hi };
    let model = NecklaceModel::new(*spec);
    let level_at = |x: Complex64, t: f64| -> Result<f64> { Ok(spectral::eigensystem(&model.hamiltonian(x, t))?.values()[level]) };
    let e = level_at(x, TAU * phi / params.phi0)? - level_at(Complex64::new(0.0, 0.0), 0.0)?;
    Ok(e + params.stiffness() * x.norm_sqr() + phi * phi / (2.0 * params.inductance))
}

/// `∂_φ E_el + φ/L` by central differences, where `E_el` is the electronic
/// term; this is the φ-derivative of the total energy.
pub fn ampere_residual(params: &JTParameters, x: Complex64, phi: f64) -> f64 {
    let h = 1e-6 * phi.abs().max(params.magnetic_flux()).max(1e-6);
    (total_energy(params, x, phi + h) - total_energy(params, x, phi - h)) / (2.0 * h)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MinimizerClass {
    Trivial,
    JtCircle,
    Magnetic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimizerReport {
    pub class: MinimizerClass,
    pub x_star_radius: f64,
    /// Nonnegative representative; the energy is even in `φ`.
    pub phi_star: f64,
    pub energy: f64,
    /// Hessian of the energy in `(Re x, φ)` at `x = x_star_radius`; the
    /// angular direction is flat by symmetry and is left out.
    pub hessian_definite: bool,
    pub gradient_norm: f64,
    pub seeds: usize,
}

const GOLDEN: f64 = 0.618_033_988_749_894_9;

fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let mut c = b - GOLDEN * (b - a);
    let mut d = a + GOLDEN * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() <= 1e-15 * (a.abs() + b.abs()) + 1e-300 {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - GOLDEN * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + GOLDEN * (b - a);
            fd = f(d);
        }
    }
    let mid = 0.5 * (a + b);
    [a, mid, b].into_iter().fold(mid, |best, t| if f(t) < f(best) { t } else { best })
}

/// Alternating golden-section searches in `r` and `φ` on brackets that shrink
/// unless the minimum sits on their edge.
fn descend(params: &JTParameters, seed: (f64, f64), phi_box: f64) -> (f64, f64) {
    let (mut r, mut phi) = seed;
    let (mut wr, mut wp) = (params.r_max / 4.0, phi_box / 4.0);
    for _ in 0..400 {
        let (lo, hi) = ((r - wr).max(0.0), (r + wr).min(params.r_max));
        let nr = golden_section(|t| params.radial_energy(t, phi), lo, hi);
        let r_edge = (nr - lo).abs() < 1e-3 * wr && lo > 0.0 || (hi - nr).abs() < 1e-3 * wr && hi < params.r_max;
        r = nr;
        let np = golden_section(|t| params.radial_energy(r, t), phi - wp, phi + wp);
        let p_edge = (np - phi + wp).abs() < 1e-3 * wp || (phi + wp - np).abs() < 1e-3 * wp;
        phi = np;
        if !r_edge {
            wr *= 0.5;
        }
        if !p_edge {
            wp *= 0.5;
        }
        if wr < 1e-13 * params.r_max && wp < 1e-13 * phi_box {
            break;
        }
    }
    (r, phi)
}

/// Newton iterations on the coordinates that are not pinned at zero.
fn polish(params: &JTParameters, mut r: f64, mut phi: f64) -> (f64, f64) {
    if params.radial_energy(0.0, phi) <= params.radial_energy(r, phi) {
        r = 0.0;
    }
    if params.radial_energy(r, 0.0) <= params.radial_energy(r, phi) {
        phi = 0.0;
    }
    for _ in 0..50 {
        let (g, h) = params.radial_derivatives(r, phi);
        let (dr, dp) = match (r > 0.0, phi != 0.0) {
            (true, true) => {
                let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
                if det <= 0.0 {
                    break;
                }
                ((h[1][1] * g[0] - h[0][1] * g[1]) / det, (h[0][0] * g[1] - h[1][0] * g[0]) / det)
            }
            (true, false) if h[0][0] > 0.0 => (g[0] / h[0][0], 0.0),
            (false, true) if h[1][1] > 0.0 => (0.0, g[1] / h[1][1]),
            _ => break,
        };
        let e0 = params.radial_energy(r, phi);
        let (nr, np) = ((r - dr).max(0.0), phi - dp);
        if params.radial_energy(nr, np) > e0 + 1e-15 * e0.abs().max(1e-300) {
            break;
        }
        r = nr;
        phi = np;
        if dr.abs() <= 1e-16 * r.max(1e-300) && dp.abs() <= 1e-16 * phi.abs().max(1e-300) {
            break;
        }
    }
    (r, phi)
}

fn gradient_norm(params: &JTParameters, r: f64, phi: f64) -> f64 {
    let (g, _) = params.radial_derivatives(r, phi);
    // at r = 0 only an outward slope would matter, and the cone tip of the
    // upper surface has no gradient
    let gr = if r == 0.0 { g[0].min(0.0) } else { g[0] };
    let gp = if r == 0.0 && phi == 0.0 { 0.0 } else { g[1] };
    gr.hypot(gp)
}

fn hessian_definite(params: &JTParameters, r: f64, phi: f64) -> bool {
    let hr = 1e-4 * params.r_max;
    let hp = 1e-4 * params.magnetic_flux().max(phi.abs()).max(1e-8);
    let e = |a: f64, b: f64| total_energy(params, Complex64::new(r + a, 0.0), phi + b);
    let e0 = e(0.0, 0.0);
    let xx = (e(hr, 0.0) - 2.0 * e0 + e(-hr, 0.0)) / (hr * hr);
    let pp = (e(0.0, hp) - 2.0 * e0 + e(0.0, -hp)) / (hp * hp);
    let xp = (e(hr, hp) - e(hr, -hp) - e(-hr, hp) + e(-hr, -hp)) / (4.0 * hr * hp);
    xx > 0.0 && pp > 0.0 && xx * pp - xp * xp > 0.0
}

pub fn minimize(params: &JTParameters) -> Result<MinimizerReport> {
    minimize_seeded(params, 0)
}

/// Global minimizer over `|x| ≤ r_max`, `|φ| ≤ 4L|f|`: descents from the three
/// analytic candidates and 32 random probes, followed by a Newton polish.
pub fn minimize_seeded(params: &JTParameters, seed: u64) -> Result<MinimizerReport> {
    let params = params.validated()?;
    let phi_box = 4.0 * params.magnetic_flux().max(1e-12);
    let mut seeds = vec![(0.0, 0.0), (params.jt_radius().min(params.r_max), 0.0), (0.0, params.magnetic_flux()), (0.0, -params.magnetic_flux())];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    seeds.extend((0..32).map(|_| (rng.gen_range(0.0..params.r_max), rng.gen_range(-phi_box..phi_box))));
    let mut best: Option<(f64, f64, f64)> = None;
    let mut energies = Vec::with_capacity(seeds.len());
    for &s in &seeds {
        let (r, phi) = descend(&params, s, phi_box);
        let e = params.radial_energy(r, phi);
        energies.push(e);
        if best.is_none_or(|b| e < b.2) {
            best = Some((r, phi, e));
        }
    }
    let (r, phi, _) = best.ok_or_else(|| Error::DescentFailed("no seeds".into()))?;
    let (r, phi) = polish(&params, r, phi);
    let phi = phi.abs();
    let grad = gradient_norm(&params, r, phi);
    if grad > 1e-9 {
        let trace: Vec<String> = seeds.iter().zip(&energies).take(8).map(|(s, e)| format!("({:.3e}, {:.3e}) → {e:.6e}", s.0, s.1)).collect();
        return Err(Error::DescentFailed(format!("gradient {grad:.3e} at r = {r:.6e}, φ = {phi:.6e}; seeds: {}", trace.join("; "))));
    }
    let class = match (r > 0.0, phi > 0.0) {
        (false, false) => MinimizerClass::Trivial,
        (true, false) => MinimizerClass::JtCircle,
        (false, true) => MinimizerClass::Magnetic,
        (true, true) => return Err(Error::NotApplicable(format!("minimizer carries both shear {r:.6e} and flux {phi:.6e}"))),
    };
    Ok(MinimizerReport {
        class,
        x_star_radius: r,
        phi_star: phi,
        energy: params.radial_energy(r, phi),
        hessian_definite: hessian_definite(&params, r, phi),
        gradient_norm: grad,
        seeds: seeds.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JtCycleCharge {
    /// `π² K h(1) sin(2π/p) / (2 h′(1)²)`.
    pub closed_form: f64,
    /// Two-level circle charge at the Jahn–Teller radius.
    pub two_level: f64,
    /// Full necklace transport around the same circle, counterclockwise.
    pub numeric: f64,
    pub radius: f64,
    /// `| |numeric| − closed_form | / closed_form`.
    pub relative_difference: f64,
}

/// Charge carried once round the circle of ground-state distortions, in
/// units of `e`. Only the conic case has such a circle.
pub fn jt_cycle_charge(params: &JTParameters, spec: &NecklaceSpec) -> Result<JtCycleCharge> {
    let params = params.validated()?;
    if params.branch != -1 || params.coeffs.m != 1 {
        return Err(Error::NotApplicable("the cycle charge needs the lower surface of a conic crossing".into()));
    }
    if spec.sites() != params.sites {
        return Err(Error::Domain(format!("necklace has {} sites, parameters {}", spec.sites(), params.sites)));
    }
    let p = spec.sites() as f64;
    let law = spec.hopping();
    let closed_form = PI * PI * params.k_spring * law.h1() * (TAU / p).sin() / (2.0 * law.dh1().powi(2));
    let radius = params.jt_radius();
    let two_level = circle_charge(&params.coeffs, radius, 0.0);
    let (lo, _) = doublet_levels(spec.sites(), 1);
    let lp = DeformationLoop::circle(Complex64::new(0.0, 0.0), radius, 64)?;
    let opts = TransportOptions { method: CurvatureMethod::SumOverStates, ..Default::default() };
    let numeric = transport_cycle(&NecklaceModel::new(*spec), &lp, 0.0, &Band::Lowest(lo + 1), &opts)?.charge_e;
    let relative_difference = (numeric.abs() - closed_form.abs()).abs() / closed_form.abs();
    Ok(JtCycleCharge { closed_form, two_level, numeric, radius, relative_difference })
}
