//! Adiabatic curvature, Longuet-Higgins phases and cycle transport.
//!
//! The curvature of a band projection `P(x, ϑ)` is `Ω_ab = −i Tr P[∂_aP, ∂_bP]`.
//! Its flux–shear components are reported both in real directions
//! (`Ω_ϑ1`, `Ω_ϑ2`) and as the Wirtinger pair `Ω_ϑx = (Ω_ϑ1 − iΩ_ϑ2)/2`,
//! `Ω_ϑx̄ = (Ω_ϑ1 + iΩ_ϑ2)/2`. The charge carried around a closed shear loop is
//!
//! ```text
//! Q = −2π ∮ (Ω_ϑ1 dx₁ + Ω_ϑ2 dx₂) = −4π Re ∮ Ω_ϑx dx
//! ```
//!
//! in units of the electron charge.

use crate::linalg::{self, CMatrix};
use crate::model::ParametricFamily;
use crate::spectral::{self, Band, EigenSystem};
use crate::{Error, Result};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

/// Default finite-difference step for projector derivatives.
pub const DEFAULT_FD_STEP: f64 = 1e-5;

/// Closed path in the complex shear plane, sampled at `s_k = k/N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeformationLoop {
    samples: Vec<Complex64>,
    shape: LoopShape,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LoopShape {
    /// `x(s) = center + radius·exp(±2πis)`; `clockwise` flips the sign.
    Circle { center: Complex64, radius: f64, clockwise: bool },
    /// Straight segments between consecutive samples.
    Polygon,
}

impl DeformationLoop {
    pub const MIN_SAMPLES: usize = 8;

    /// Counterclockwise circle.
    pub fn circle(center: Complex64, radius: f64, n: usize) -> Result<Self> {
        Self::circle_oriented(center, radius, n, false)
    }

    fn circle_oriented(center: Complex64, radius: f64, n: usize, clockwise: bool) -> Result<Self> {
        if n < Self::MIN_SAMPLES {
            return Err(Error::Domain(format!("a loop needs at least {} samples, got {n}", Self::MIN_SAMPLES)));
        }
        if !(radius >= 0.0) {
            return Err(Error::Domain(format!("loop radius must be nonnegative, got {radius}")));
        }
        let dir = if clockwise { -1.0 } else { 1.0 };
        let samples = (0..n).map(|k| center + Complex64::from_polar(radius, dir * TAU * k as f64 / n as f64)).collect();
        Ok(DeformationLoop { samples, shape: LoopShape::Circle { center, radius, clockwise } })
    }

    /// Polygon through `points`. The path must return to its start: the last
    /// point has to repeat the first (it is dropped).
    pub fn from_path(points: &[Complex64]) -> Result<Self> {
        let (first, last) = match (points.first(), points.last()) {
            (Some(f), Some(l)) => (*f, *l),
            _ => return Err(Error::LoopNotClosed),
        };
        let scale = points.iter().fold(1.0f64, |m, z| m.max(z.norm()));
        if (first - last).norm() > 1e-12 * scale {
            return Err(Error::LoopNotClosed);
        }
        let samples = points[..points.len() - 1].to_vec();
        if samples.len() < Self::MIN_SAMPLES {
            return Err(Error::Domain(format!("a loop needs at least {} samples, got {}", Self::MIN_SAMPLES, samples.len())));
        }
        Ok(DeformationLoop { samples, shape: LoopShape::Polygon })
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn shape(&self) -> LoopShape {
        self.shape
    }

    /// Nominal radius: the circle radius, or the largest distance from the
    /// centroid for polygons.
    pub fn eps(&self) -> f64 {
        match self.shape {
            LoopShape::Circle { radius, .. } => radius,
            LoopShape::Polygon => {
                let c = self.samples.iter().sum::<Complex64>() / self.len() as f64;
                self.samples.iter().fold(0.0, |m, z| m.max((z - c).norm()))
            }
        }
    }

    /// The same loop with twice the samples; old samples keep the even slots.
    pub fn refine(&self) -> Self {
        match self.shape {
            LoopShape::Circle { center, radius, clockwise } => {
                Self::circle_oriented(center, radius, 2 * self.len(), clockwise).expect("refining a valid loop")
            }
            LoopShape::Polygon => {
                let n = self.len();
                let mut samples = Vec::with_capacity(2 * n);
                for k in 0..n {
                    let a = self.samples[k];
                    let b = self.samples[(k + 1) % n];
                    samples.push(a);
                    samples.push(0.5 * (a + b));
                }
                DeformationLoop { samples, shape: LoopShape::Polygon }
            }
        }
    }

    /// The loop traversed backwards, starting from the same point.
    pub fn reversed(&self) -> Self {
        let mut samples = vec![self.samples[0]];
        samples.extend(self.samples[1..].iter().rev());
        let shape = match self.shape {
            LoopShape::Circle { center, radius, clockwise } => LoopShape::Circle { center, radius, clockwise: !clockwise },
            s => s,
        };
        DeformationLoop { samples, shape }
    }

    /// Number of times the loop winds counterclockwise around `z`.
    pub fn winding_number(&self, z: Complex64) -> i64 {
        let n = self.len();
        let mut total = 0.0;
        for k in 0..n {
            let a = self.samples[k] - z;
            let b = self.samples[(k + 1) % n] - z;
            total += (b / a).arg();
        }
        (total / TAU).round() as i64
    }

    /// Complex weights `w_k` with `∮ f dx ≈ Σ f(x_k) w_k`. Circles use the exact
    /// tangent (periodic trapezoid), polygons the segment trapezoid.
    fn weights(&self) -> Vec<Complex64> {
        let n = self.len();
        match self.shape {
            LoopShape::Circle { center, clockwise, .. } => {
                let dir = if clockwise { -1.0 } else { 1.0 };
                self.samples.iter().map(|&x| Complex64::new(0.0, dir * TAU) * (x - center) / n as f64).collect()
            }
            LoopShape::Polygon => (0..n).map(|k| 0.5 * (self.samples[(k + 1) % n] - self.samples[(k + n - 1) % n])).collect(),
        }
    }

    fn even_subloop(&self) -> Self {
        let samples = self.samples.iter().step_by(2).copied().collect();
        DeformationLoop { samples, shape: self.shape }
    }
}

/// Flux–shear curvature at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvatureSample {
    pub x: Complex64,
    pub theta_flux: f64,
    pub omega_theta_x: Complex64,
    pub omega_theta_xbar: Complex64,
    /// Working finite-difference step, zero for the sum-over-states oracle.
    pub fd_step: f64,
}

impl CurvatureSample {
    fn from_real(x: Complex64, theta: f64, o1: f64, o2: f64, fd_step: f64) -> Self {
        CurvatureSample {
            x,
            theta_flux: theta,
            omega_theta_x: Complex64::new(o1, -o2) * 0.5,
            omega_theta_xbar: Complex64::new(o1, o2) * 0.5,
            fd_step,
        }
    }

    /// `Ω_ϑ1`, along Re x.
    pub fn omega_theta_1(&self) -> f64 {
        (self.omega_theta_x + self.omega_theta_xbar).re
    }

    /// `Ω_ϑ2`, along Im x.
    pub fn omega_theta_2(&self) -> f64 {
        (self.omega_theta_xbar - self.omega_theta_x).im
    }
}

fn projector<M: ParametricFamily + ?Sized>(model: &M, x: Complex64, theta: f64, band: &[usize]) -> Result<(CMatrix, EigenSystem)> {
    let es = spectral::eigensystem(&model.hamiltonian(x, theta))?;
    let p = spectral::band_projection(&es, band)?;
    Ok((p.matrix, es))
}

/// `−i Tr P[A, B]`, real for Hermitian arguments.
fn curvature_form(p: &CMatrix, a: &CMatrix, b: &CMatrix) -> f64 {
    let c = linalg::commutator(a, b);
    (linalg::trace_product(p, &c) * Complex64::new(0.0, -1.0)).re
}

/// Curvature from the projector itself, with central differences at steps
/// `h, h/2, h/4` and Richardson extrapolation. The working step is
/// `fd_step·min(1, gap)` where `gap` separates the band from the rest.
pub fn curvature_trace<M: ParametricFamily + ?Sized>(model: &M, x: Complex64, theta: f64, band: &Band, fd_step: f64) -> Result<CurvatureSample> {
    if !(fd_step > 0.0) {
        return Err(Error::Domain(format!("finite-difference step must be positive, got {fd_step}")));
    }
    let idx = band.indices(model.dim());
    let (p0, es) = projector(model, x, theta, &idx)?;
    let h = fd_step * spectral::band_isolation(&es, &idx).min(1.0);

    // returns both components and the size of the difference quotients,
    // which sets the roundoff floor ε‖∂P‖/h
    let at_level = |h: f64| -> Result<([f64; 2], f64)> {
        let diff = |dx: Complex64, dt: f64| -> Result<CMatrix> {
            let (pp, _) = projector(model, x + dx, theta + dt, &idx)?;
            let (pm, _) = projector(model, x - dx, theta - dt, &idx)?;
            Ok((pp - pm).mapv(|z| z / (2.0 * h)))
        };
        let dt = diff(Complex64::new(0.0, 0.0), h)?;
        let d1 = diff(Complex64::new(h, 0.0), 0.0)?;
        let d2 = diff(Complex64::new(0.0, h), 0.0)?;
        let size = linalg::max_abs(&dt) + linalg::max_abs(&d1) + linalg::max_abs(&d2);
        Ok(([curvature_form(&p0, &dt, &d1), curvature_form(&p0, &dt, &d2)], size))
    };
    let (l1, _) = at_level(h)?;
    let (l2, _) = at_level(h / 2.0)?;
    let (l3, size) = at_level(h / 4.0)?;
    let roundoff = 64.0 * f64::EPSILON * size * size.max(1.0) / (h / 4.0);

    let mut out = [0.0; 2];
    for c in 0..2 {
        let r1 = (4.0 * l2[c] - l1[c]) / 3.0;
        let r2 = (4.0 * l3[c] - l2[c]) / 3.0;
        let truncation = (l3[c] - l2[c]).abs() / 3.0;
        let change = (r2 - r1).abs();
        if change > 10.0 * truncation + 1e-9 * r2.abs() + roundoff {
            return Err(Error::StepInstability { step: h, change });
        }
        out[c] = r2;
    }
    Ok(CurvatureSample::from_real(x, theta, out[0], out[1], h))
}

/// Independent evaluation of the same curvature by first-order perturbation
/// theory with the analytic derivative matrices:
/// `Ω_ϑb = −i Σ_{n∈B, m∉B} (A_nm B_mn − B_nm A_mn)/(E_n − E_m)²`.
pub fn curvature_sum_over_states<M: ParametricFamily + ?Sized>(model: &M, x: Complex64, theta: f64, band: &Band) -> Result<CurvatureSample> {
    let dim = model.dim();
    let inside = band.indices(dim);
    let outside = band.complement(dim);
    if let Some(&k) = inside.iter().find(|&&k| k >= dim) {
        return Err(Error::IndexOutOfRange { index: k, dim });
    }
    let es = spectral::eigensystem(&model.hamiltonian(x, theta))?;
    let d = model.derivatives(x, theta);
    let v = es.vectors();
    let vd = linalg::dagger(v);
    let a = vd.dot(&d.d_theta).dot(v);
    let b1 = vd.dot(&d.d_x1).dot(v);
    let b2 = vd.dot(&d.d_x2).dot(v);
    let e = es.values();
    let mut o = [Complex64::new(0.0, 0.0); 2];
    for &n in &inside {
        for &m in &outside {
            let gap = e[n] - e[m];
            if gap.abs() < 1e-12 {
                return Err(Error::DegenerateDenominator(gap));
            }
            let w = 1.0 / (gap * gap);
            for (c, b) in [&b1, &b2].into_iter().enumerate() {
                o[c] += (a[[n, m]] * b[[m, n]] - b[[n, m]] * a[[m, n]]) * w;
            }
        }
    }
    let o1 = (o[0] * Complex64::new(0.0, -1.0)).re;
    let o2 = (o[1] * Complex64::new(0.0, -1.0)).re;
    Ok(CurvatureSample::from_real(x, theta, o1, o2, 0.0))
}

/// Sign of the product of consecutive overlaps of real eigenvectors around a
/// closed chain of frames.
fn holonomy_sign(vectors: &[ndarray::Array1<Complex64>]) -> (i32, f64) {
    let n = vectors.len();
    let mut sign = 1;
    let mut weakest = f64::INFINITY;
    for k in 0..n {
        let a = &vectors[k];
        let b = &vectors[(k + 1) % n];
        let ov: Complex64 = a.iter().zip(b.iter()).map(|(u, v)| u.conj() * v).sum();
        weakest = weakest.min(ov.norm());
        if ov.re < 0.0 {
            sign = -sign;
        }
    }
    (sign, weakest)
}

/// The ±1 holonomy of the real eigenvector `level` at zero flux around `lp`.
/// The loop is doubled until consecutive overlaps exceed 0.9; overlaps that
/// stay below 0.1 abort with [`Error::RefineLoop`].
pub fn longuet_higgins_phase<M: ParametricFamily + ?Sized>(model: &M, lp: &DeformationLoop, level: usize) -> Result<i32> {
    const MAX_SAMPLES: usize = 1 << 14;
    let dim = model.dim();
    if level >= dim {
        return Err(Error::IndexOutOfRange { index: level, dim });
    }
    let mut lp = lp.clone();
    loop {
        let vectors: Vec<_> = lp
            .samples()
            .par_iter()
            .map(|&x| {
                let es = spectral::eigensystem(&model.hamiltonian(x, 0.0))?;
                let e = es.values();
                for k in [level.wrapping_sub(1), level + 1] {
                    if k < dim && (e[k] - e[level]).abs() < spectral::CLUSTER_TOL {
                        return Err(Error::SplitDegeneracy { index: level.max(k), spacing: (e[k] - e[level]).abs() });
                    }
                }
                Ok(es.vectors().column(level).to_owned())
            })
            .collect::<Result<_>>()?;
        let (sign, weakest) = holonomy_sign(&vectors);
        if weakest >= 0.9 {
            return Ok(sign);
        }
        if lp.len() >= MAX_SAMPLES {
            if weakest < 0.1 {
                return Err(Error::RefineLoop(weakest));
            }
            return Ok(sign);
        }
        lp = lp.refine();
    }
}

/// How the curvature along a loop is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurvatureMethod {
    /// Projector finite differences ([`curvature_trace`]).
    Projector { fd_step: f64 },
    /// Perturbation theory with analytic `∂H` ([`curvature_sum_over_states`]).
    SumOverStates,
}

impl Default for CurvatureMethod {
    fn default() -> Self {
        CurvatureMethod::Projector { fd_step: DEFAULT_FD_STEP }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransportOptions {
    pub method: CurvatureMethod,
    /// Accept once `|Q_N − Q_{N/2}| ≤ rel_tol·|Q_N|`.
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_samples: usize,
}

impl Default for TransportOptions {
    fn default() -> Self {
        TransportOptions { method: CurvatureMethod::default(), rel_tol: 1e-4, abs_tol: 1e-10, max_samples: 1 << 14 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TransportReport {
    /// Charge per cycle in units of `e`.
    pub charge_e: f64,
    /// Longuet-Higgins phase of the top level of the band, when that level is
    /// nondegenerate along the loop.
    pub lh_phase: Option<i32>,
    pub n_samples: usize,
    /// `|Q_N − Q_{N/2}|`.
    pub richardson_error: f64,
    pub samples: Vec<CurvatureSample>,
}

pub fn curvature_sample<M: ParametricFamily + ?Sized>(
    model: &M,
    x: Complex64,
    theta: f64,
    band: &Band,
    method: CurvatureMethod,
) -> Result<CurvatureSample> {
    match method {
        CurvatureMethod::Projector { fd_step } => curvature_trace(model, x, theta, band, fd_step),
        CurvatureMethod::SumOverStates => curvature_sum_over_states(model, x, theta, band),
    }
}

fn loop_charge(lp: &DeformationLoop, samples: &[CurvatureSample]) -> f64 {
    let w = lp.weights();
    let integral: f64 = samples.iter().zip(&w).map(|(s, w)| (s.omega_theta_x * w).re).sum();
    -2.0 * TAU * integral
}

/// Charge transported by one traversal of `lp` at flux `theta0`, with the
/// number of samples doubled until the trapezoid sum settles.
pub fn transport_cycle<M: ParametricFamily + ?Sized>(
    model: &M,
    lp: &DeformationLoop,
    theta0: f64,
    band: &Band,
    opts: &TransportOptions,
) -> Result<TransportReport> {
    let eval = |xs: &[Complex64]| -> Result<Vec<CurvatureSample>> {
        xs.par_iter().map(|&x| curvature_sample(model, x, theta0, band, opts.method)).collect()
    };
    let mut lp = lp.clone();
    let mut samples = eval(lp.samples())?;
    loop {
        let q = loop_charge(&lp, &samples);
        let half: Vec<_> = samples.iter().step_by(2).copied().collect();
        let q_half = loop_charge(&lp.even_subloop(), &half);
        let err = (q - q_half).abs();
        if err <= opts.rel_tol * q.abs() || err <= opts.abs_tol {
            let dim = model.dim();
            let top = band.indices(dim).last().copied();
            let lh_phase = top.and_then(|lvl| longuet_higgins_phase(model, &lp, lvl).ok());
            return Ok(TransportReport { charge_e: q, lh_phase, n_samples: lp.len(), richardson_error: err, samples });
        }
        if lp.len() * 2 > opts.max_samples {
            return Err(Error::NoConvergence(lp.len()));
        }
        let finer = lp.refine();
        let odd: Vec<Complex64> = finer.samples().iter().skip(1).step_by(2).copied().collect();
        let new = eval(&odd)?;
        samples = samples.into_iter().zip(new).flat_map(|(a, b)| [a, b]).collect();
        lp = finer;
    }
}

/// `∂_ϑ Tr(P H)`, the current carried by the band in the limit of infinitely
/// slow driving, by central differences of the band energy.
pub fn persistent_response<M: ParametricFamily + ?Sized>(model: &M, x: Complex64, theta: f64, band: &Band, step: f64) -> Result<f64> {
    let idx = band.indices(model.dim());
    let energy = |t: f64| -> Result<f64> {
        let es = spectral::eigensystem(&model.hamiltonian(x, t))?;
        let e = es.values();
        idx.iter().map(|&k| e.get(k).copied().ok_or(Error::IndexOutOfRange { index: k, dim: e.len() })).sum()
    };
    Ok((energy(theta + step)? - energy(theta - step)?) / (2.0 * step))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{HoppingLaw, LinearizedNecklaceModel, NecklaceModel, NecklaceSpec, TrimerCycleModel};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn trimer() -> TrimerCycleModel {
        TrimerCycleModel::default()
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn projector_curvature_matches_oracle_on_trimer() {
        let x = Complex64::new(0.2, 0.0);
        for band in [Band::Indices(vec![2]), Band::Lowest(1), Band::Lowest(2)] {
            let fd = curvature_trace(&trimer(), x, 0.0, &band, DEFAULT_FD_STEP).unwrap();
            let so = curvature_sum_over_states(&trimer(), x, 0.0, &band).unwrap();
            assert!((fd.omega_theta_x - so.omega_theta_x).norm() < 1e-6 * so.omega_theta_x.norm().max(1e-3));
        }
    }

    #[test]
    fn full_band_has_no_curvature() {
        let x = Complex64::new(0.05, 0.02);
        let c = curvature_trace(&trimer(), x, 0.3, &Band::All, DEFAULT_FD_STEP).unwrap();
        assert!(c.omega_theta_x.norm() < 1e-10);
        let c = curvature_sum_over_states(&trimer(), x, 0.3, &Band::All).unwrap();
        assert_eq!(c.omega_theta_x.norm(), 0.0);
    }

    #[test]
    fn complementary_bands_have_opposite_curvature() {
        let spec = NecklaceSpec::new(5, HoppingLaw::default()).unwrap();
        let m = NecklaceModel::new(spec);
        let x = Complex64::new(0.04, -0.03);
        let lower = curvature_trace(&m, x, 0.4, &Band::Lowest(2), DEFAULT_FD_STEP).unwrap();
        let upper = curvature_trace(&m, x, 0.4, &Band::Indices(vec![2, 3, 4]), DEFAULT_FD_STEP).unwrap();
        assert!((lower.omega_theta_x + upper.omega_theta_x).norm() < 1e-8 * lower.omega_theta_x.norm());
    }

    #[test]
    fn curvature_is_additive() {
        let spec = NecklaceSpec::new(5, HoppingLaw::default()).unwrap();
        let m = LinearizedNecklaceModel::new(&spec);
        let x = Complex64::new(0.12, 0.05);
        let parts: Complex64 =
            [vec![0], vec![1, 2]].into_iter().map(|b| curvature_trace(&m, x, 0.7, &Band::Indices(b), DEFAULT_FD_STEP).unwrap().omega_theta_x).sum();
        let whole = curvature_trace(&m, x, 0.7, &Band::Lowest(3), DEFAULT_FD_STEP).unwrap().omega_theta_x;
        assert!((parts - whole).norm() < 1e-9 * whole.norm().max(1.0), "{parts} {whole}");
    }

    #[test]
    fn degenerate_point_is_rejected() {
        let zero = Complex64::new(0.0, 0.0);
        assert!(matches!(curvature_trace(&trimer(), zero, 0.0, &Band::Lowest(1), DEFAULT_FD_STEP), Err(Error::SplitDegeneracy { .. })));
        assert!(matches!(curvature_sum_over_states(&trimer(), zero, 0.0, &Band::Lowest(1)), Err(Error::DegenerateDenominator(_))));
    }

    #[test]
    fn projector_is_frame_independent() {
        // random unitary mixing inside the doublet and random phases outside
        let es = spectral::eigensystem(&trimer().hamiltonian(Complex64::new(0.0, 0.0), 0.0)).unwrap();
        let f = es.frame(&[0, 1]);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let (a, b, c): (f64, f64, f64) = (rng.gen::<f64>() * TAU, rng.gen::<f64>() * TAU, rng.gen::<f64>() * TAU);
            let ca = Complex64::from_polar(a.cos(), b);
            let sa = Complex64::from_polar(a.sin(), c);
            let u = ndarray::array![[ca, -sa.conj()], [sa, ca.conj()]];
            let g = f.dot(&u);
            let p1 = f.dot(&linalg::dagger(&f));
            let p2 = g.dot(&linalg::dagger(&g));
            assert!(linalg::max_abs(&(p1 - p2)) < 1e-12);
        }
    }

    #[test]
    fn holonomy_ignores_sign_flips() {
        let lp = DeformationLoop::circle(Complex64::new(0.0, 0.0), 0.05, 32).unwrap();
        let mut vs: Vec<_> =
            lp.samples().iter().map(|&x| spectral::eigensystem(&trimer().hamiltonian(x, 0.0)).unwrap().vectors().column(0).to_owned()).collect();
        let (s0, _) = holonomy_sign(&vs);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for v in vs.iter_mut() {
            if rng.gen::<bool>() {
                v.mapv_inplace(|z| -z);
            }
        }
        assert_eq!(holonomy_sign(&vs).0, s0);
        assert_eq!(s0, -1);
    }

    #[test]
    fn lh_phase_examples() {
        let enclosing = DeformationLoop::circle(Complex64::new(0.0, 0.0), 0.05, 16).unwrap();
        assert_eq!(longuet_higgins_phase(&trimer(), &enclosing, 0).unwrap(), -1);
        assert_eq!(longuet_higgins_phase(&trimer(), &enclosing.refine(), 0).unwrap(), -1);
        let away = DeformationLoop::circle(Complex64::new(0.3, 0.0), 0.05, 16).unwrap();
        assert_eq!(longuet_higgins_phase(&trimer(), &away, 0).unwrap(), 1);
        let point = DeformationLoop::circle(Complex64::new(0.3, 0.0), 0.0, 8).unwrap();
        assert_eq!(longuet_higgins_phase(&trimer(), &point, 1).unwrap(), 1);
    }

    #[test]
    fn open_path_is_rejected() {
        let pts: Vec<_> = (0..10).map(|k| Complex64::new(k as f64, 0.0)).collect();
        assert_eq!(DeformationLoop::from_path(&pts), Err(Error::LoopNotClosed));
        assert!(DeformationLoop::circle(Complex64::new(0.0, 0.0), 0.1, 4).is_err());
    }

    #[test]
    fn polygon_and_circle_agree() {
        let n = 64;
        let pts: Vec<_> = (0..=n).map(|k| Complex64::from_polar(0.03, TAU * (k % n) as f64 / n as f64)).collect();
        let poly = DeformationLoop::from_path(&pts).unwrap();
        let circ = DeformationLoop::circle(Complex64::new(0.0, 0.0), 0.03, n).unwrap();
        assert_eq!(poly.winding_number(Complex64::new(0.0, 0.0)), 1);
        assert_eq!(circ.reversed().winding_number(Complex64::new(0.0, 0.0)), -1);
        let opts = TransportOptions { method: CurvatureMethod::SumOverStates, ..Default::default() };
        let qp = transport_cycle(&trimer(), &poly, 0.0, &Band::Lowest(1), &opts).unwrap();
        let qc = transport_cycle(&trimer(), &circ, 0.0, &Band::Lowest(1), &opts).unwrap();
        assert!(rel(qp.charge_e, qc.charge_e) < 1e-3, "{} {}", qp.charge_e, qc.charge_e);
    }

    #[test]
    fn trimer_cycle_charge() {
        let eps = 0.02;
        let lp = DeformationLoop::circle(Complex64::new(0.0, 0.0), eps, 64).unwrap();
        let r = transport_cycle(&trimer(), &lp, 0.0, &Band::Lowest(1), &TransportOptions::default()).unwrap();
        assert!(r.charge_e > 0.0);
        assert!(rel(r.charge_e * eps, PI * PI / 3f64.sqrt()) < 0.03, "{}", r.charge_e * eps);
        assert_eq!(r.lh_phase, Some(-1));
        let all = transport_cycle(&trimer(), &lp, 0.0, &Band::All, &TransportOptions::default()).unwrap();
        assert!(all.charge_e.abs() < 1e-8);
        let back = transport_cycle(&trimer(), &lp.reversed(), 0.0, &Band::Lowest(1), &TransportOptions::default()).unwrap();
        assert!(rel(-back.charge_e, r.charge_e) < 1e-9);
    }

    #[test]
    fn persistent_response_examples() {
        let m = trimer();
        let x = Complex64::new(0.07, -0.02);
        assert!(persistent_response(&m, x, 0.0, &Band::Lowest(1), 1e-4).unwrap().abs() < 1e-9);
        assert!(persistent_response(&m, Complex64::new(0.0, 0.0), 0.3, &Band::Lowest(1), 1e-4).unwrap().abs() > 1e-4);
        assert!(persistent_response(&m, x, 0.3, &Band::All, 1e-4).unwrap().abs() < 1e-9);
    }
}
