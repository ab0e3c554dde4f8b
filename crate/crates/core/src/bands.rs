//! The sheared infinite helix as a direct integral over Bloch momentum.
//!
//! At momentum ϑ the Bloch Hamiltonian of a helix with `p` atoms per turn is
//! the necklace `X_p` threaded by the flux angle ϑ, so everything here reuses
//! [`NecklaceModel`] with ϑ read as momentum.

use crate::berry::{curvature_sample, CurvatureMethod, DeformationLoop};
use crate::linalg::{self, CMatrix};
use crate::model::{FluxAngle, NecklaceModel, NecklaceSpec, ParametricFamily, Shear};
use crate::spectral::{self, Band};
use crate::{quad, Error, Result};
use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};
use std::io::Write;

#[derive(Debug, Clone)]
pub struct BandStructure {
    pub p: usize,
    pub x: Complex64,
    /// Momenta `−π + 2πj/N`, `j = 0..N`.
    pub thetas: Vec<f64>,
    /// `energies[[band, j]]`, ascending in `band` at every momentum.
    pub energies: Array2<f64>,
    /// For gap `k = 1..p−1`: `min_ϑ E_k − max_ϑ E_{k−1}` over the grid.
    pub gaps: Vec<f64>,
}

impl BandStructure {
    /// Largest difference between the spectrum at `−π` and at `+π`.
    pub fn periodicity_defect(&self, spec: &NecklaceSpec) -> Result<f64> {
        let es = spectral::eigensystem(&NecklaceModel::new(*spec).hamiltonian(self.x, PI))?;
        Ok(es.values().iter().zip(self.energies.column(0)).fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }

    /// CSV with columns `theta, E_1, …, E_p`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let header: Vec<String> = std::iter::once("theta".to_string()).chain((1..=self.p).map(|k| format!("E_{k}"))).collect();
        writeln!(w, "{}", header.join(","))?;
        for (j, t) in self.thetas.iter().enumerate() {
            let row: Vec<String> = std::iter::once(*t).chain(self.energies.column(j).iter().copied()).map(|v| format!("{v:.16e}")).collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

pub fn band_structure(spec: &NecklaceSpec, x: Shear, n_theta: usize) -> Result<BandStructure> {
    if n_theta < 64 {
        return Err(Error::Domain(format!("band structure needs at least 64 momenta, got {n_theta}")));
    }
    let p = spec.sites();
    let model = NecklaceModel::new(*spec);
    let thetas: Vec<f64> = (0..n_theta).map(|j| -PI + TAU * j as f64 / n_theta as f64).collect();
    let columns: Vec<Vec<f64>> =
        thetas.par_iter().map(|&t| spectral::eigensystem(&model.hamiltonian(x.value(), t)).map(|es| es.values().to_vec())).collect::<Result<_>>()?;
    let energies = Array2::from_shape_fn((p, n_theta), |(b, j)| columns[j][b]);
    let gaps = (1..p)
        .map(|k| {
            let lo = energies.row(k - 1).iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let hi = energies.row(k).iter().copied().fold(f64::INFINITY, f64::min);
            hi - lo
        })
        .collect();
    Ok(BandStructure { p, x: x.value(), thetas, energies, gaps })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FloquetCheck {
    /// `‖H(x, 0) U + U H(x, π)‖_F` with `U = diag((−1)^j)`.
    pub residual: f64,
    /// Largest `|E_k(π) + E_{p−1−k}(0)|`.
    pub mirror_defect: f64,
}

/// Checks the chiral relation between momenta 0 and π that makes the band
/// edges sit at those two momenta.
pub fn floquet_symmetry_check(spec: &NecklaceSpec, x: Shear) -> Result<FloquetCheck> {
    let p = spec.sites();
    let model = NecklaceModel::new(*spec);
    let h0 = model.hamiltonian(x.value(), 0.0);
    let hpi = model.hamiltonian(x.value(), PI);
    let u = CMatrix::from_shape_fn(
        (p, p),
        |(i, j)| {
            if i == j {
                Complex64::new(if i % 2 == 0 { 1.0 } else { -1.0 }, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        },
    );
    let residual = linalg::frobenius(&(h0.matrix().dot(&u) + u.dot(hpi.matrix())));
    let e0 = spectral::eigensystem(&h0)?;
    let epi = spectral::eigensystem(&hpi)?;
    let mirror_defect = (0..p).fold(0.0, |m: f64, k| m.max((epi.values()[k] + e0.values()[p - 1 - k]).abs()));
    Ok(FloquetCheck { residual, mirror_defect })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxialOptions {
    pub method: CurvatureMethod,
    /// Uniform panels per half of the momentum circle before adaptation.
    pub initial_panels: usize,
    pub rel_tol: f64,
    pub abs_tol: f64,
}

impl Default for AxialOptions {
    fn default() -> Self {
        AxialOptions { method: CurvatureMethod::default(), initial_panels: 4, rel_tol: 1e-9, abs_tol: 1e-12 }
    }
}

fn gap_closed_at(e: Error, theta: f64) -> Error {
    match e {
        Error::SplitDegeneracy { .. } | Error::DegenerateDenominator(_) => Error::GapClosed { location: format!("momentum ϑ = {theta:.6}") },
        other => other,
    }
}

/// `(1/2π) ∫_{−π}^{π} Tr Ω_ϑx dϑ`: the curvature integrated along the helix
/// axis, by adaptive Gauss–Kronrod quadrature split at ϑ = 0.
pub fn axial_curvature_integral<M: ParametricFamily + ?Sized>(model: &M, x: Complex64, band: &Band, opts: &AxialOptions) -> Result<Complex64> {
    let n = opts.initial_panels.max(1);
    let breaks: Vec<f64> = (0..=2 * n).map(|j| -PI + PI * j as f64 / n as f64).collect();
    let idx = band.indices(model.dim());
    for &t in &breaks {
        let es = spectral::eigensystem(&model.hamiltonian(x, t))?;
        if spectral::band_isolation(&es, &idx) < spectral::CLUSTER_TOL {
            return Err(Error::GapClosed { location: format!("momentum ϑ = {t:.6}") });
        }
    }
    let integrand = |t: f64| -> Result<[f64; 2]> {
        let s = curvature_sample(model, x, t, band, opts.method).map_err(|e| gap_closed_at(e, t))?;
        Ok([s.omega_theta_x.re, s.omega_theta_x.im])
    };
    let (v, _) = quad::integrate(integrand, &breaks, opts.abs_tol, opts.rel_tol, 4000)?;
    Ok(Complex64::new(v[0], v[1]) / TAU)
}

/// `∮ 2 Re(A dx)` for the axial integral `A(x)`, by trapezoid sums over the
/// loop samples. For a loop enclosing a crossing this is the Chern number of
/// the band.
pub fn axial_loop_integral<M: ParametricFamily + ?Sized>(model: &M, lp: &DeformationLoop, band: &Band, opts: &AxialOptions) -> Result<f64> {
    let n = lp.len();
    let xs = lp.samples();
    let values: Vec<Complex64> = xs.par_iter().map(|&x| axial_curvature_integral(model, x, band, opts)).collect::<Result<_>>()?;
    let mut total = 0.0;
    for k in 0..n {
        let dx = 0.5 * (xs[(k + 1) % n] - xs[(k + n - 1) % n]);
        total += 2.0 * (values[k] * dx).re;
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChernRecord {
    /// 1-based gap index counted from the bottom.
    pub gap_index: usize,
    /// Measured order in the shear at which the gap opens, when the fit
    /// converges.
    pub opening_order: Option<usize>,
    pub chern: i64,
    /// Distance of the plaquette sum from the nearest integer.
    pub plaquette_field_residual: f64,
    pub n_s: usize,
    pub n_theta: usize,
}

/// Torus for the Chern computation: the counterclockwise circle
/// `x = center + radius·exp(2πis)` times the momentum circle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChernTorus {
    pub center: Complex64,
    pub radius: f64,
    pub n_s: usize,
    pub n_theta: usize,
}

impl ChernTorus {
    pub fn around_origin(eps: f64) -> Self {
        ChernTorus { center: Complex64::new(0.0, 0.0), radius: eps, n_s: 48, n_theta: 48 }
    }
}

const MAX_CHERN_GRID: usize = 768;

fn frame_grid(model: &NecklaceModel, torus: &ChernTorus, q: usize, n_s: usize, n_t: usize) -> Result<Vec<CMatrix>> {
    (0..n_s * n_t)
        .into_par_iter()
        .map(|idx| {
            let (i, j) = (idx / n_t, idx % n_t);
            let x = torus.center + Complex64::from_polar(torus.radius, TAU * i as f64 / n_s as f64);
            let t = -PI + TAU * j as f64 / n_t as f64;
            let es = spectral::eigensystem(&model.hamiltonian(x, t))?;
            let gap = spectral::spectral_gap(&es, q)?;
            if gap < spectral::CLUSTER_TOL {
                return Err(Error::GapClosed { location: format!("x = {x:.6}, ϑ = {t:.6}") });
            }
            Ok(es.frame(&(0..q).collect::<Vec<_>>()))
        })
        .collect()
}

fn link(a: &CMatrix, b: &CMatrix) -> Complex64 {
    linalg::determinant(&linalg::dagger(a).dot(b))
}

/// Fukui–Hatsugai–Suzuki lattice Chern number of the bands below gap
/// `gap_index`, over the torus (momentum ϑ, loop parameter s). Orientation:
/// the plaquette field is `F_ϑs`, with ϑ increasing and the loop traversed
/// counterclockwise. The grid is doubled while any link is nearly singular or
/// any plaquette flux is too large to be resolved.
pub fn chern_number(spec: &NecklaceSpec, gap_index: usize, torus: &ChernTorus) -> Result<ChernRecord> {
    let p = spec.sites();
    if gap_index == 0 || gap_index >= p {
        return Err(Error::IndexOutOfRange { index: gap_index, dim: p });
    }
    if torus.n_s < 4 || torus.n_theta < 4 || !torus.n_theta.is_multiple_of(2) {
        return Err(Error::Domain("Chern torus needs n_s ≥ 4 and even n_theta ≥ 4".into()));
    }
    let model = NecklaceModel::new(*spec);
    let (mut n_s, mut n_t) = (torus.n_s, torus.n_theta);
    loop {
        let frames = frame_grid(&model, torus, gap_index, n_s, n_t)?;
        let at = |i: usize, j: usize| &frames[(i % n_s) * n_t + (j % n_t)];
        let cells: Vec<(f64, f64, f64)> = (0..n_s * n_t)
            .into_par_iter()
            .map(|idx| {
                let (i, j) = (idx / n_t, idx % n_t);
                let u_t = link(at(i, j), at(i, j + 1));
                let u_s_next = link(at(i, j + 1), at(i + 1, j + 1));
                let u_t_next = link(at(i + 1, j), at(i + 1, j + 1));
                let u_s = link(at(i, j), at(i + 1, j));
                let weakest = [u_t, u_s_next, u_t_next, u_s].iter().fold(f64::INFINITY, |m, z| m.min(z.norm()));
                let f = (u_t * u_s_next / (u_t_next * u_s)).arg();
                (f, weakest, f.abs())
            })
            .collect();
        let total: f64 = cells.iter().map(|c| c.0).sum::<f64>() / TAU;
        let weakest = cells.iter().fold(f64::INFINITY, |m, c| m.min(c.1));
        let largest = cells.iter().fold(0.0f64, |m, c| m.max(c.2));
        let chern = total.round();
        let residual = (total - chern).abs();
        let resolved = weakest >= 1e-3 && largest < PI / 2.0 && residual < 1e-6;
        if resolved {
            let opening_order = gap_opening_order(spec, gap_index, &DEFAULT_EPS_SWEEP).ok().map(|o| o.order);
            return Ok(ChernRecord { gap_index, opening_order, chern: chern as i64, plaquette_field_residual: residual, n_s, n_theta: n_t });
        }
        if 2 * n_s.max(n_t) > MAX_CHERN_GRID {
            if residual > 1e-4 || largest >= PI / 2.0 {
                return Err(Error::RefinementRequired(residual.max(largest)));
            }
            let opening_order = gap_opening_order(spec, gap_index, &DEFAULT_EPS_SWEEP).ok().map(|o| o.order);
            return Ok(ChernRecord { gap_index, opening_order, chern: chern as i64, plaquette_field_residual: residual, n_s, n_theta: n_t });
        }
        n_s *= 2;
        n_t *= 2;
    }
}

/// Charge pumped through the helix per cycle of radius `eps` with `q`
/// electrons per unit cell (Fermi level in gap `q`).
pub fn pump_charge(spec: &NecklaceSpec, q_electrons: usize, eps: f64) -> Result<i64> {
    Ok(chern_number(spec, q_electrons, &ChernTorus::around_origin(eps))?.chern)
}

/// `q/2` for even `q`, `−(p−q)/2` for odd `q`.
pub fn expected_pump_charge(p: usize, q: usize) -> i64 {
    if q.is_multiple_of(2) {
        q as i64 / 2
    } else {
        -((p - q) as i64) / 2
    }
}

/// Opening order of gap `k`: `j` for `k = 2j`, `(p−1)/2 − j` for `k = 2j + 1`.
pub fn table_order(p: usize, gap: usize) -> usize {
    if gap.is_multiple_of(2) {
        gap / 2
    } else {
        (p - 1) / 2 - (gap - 1) / 2
    }
}

/// Chern number of gap `k`: `j` for `k = 2j`, `−(p−1)/2 + j` for `k = 2j + 1`.
pub fn table_chern(p: usize, gap: usize) -> i64 {
    if gap.is_multiple_of(2) {
        gap as i64 / 2
    } else {
        -((p as i64 - 1) / 2) + (gap as i64 - 1) / 2
    }
}

/// Shear radii used when an opening order is measured without an explicit sweep.
pub const DEFAULT_EPS_SWEEP: [f64; 4] = [0.001, 0.002, 0.004, 0.01];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapOrder {
    pub order: usize,
    pub slope: f64,
}

/// Width of gap `k` at real shear `eps`, from the band edges at ϑ ∈ {0, π}.
pub fn gap_width(spec: &NecklaceSpec, gap_index: usize, eps: f64) -> Result<f64> {
    let p = spec.sites();
    if gap_index == 0 || gap_index >= p {
        return Err(Error::IndexOutOfRange { index: gap_index, dim: p });
    }
    let model = NecklaceModel::new(*spec);
    let x = Complex64::new(eps, 0.0);
    let e0 = spectral::eigensystem(&model.hamiltonian(x, FluxAngle::zero().angle()))?;
    let epi = spectral::eigensystem(&model.hamiltonian(x, PI))?;
    let (a, b) = (e0.values(), epi.values());
    let k = gap_index;
    Ok(a[k].min(b[k]) - a[k - 1].max(b[k - 1]))
}

/// Log-log slope of the gap width against the shear radius, rounded to the
/// opening order.
pub fn gap_opening_order(spec: &NecklaceSpec, gap_index: usize, eps_sweep: &[f64]) -> Result<GapOrder> {
    let lo = eps_sweep.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = eps_sweep.iter().copied().fold(0.0, f64::max);
    if eps_sweep.len() < 2 || !(lo > 0.0) || hi / lo < 10.0 - 1e-9 {
        return Err(Error::Domain("eps sweep must hold positive radii spanning at least a decade".into()));
    }
    let mut pts = Vec::with_capacity(eps_sweep.len());
    for &e in eps_sweep {
        let w = gap_width(spec, gap_index, e)?;
        if !(w > 0.0) {
            return Err(Error::GapClosed { location: format!("eps = {e}") });
        }
        pts.push((e.ln(), w.ln()));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let order = slope.round();
    if order < 1.0 || (slope - order).abs() > 0.25 {
        return Err(Error::NonConvergentSlope(slope));
    }
    Ok(GapOrder { order: order as usize, slope })
}
