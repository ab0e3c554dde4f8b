//! Direct integration of `i U̇ = τ H(x(s), ϑ) U` along a switched deformation
//! path and the adiabatic operator identity
//!
//! `τ ρ(∂_ϑH)ρ = τ P(∂_ϑH)P + Ω_ϑ1(P) ẋ1 + Ω_ϑ2(P) ẋ2 + O(1/ετ)`,
//!
//! with `ρ = U P₀ U†`, `Ω_ϑa(P) = −i P[∂_ϑP, ∂_aP]P` and dots denoting
//! derivatives in the scaled time `s = t/τ`. Units ħ = e = 1.

use crate::linalg::{self, CMatrix};
use crate::model::{HermitianOperator, ParametricFamily};
use crate::spectral::{self, Band, EigenSystem, Projection};
use crate::{Error, Result};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
use std::io::Write;

/// Below this value of `τε` the adiabatic expansion is not trusted.
pub const ADIABATIC_TAU_EPS: f64 = 10.0;

/// Largest phase `τ‖H‖Δs` per step used when the step count is chosen
/// automatically.
pub const DEFAULT_PHASE_STEP: f64 = 0.1;

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathShape {
    Stationary {
        x: Complex64,
    },
    /// One turn around `center` from `center + radius`, at angular speed
    /// `4π sin²(πs)` so that the motion switches on and off smoothly.
    Circle {
        center: Complex64,
        radius: f64,
        clockwise: bool,
    },
}

impl PathShape {
    fn angle(s: f64) -> f64 {
        let s = s.clamp(0.0, 1.0);
        TAU * s - (TAU * s).sin()
    }

    fn angle_rate(s: f64) -> f64 {
        if !(0.0..=1.0).contains(&s) {
            return 0.0;
        }
        TAU * (1.0 - (TAU * s).cos())
    }

    pub fn point(&self, s: f64) -> Complex64 {
        match *self {
            PathShape::Stationary { x } => x,
            PathShape::Circle { center, radius, clockwise } => {
                let dir = if clockwise { -1.0 } else { 1.0 };
                center + Complex64::from_polar(radius, dir * Self::angle(s))
            }
        }
    }

    /// `dx/ds`.
    pub fn velocity(&self, s: f64) -> Complex64 {
        match *self {
            PathShape::Stationary { .. } => Complex64::new(0.0, 0.0),
            PathShape::Circle { center, clockwise, .. } => {
                let dir = if clockwise { -1.0 } else { 1.0 };
                (self.point(s) - center) * I * (dir * Self::angle_rate(s))
            }
        }
    }

    pub fn reversed(&self) -> Self {
        match *self {
            PathShape::Circle { center, radius, clockwise } => PathShape::Circle { center, radius, clockwise: !clockwise },
            other => other,
        }
    }

    pub fn is_closed(&self) -> bool {
        (self.point(1.0) - self.point(0.0)).norm() < 1e-12 * (1.0 + self.point(0.0).norm())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub tau: f64,
    pub x_path: PathShape,
    /// Uniform steps in `s ∈ [0, 1]`.
    pub n_steps: usize,
}

impl Schedule {
    pub fn new(tau: f64, x_path: PathShape, n_steps: usize) -> Result<Self> {
        if !(tau > 0.0) || !tau.is_finite() {
            return Err(Error::Domain(format!("time scale must be positive, got {tau}")));
        }
        if n_steps == 0 {
            return Err(Error::Domain("schedule needs at least one step".into()));
        }
        Ok(Schedule { tau, x_path, n_steps })
    }

    /// Step count chosen so that `τ‖H‖Δs ≤ phase_step` along the path.
    pub fn with_phase_step<M: ParametricFamily + ?Sized>(model: &M, theta: f64, tau: f64, x_path: PathShape, phase_step: f64) -> Result<Self> {
        if !(phase_step > 0.0) {
            return Err(Error::Domain(format!("phase step must be positive, got {phase_step}")));
        }
        let mut norm = 0.0f64;
        for k in 0..=64 {
            let es = spectral::eigensystem(&model.hamiltonian(x_path.point(k as f64 / 64.0), theta))?;
            norm = norm.max(es.values().iter().fold(0.0, |m, e| m.max(e.abs())));
        }
        let n = (tau * norm / phase_step).ceil().max(64.0) as usize;
        Self::new(tau, x_path, n)
    }

    pub fn auto<M: ParametricFamily + ?Sized>(model: &M, theta: f64, tau: f64, x_path: PathShape) -> Result<Self> {
        Self::with_phase_step(model, theta, tau, x_path, DEFAULT_PHASE_STEP)
    }

    pub fn ds(&self) -> f64 {
        1.0 / self.n_steps as f64
    }

    pub fn reversed(&self) -> Self {
        Schedule { x_path: self.x_path.reversed(), ..*self }
    }
}

/// Exponential midpoint rule, `U_{k+1} = exp(−iτΔs H(s_{k+1/2})) U_k`.
/// `observe` sees the propagator at every grid point `s_k = kΔs`.
fn propagate<F, G>(dim: usize, schedule: &Schedule, mut generator: F, mut observe: G) -> Result<CMatrix>
where
    F: FnMut(f64) -> Result<CMatrix>,
    G: FnMut(usize, &CMatrix) -> Result<()>,
{
    let ds = schedule.ds();
    let mut u = linalg::identity(dim);
    observe(0, &u)?;
    for k in 0..schedule.n_steps {
        let h = generator((k as f64 + 0.5) * ds)?;
        u = linalg::unitary_step(&h, schedule.tau * ds).dot(&u);
        observe(k + 1, &u)?;
    }
    let defect = linalg::unitarity_defect(&u);
    if defect > 1e-8 {
        return Err(Error::CoarseStep(defect));
    }
    Ok(u)
}

fn conjugate(u: &CMatrix, p: &CMatrix) -> CMatrix {
    u.dot(p).dot(&linalg::dagger(u))
}

/// Spectral data of a band at one point: the projection and its first
/// derivatives from perturbation theory.
struct BandPoint {
    p: CMatrix,
    d_theta_h: CMatrix,
    dp_theta: CMatrix,
    dp_1: CMatrix,
    dp_2: CMatrix,
}

/// `∂P = Σ_{n∈B, m∉B} (|m⟩⟨m|∂H|n⟩⟨n| + |n⟩⟨n|∂H|m⟩⟨m|)/(E_n − E_m)`.
fn projector_derivative(es: &EigenSystem, inside: &[usize], outside: &[usize], dh: &CMatrix) -> CMatrix {
    let v = es.vectors();
    let vd = linalg::dagger(v);
    let d = vd.dot(dh).dot(v);
    let e = es.values();
    let mut m = CMatrix::zeros(d.raw_dim());
    for &n in inside {
        for &k in outside {
            let w = 1.0 / (e[n] - e[k]);
            m[[k, n]] = d[[k, n]] * w;
            m[[n, k]] = d[[n, k]] * w;
        }
    }
    v.dot(&m).dot(&vd)
}

fn band_point<M: ParametricFamily + ?Sized>(model: &M, x: Complex64, theta: f64, band: &Band) -> Result<BandPoint> {
    let dim = model.dim();
    let inside = band.indices(dim);
    let outside = band.complement(dim);
    let es = spectral::eigensystem(&model.hamiltonian(x, theta))?;
    if spectral::band_isolation(&es, &inside) < spectral::CLUSTER_TOL {
        return Err(Error::GapClosed { location: format!("x = {x:.6}, ϑ = {theta:.6}") });
    }
    let p = spectral::band_projection(&es, &inside)?.matrix;
    let d = model.derivatives(x, theta);
    Ok(BandPoint {
        p,
        dp_theta: projector_derivative(&es, &inside, &outside, &d.d_theta),
        dp_1: projector_derivative(&es, &inside, &outside, &d.d_x1),
        dp_2: projector_derivative(&es, &inside, &outside, &d.d_x2),
        d_theta_h: d.d_theta,
    })
}

impl BandPoint {
    fn p_dot(&self, x_dot: Complex64) -> CMatrix {
        &self.dp_1 * Complex64::new(x_dot.re, 0.0) + &self.dp_2 * Complex64::new(x_dot.im, 0.0)
    }

    /// `Ω_ϑ1(P) ẋ1 + Ω_ϑ2(P) ẋ2` as an operator.
    fn curvature_term(&self, x_dot: Complex64) -> CMatrix {
        let c = linalg::commutator(&self.dp_theta, &self.p_dot(x_dot));
        self.p.dot(&c).dot(&self.p) * (-I)
    }
}

#[derive(Debug, Clone)]
pub struct EvolutionResult {
    pub u: CMatrix,
    /// `U(1) P₀ U(1)†`.
    pub rho: Projection,
    pub unitarity_defect: f64,
    /// Grid points `s_k`, `k = 0..=n_steps`.
    pub s: Vec<f64>,
    /// `Tr(ρ(s_k) ∂_ϑH(x(s_k)))`.
    pub current: Vec<f64>,
}

impl EvolutionResult {
    /// `∫ Tr(ρ ∂_ϑH) ds` by the trapezoid rule.
    pub fn integrated_current(&self) -> f64 {
        self.s.windows(2).zip(self.current.windows(2)).map(|(s, c)| 0.5 * (s[1] - s[0]) * (c[0] + c[1])).sum()
    }
}

pub fn evolve<M: ParametricFamily + ?Sized>(model: &M, schedule: &Schedule, theta: f64, p0: &Projection) -> Result<EvolutionResult> {
    let dim = model.dim();
    if p0.matrix.nrows() != dim {
        return Err(Error::IndexOutOfRange { index: p0.matrix.nrows(), dim });
    }
    let path = schedule.x_path;
    let ds = schedule.ds();
    let mut s = Vec::with_capacity(schedule.n_steps + 1);
    let mut current = Vec::with_capacity(schedule.n_steps + 1);
    let u = propagate(
        dim,
        schedule,
        |sm| Ok(model.hamiltonian(path.point(sm), theta).into_matrix()),
        |k, u| {
            let sk = k as f64 * ds;
            let rho = conjugate(u, &p0.matrix);
            let d = model.derivatives(path.point(sk), theta).d_theta;
            s.push(sk);
            current.push(linalg::trace_product(&rho, &d).re);
            Ok(())
        },
    )?;
    let rho = Projection { matrix: conjugate(&u, &p0.matrix), rank: p0.rank };
    Ok(EvolutionResult { unitarity_defect: linalg::unitarity_defect(&u), u, rho, s, current })
}

/// Kato's generator `H_A = H + (i/τ)[Ṗ, P]`, whose evolution maps the band at
/// `s = 0` onto the band at `s` exactly.
pub fn adiabatic_generator<M: ParametricFamily + ?Sized>(
    model: &M,
    x: Complex64,
    x_dot: Complex64,
    theta: f64,
    band: &Band,
    tau: f64,
) -> Result<HermitianOperator> {
    if !(tau > 0.0) {
        return Err(Error::Domain(format!("time scale must be positive, got {tau}")));
    }
    let h = model.hamiltonian(x, theta).into_matrix();
    if x_dot.norm() == 0.0 {
        return HermitianOperator::new(h);
    }
    let bp = band_point(model, x, theta, band)?;
    let extra = linalg::commutator(&bp.p_dot(x_dot), &bp.p) * (I / tau);
    HermitianOperator::new(h + extra)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdiabaticRun {
    /// Largest `‖U_A P₀ − P(s) U_A‖_F` over the sampled grid points.
    pub intertwining_defect: f64,
    /// Largest `‖U_A P₀ U_A† − P(s)‖_F`.
    pub projection_defect: f64,
    pub unitarity_defect: f64,
}

/// Evolution generated by [`adiabatic_generator`], checked against the
/// spectral projection at `samples + 1` evenly spaced grid points.
pub fn evolve_adiabatic<M: ParametricFamily + ?Sized>(
    model: &M,
    schedule: &Schedule,
    theta: f64,
    band: &Band,
    samples: usize,
) -> Result<AdiabaticRun> {
    let dim = model.dim();
    let path = schedule.x_path;
    let ds = schedule.ds();
    let stride = (schedule.n_steps / samples.max(1)).max(1);
    let p0 = band_point(model, path.point(0.0), theta, band)?.p;
    let (mut inter, mut proj) = (0.0f64, 0.0f64);
    let u = propagate(
        dim,
        schedule,
        |sm| Ok(adiabatic_generator(model, path.point(sm), path.velocity(sm), theta, band, schedule.tau)?.into_matrix()),
        |k, u| {
            if k % stride == 0 || k == schedule.n_steps {
                let p = band_point(model, path.point(k as f64 * ds), theta, band)?.p;
                inter = inter.max(linalg::frobenius(&(u.dot(&p0) - p.dot(u))));
                proj = proj.max(linalg::frobenius(&(conjugate(u, &p0) - p)));
            }
            Ok(())
        },
    )?;
    Ok(AdiabaticRun { intertwining_defect: inter, projection_defect: proj, unitarity_defect: linalg::unitarity_defect(&u) })
}

/// Smallest separation of the band from the rest of the spectrum along the path.
pub fn min_gap_along<M: ParametricFamily + ?Sized>(model: &M, path: &PathShape, theta: f64, band: &Band) -> Result<f64> {
    let idx = band.indices(model.dim());
    let mut gap = f64::INFINITY;
    for k in 0..=256 {
        let x = path.point(k as f64 / 256.0);
        let es = spectral::eigensystem(&model.hamiltonian(x, theta))?;
        let g = spectral::band_isolation(&es, &idx);
        if g < spectral::CLUSTER_TOL {
            return Err(Error::GapClosed { location: format!("x = {x:.6}") });
        }
        gap = gap.min(g);
    }
    Ok(gap)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityOptions {
    /// Time scales in units of the inverse minimal gap.
    pub tau_eps: Vec<f64>,
    /// Grid points per run at which the residual is evaluated.
    pub samples: usize,
    pub phase_step: f64,
}

impl Default for IdentityOptions {
    fn default() -> Self {
        IdentityOptions { tau_eps: vec![500.0, 1000.0, 2000.0, 4000.0], samples: 64, phase_step: DEFAULT_PHASE_STEP }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub s: f64,
    /// `Tr(ρ ∂_ϑH)`.
    pub current: f64,
    /// Frobenius norm of the identity's remainder.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualRun {
    pub tau: f64,
    pub tau_eps: f64,
    pub n_steps: usize,
    pub max_residual: f64,
    pub annotation: Option<String>,
    pub trace: Vec<TracePoint>,
}

impl ResidualRun {
    pub fn write_trace_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "s,current,residual")?;
        for t in &self.trace {
            writeln!(w, "{:.17e},{:.17e},{:.17e}", t.s, t.current, t.residual)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityScaling {
    pub min_gap: f64,
    pub runs: Vec<ResidualRun>,
    /// Log-log slope of the largest residual against `τ`; needs two runs.
    pub slope: Option<f64>,
    /// 95% half-width of the slope; needs three runs.
    pub half_width: Option<f64>,
}

impl IdentityScaling {
    /// Fails unless the slope is within `tol` of `−1`.
    pub fn check_inverse_scaling(&self, tol: f64) -> Result<f64> {
        match self.slope {
            Some(s) if (s + 1.0).abs() <= tol => Ok(s),
            Some(s) => Err(Error::NonConvergentSlope(s)),
            None => Err(Error::Domain("a slope needs at least two time scales".into())),
        }
    }
}

/// Two-sided 97.5% Student quantiles for 1..=10 degrees of freedom.
const STUDENT_975: [f64; 10] = [12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306, 2.262, 2.228];

fn fit_slope(pts: &[(f64, f64)]) -> (Option<f64>, Option<f64>) {
    if pts.len() < 2 {
        return (None, None);
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    if pts.len() < 3 {
        return (Some(slope), None);
    }
    let rss: f64 = pts.iter().map(|p| (p.1 - my - slope * (p.0 - mx)).powi(2)).sum();
    let dof = pts.len() - 2;
    let se = (rss / dof as f64 / sxx).sqrt();
    let t = STUDENT_975.get(dof - 1).copied().unwrap_or(1.96);
    (Some(slope), Some(t * se))
}

/// Integrates the Schrödinger equation at each `τ = tau_eps/ε` and measures
/// `‖τρ(∂_ϑH)ρ − τP(∂_ϑH)P − Ω_ϑ1ẋ1 − Ω_ϑ2ẋ2‖_F` along the path.
pub fn operator_identity_residual<M: ParametricFamily + ?Sized>(
    model: &M,
    path: &PathShape,
    theta: f64,
    band: &Band,
    opts: &IdentityOptions,
) -> Result<IdentityScaling> {
    if opts.tau_eps.is_empty() || opts.tau_eps.iter().any(|t| !(*t > 0.0)) {
        return Err(Error::Domain("time-scale grid must be nonempty and positive".into()));
    }
    let min_gap = min_gap_along(model, path, theta, band)?;
    let dim = model.dim();
    let runs: Vec<ResidualRun> = opts
        .tau_eps
        .par_iter()
        .map(|&te| -> Result<ResidualRun> {
            let tau = te / min_gap;
            let schedule = Schedule::with_phase_step(model, theta, tau, *path, opts.phase_step)?;
            let ds = schedule.ds();
            let stride = (schedule.n_steps / opts.samples.max(1)).max(1);
            let p0 = band_point(model, path.point(0.0), theta, band)?.p;
            let mut trace = Vec::new();
            propagate(
                dim,
                &schedule,
                |sm| Ok(model.hamiltonian(path.point(sm), theta).into_matrix()),
                |k, u| {
                    if k % stride != 0 && k != schedule.n_steps {
                        return Ok(());
                    }
                    let s = k as f64 * ds;
                    let bp = band_point(model, path.point(s), theta, band)?;
                    let rho = conjugate(u, &p0);
                    let d = &bp.d_theta_h;
                    let lhs = rho.dot(d).dot(&rho) * tau;
                    let rhs = bp.p.dot(d).dot(&bp.p) * tau + bp.curvature_term(path.velocity(s));
                    trace.push(TracePoint { s, current: linalg::trace_product(&rho, d).re, residual: linalg::frobenius(&(lhs - rhs)) });
                    Ok(())
                },
            )?;
            let max_residual = trace.iter().fold(0.0f64, |m, t| m.max(t.residual));
            let annotation = (te < ADIABATIC_TAU_EPS).then(|| format!("τε = {te} is below the adiabatic regime bound {ADIABATIC_TAU_EPS}"));
            Ok(ResidualRun { tau, tau_eps: te, n_steps: schedule.n_steps, max_residual, annotation, trace })
        })
        .collect::<Result<_>>()?;
    let pts: Vec<(f64, f64)> = runs.iter().filter(|r| r.max_residual > 0.0).map(|r| (r.tau.ln(), r.max_residual.ln())).collect();
    let (slope, half_width) = if pts.len() == runs.len() { fit_slope(&pts) } else { (None, None) };
    Ok(IdentityScaling { min_gap, runs, slope, half_width })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynamicalCharge {
    /// `−2π τ ∫ Tr(ρ ∂_ϑH) ds` in units of `e`.
    pub charge_e: f64,
    pub tau_eps: f64,
    /// `‖ρ(1) − P(x(1))‖_F`, the population left outside the band.
    pub leak: f64,
    pub warning: Option<String>,
}

/// Charge carried through the ring by one slow traversal of a closed path,
/// from the time-dependent state.
pub fn transported_charge_dynamical<M: ParametricFamily + ?Sized>(
    model: &M,
    schedule: &Schedule,
    theta: f64,
    band: &Band,
) -> Result<DynamicalCharge> {
    if !schedule.x_path.is_closed() {
        return Err(Error::LoopNotClosed);
    }
    let path = schedule.x_path;
    let min_gap = min_gap_along(model, &path, theta, band)?;
    let p0 = band_point(model, path.point(0.0), theta, band)?.p;
    let rank = band.indices(model.dim()).len();
    let run = evolve(model, schedule, theta, &Projection { matrix: p0.clone(), rank })?;
    let charge_e = -TAU * schedule.tau * run.integrated_current();
    let leak = linalg::frobenius(&(&run.rho.matrix - &p0));
    let tau_eps = schedule.tau * min_gap;
    let warning = (tau_eps < ADIABATIC_TAU_EPS).then(|| format!("τε = {tau_eps:.3} is below the adiabatic regime bound {ADIABATIC_TAU_EPS}"));
    Ok(DynamicalCharge { charge_e, tau_eps, leak, warning })
}
