//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails. Built without the libtest harness so the lines
//! appear in plain `cargo test` output.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use shear_transport::bands::{
    axial_curvature_integral, axial_loop_integral, chern_number, expected_pump_charge, gap_opening_order, table_chern, table_order, AxialOptions,
    ChernTorus,
};
use shear_transport::berry::{
    curvature_sum_over_states, curvature_trace, longuet_higgins_phase, persistent_response, transport_cycle, CurvatureMethod, DeformationLoop,
    TransportOptions, DEFAULT_FD_STEP,
};
use shear_transport::evolution::{min_gap_along, operator_identity_residual, transported_charge_dynamical, IdentityOptions, PathShape, Schedule};
use shear_transport::jahnteller::{ampere_residual, jt_cycle_charge, minimize, JTParameters, MinimizerClass};
use shear_transport::linalg::CMatrix;
use shear_transport::model::*;
use shear_transport::spectral::{self, Band};
use shear_transport::twolevel::{necklace_coefficients, trimer_coefficients};
use shear_transport::Complex64;
use std::f64::consts::{PI, TAU};
use std::time::{Duration, Instant};

const ORIGIN: Complex64 = Complex64::new(0.0, 0.0);

type Outcome = Result<String, String>;

/// Name, check and optional wall-clock budget.
type Criterion = (&'static str, fn() -> Outcome, Option<Duration>);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn spec(p: usize) -> NecklaceSpec {
    NecklaceSpec::new(p, HoppingLaw::default()).unwrap()
}

/// A trimer with fixed side hoppings.
struct FixedTrimer([f64; 3]);

impl ParametricFamily for FixedTrimer {
    fn dim(&self) -> usize {
        3
    }

    fn hamiltonian(&self, _x: Complex64, theta: f64) -> HermitianOperator {
        let [a, b, c] = self.0;
        trimer_hamiltonian(a, b, c, FluxAngle(theta))
    }

    fn derivatives(&self, x: Complex64, theta: f64) -> Derivatives {
        let h = self.hamiltonian(x, theta);
        let mut d_theta = CMatrix::zeros((3, 3));
        d_theta[[2, 0]] = Complex64::i() * h.matrix()[[2, 0]];
        d_theta[[0, 2]] = -Complex64::i() * h.matrix()[[0, 2]];
        Derivatives { d_theta, d_x1: CMatrix::zeros((3, 3)), d_x2: CMatrix::zeros((3, 3)) }
    }
}

fn homeopathic_law() -> Outcome {
    let m = TrimerCycleModel::default();
    let target = PI * PI / 3f64.sqrt();
    let mut products = Vec::new();
    for eps in [0.04, 0.02, 0.01, 0.005] {
        let lp = DeformationLoop::circle(ORIGIN, eps, 64).map_err(|e| e.to_string())?;
        let q = transport_cycle(&m, &lp, 0.0, &Band::Lowest(1), &TransportOptions::default()).map_err(|e| format!("eps {eps}: {e}"))?;
        products.push(q.charge_e.abs() * eps);
    }
    let lo = products.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = products.iter().copied().fold(0.0, f64::max);
    let spread = (hi - lo) / lo;
    let last = *products.last().unwrap();
    let off = (last - target).abs() / target;
    check(spread < 0.05 && off < 0.03, format!("|Q|·eps = {products:.4?}, spread {spread:.2e}, {off:.2e} from π²/√3"))
}

fn lh_dichotomy() -> Outcome {
    let m = TrimerCycleModel::default();
    let mut encircling = Vec::new();
    for k in 0..=12 {
        let eps = 0.005 * 20f64.powf(k as f64 / 12.0);
        let lp = DeformationLoop::circle(ORIGIN, eps, 64).map_err(|e| e.to_string())?;
        encircling.push(longuet_higgins_phase(&m, &lp, 0).map_err(|e| format!("eps {eps}: {e}"))?);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut outside = Vec::new();
    for _ in 0..20 {
        let center = Complex64::from_polar(rng.gen_range(0.02..0.3), rng.gen_range(0.0..TAU));
        let radius = center.norm() * rng.gen_range(0.1..0.9);
        let lp = DeformationLoop::circle(center, radius, 64).map_err(|e| e.to_string())?;
        outside.push(longuet_higgins_phase(&m, &lp, 0).map_err(|e| format!("loop at {center}: {e}"))?);
    }
    let ok = encircling.iter().all(|&s| s == -1) && outside.iter().all(|&s| s == 1);
    check(ok, format!("encircling {encircling:?}, outside {outside:?}"))
}

fn crossing_locus() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let values: Vec<f64> = (0..50).map(|_| rng.gen_range(0.5..1.5)).collect();
    let thetas = [0.0, PI / 4.0, PI / 2.0, PI];
    let violations: Vec<String> = (0..50 * 50 * 50)
        .into_par_iter()
        .flat_map_iter(|idx| {
            let (a, b, c) = (values[idx / 2500], values[idx / 50 % 50], values[idx % 50]);
            thetas.iter().filter_map(move |&t| {
                let es = spectral::eigensystem(&trimer_hamiltonian(a, b, c, FluxAngle(t))).ok()?;
                let e = es.values();
                let gap = (e[1] - e[0]).min(e[2] - e[1]);
                let predicted = (a - b).abs() < 1e-9 && (b - c).abs() < 1e-9 && (t.cos().abs() - 1.0).abs() < 1e-12;
                ((gap < 1e-9) != predicted).then(|| format!("({a}, {b}, {c}, {t}) gap {gap:e}"))
            })
        })
        .collect();
    check(violations.is_empty(), format!("500000 spectra, {} violations {:?}", violations.len(), violations.iter().take(3).collect::<Vec<_>>()))
}

fn chern_table() -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;
    for (p, want) in [(5usize, vec![-2i64, 1, -1, 2]), (7, vec![-3, 1, -2, 2, -1, 3])] {
        let mut got = Vec::new();
        let mut worst = 0.0f64;
        for gap in 1..p {
            let r = chern_number(&spec(p), gap, &ChernTorus::around_origin(0.05)).map_err(|e| format!("p {p} gap {gap}: {e}"))?;
            worst = worst.max(r.plaquette_field_residual);
            ok &= r.chern == expected_pump_charge(p, gap);
            got.push(r.chern);
        }
        ok &= got == want && worst < 1e-6;
        notes.push(format!("p={p}: {got:?} (residual {worst:.1e})"));
    }
    check(ok, notes.join("; "))
}

fn gap_orders() -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;
    for p in [3usize, 5, 7] {
        for gap in 1..p {
            let o = gap_opening_order(&spec(p), gap, &[0.001, 0.002, 0.004, 0.01]).map_err(|e| format!("p {p} gap {gap}: {e}"))?;
            ok &= (o.slope - table_order(p, gap) as f64).abs() <= 0.05;
            notes.push(format!("{p}/{gap}:{:.3}", o.slope));
        }
    }
    check(ok, format!("slopes {}", notes.join(" ")))
}

fn axial_asymptote() -> Outcome {
    let opts = AxialOptions { method: CurvatureMethod::SumOverStates, ..Default::default() };
    let mut ratios = Vec::new();
    for p in [3usize, 5, 7] {
        let model = NecklaceModel::new(spec(p));
        for gap in 1..p {
            let m = table_order(p, gap) as f64;
            for angle in [0.0, 1.1] {
                let x = Complex64::from_polar(0.01, angle);
                let a = axial_curvature_integral(&model, x, &Band::Lowest(gap), &opts).map_err(|e| format!("p {p} gap {gap}: {e}"))?;
                ratios.push((x * a).norm() * 4.0 * PI / m);
            }
        }
    }
    let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ratios.iter().copied().fold(0.0, f64::max);
    check(lo >= 0.9 && hi <= 1.1, format!("{} closures, |x·A|·4π/m in [{lo:.4}, {hi:.4}]", ratios.len()))
}

fn operator_identity() -> Outcome {
    let m = TrimerCycleModel::default();
    let eps = 0.1;
    let path = PathShape::Circle { center: ORIGIN, radius: eps, clockwise: false };
    let band = Band::Lowest(1);
    let opts = IdentityOptions { tau_eps: vec![400.0, 800.0, 1600.0, 4000.0], ..Default::default() };
    let r = operator_identity_residual(&m, &path, 0.0, &band, &opts).map_err(|e| e.to_string())?;
    let slope = r.slope.ok_or("no slope")?;
    let half = r.half_width.unwrap_or(f64::NAN);
    let lp = DeformationLoop::circle(ORIGIN, eps, 64).map_err(|e| e.to_string())?;
    let geometric = transport_cycle(&m, &lp, 0.0, &band, &TransportOptions::default()).map_err(|e| e.to_string())?.charge_e;
    let gap = min_gap_along(&m, &path, 0.0, &band).map_err(|e| e.to_string())?;
    let sched = Schedule::auto(&m, 0.0, 1e4 / gap, path).map_err(|e| e.to_string())?;
    let q = transported_charge_dynamical(&m, &sched, 0.0, &band).map_err(|e| e.to_string())?;
    let off = (q.charge_e - geometric).abs() / geometric.abs();
    check((slope + 1.0).abs() <= 0.2 && off < 0.03, format!("slope {slope:.4} ± {half:.4}; Q_dyn {:.4} vs Q {geometric:.4} ({off:.1e})", q.charge_e))
}

fn persistent_vanishing() -> Outcome {
    let law = HoppingLaw::default();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst_zero = 0.0f64;
    let mut best_flux = 0.0f64;
    for _ in 0..100 {
        let (r, a) = (rng.gen_range(0.0..0.9f64).sqrt(), rng.gen_range(0.0..TAU));
        let shape = TrimerShape { q: rng.gen_range(1.0..6.0), x: r * a.cos(), y: r * a.sin() };
        let m = FixedTrimer(sides_from_jacobi(&shape).map(|s2| law.evaluate(s2.sqrt())));
        worst_zero = worst_zero.max(persistent_response(&m, ORIGIN, 0.0, &Band::Lowest(1), 1e-4).map_err(|e| e.to_string())?.abs());
        best_flux = best_flux.max(persistent_response(&m, ORIGIN, 0.3, &Band::Lowest(1), 1e-4).map_err(|e| e.to_string())?.abs());
    }
    check(worst_zero < 1e-9 && best_flux > 1e-4, format!("max at ϑ=0: {worst_zero:.1e}; max at ϑ=0.3: {best_flux:.3e}"))
}

fn jahn_teller() -> Outcome {
    let e = |e: shear_transport::Error| e.to_string();
    let trimer = JTParameters::new(10.0, 1.0, trimer_coefficients(&HoppingLaw::default()).map_err(e)?, 3).map_err(e)?;
    let up = minimize(&trimer.with_branch(1).map_err(e)?).map_err(e)?;
    let jt = minimize(&trimer).map_err(e)?;
    let pentagon = JTParameters::new(10.0, 1.0, necklace_coefficients(&spec(5), 2).map_err(e)?, 5).map_err(e)?;
    let mag = minimize(&pentagon).map_err(e)?;
    let classes = up.class == MinimizerClass::Trivial && jt.class == MinimizerClass::JtCircle && mag.class == MinimizerClass::Magnetic;
    let radius_err = (jt.x_star_radius - 4.0 / 30.0).abs();
    let charge = jt_cycle_charge(&trimer, &spec(3)).map_err(e)?;
    let ratio = mag.phi_star / pentagon.magnetic_flux();
    let stationarity = ampere_residual(&pentagon, ORIGIN, mag.phi_star).abs();
    check(
        classes && radius_err < 1e-8 && charge.relative_difference < 0.10 && (0.5..=2.0).contains(&ratio) && stationarity < 1e-8,
        format!(
            "classes {:?}/{:?}/{:?}; radius error {radius_err:.1e}; cycle charge {:.3} vs {:.3}; |φ|/(L|f|) {ratio:.6}, Ampère {stationarity:.1e}",
            up.class,
            jt.class,
            mag.class,
            charge.numeric.abs(),
            charge.closed_form
        ),
    )
}

fn oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let trimer = TrimerCycleModel::default();
    let pentagon = NecklaceModel::new(spec(5));
    let mut worst = 0.0f64;
    for k in 0..100 {
        let x = Complex64::from_polar(rng.gen_range(0.02..0.3), rng.gen_range(0.0..TAU));
        let t = rng.gen_range(-PI..PI);
        let (a, b) = if k % 2 == 0 {
            let band = Band::Lowest(1);
            (curvature_trace(&trimer, x, t, &band, DEFAULT_FD_STEP), curvature_sum_over_states(&trimer, x, t, &band))
        } else {
            let band = Band::Lowest(rng.gen_range(1..5));
            (curvature_trace(&pentagon, x, t, &band, DEFAULT_FD_STEP), curvature_sum_over_states(&pentagon, x, t, &band))
        };
        let (a, b) = (a.map_err(|e| e.to_string())?.omega_theta_x, b.map_err(|e| e.to_string())?.omega_theta_x);
        worst = worst.max((a - b).norm() / b.norm());
    }
    let opts = AxialOptions { method: CurvatureMethod::SumOverStates, ..Default::default() };
    let mut pairs = Vec::new();
    let mut agree = true;
    for p in [3usize, 5, 7] {
        let model = NecklaceModel::new(spec(p));
        let lp = DeformationLoop::circle(ORIGIN, 0.05, 32).map_err(|e| e.to_string())?;
        for gap in 1..p {
            let fhs = chern_number(&spec(p), gap, &ChernTorus::around_origin(0.05)).map_err(|e| e.to_string())?.chern;
            let loop_value = axial_loop_integral(&model, &lp, &Band::Lowest(gap), &opts).map_err(|e| e.to_string())?;
            agree &= fhs == loop_value.round() as i64 && fhs == table_chern(p, gap);
            pairs.push(format!("{p}/{gap}: {fhs} vs {loop_value:.6}"));
        }
    }
    check(worst < 1e-5 && agree, format!("worst relative difference {worst:.1e}; Chern vs loop integral {}", pairs.join(", ")))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("homeopathic law", homeopathic_law, Some(Duration::from_secs(10))),
        ("Longuet-Higgins dichotomy", lh_dichotomy, None),
        ("crossing locus", crossing_locus, Some(Duration::from_secs(30))),
        ("Chern table", chern_table, Some(Duration::from_secs(120))),
        ("gap-opening orders", gap_orders, None),
        ("axial asymptote", axial_asymptote, None),
        ("operator identity scaling", operator_identity, Some(Duration::from_secs(300))),
        ("persistent response", persistent_vanishing, None),
        ("Jahn-Teller minimizers", jahn_teller, None),
        ("oracle equivalence", oracle_equivalence, None),
    ];
    let mut failed = 0;
    for (k, (name, run, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let mut outcome = run();
        let elapsed = start.elapsed();
        if let (Ok(detail), Some(limit)) = (&outcome, budget) {
            if elapsed > *limit {
                outcome = Err(format!("{detail}; over the {}s budget", limit.as_secs()));
            }
        }
        let (tag, detail) = match outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("{tag} {:>2} {name} [{:.1}s]: {detail}", k + 1, elapsed.as_secs_f64());
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
