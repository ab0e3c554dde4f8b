use crate::config::{ExperimentConfig, ModelKind};
use crate::output::{Cell, Report};
use crate::CliError;
use shear_transport::bands::{band_structure, chern_number, expected_pump_charge, table_chern, table_order, ChernTorus};
use shear_transport::berry::{longuet_higgins_phase, transport_cycle, DeformationLoop};
use shear_transport::evolution::{operator_identity_residual, IdentityOptions, PathShape};
use shear_transport::jahnteller::{jt_cycle_charge, minimize_seeded, JTParameters, MinimizerClass};
use shear_transport::model::Shear;
use shear_transport::twolevel::{necklace_coefficients, trimer_coefficients};
use shear_transport::Complex64;

fn numerical(context: impl std::fmt::Display) -> impl FnOnce(shear_transport::Error) -> CliError {
    move |e| CliError::Numerical(format!("{context}: {e}"))
}

/// Charge per cycle for each loop radius and flux angle.
pub fn transport_sweep(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    let model = cfg.family()?;
    let band = cfg.band();
    let opts = cfg.transport_options();
    let mut r = Report::new("transport-sweep", &["theta", "eps", "Q", "Q_eps", "lh_phase", "richardson_error"]);
    for &theta in &cfg.grids.thetas {
        for &eps in &cfg.grids.eps {
            log::info!("transport cycle at eps = {eps}, theta = {theta}");
            let lp = DeformationLoop::circle(cfg.loop_center(), eps, cfg.numerics.n_samples).map_err(numerical(format!("eps = {eps}")))?;
            let q = transport_cycle(&*model, &lp, theta, &band, &opts).map_err(numerical(format!("eps = {eps}, theta = {theta}")))?;
            r.push(vec![
                theta.into(),
                eps.into(),
                q.charge_e.into(),
                (q.charge_e * eps).into(),
                q.lh_phase.map(i64::from).into(),
                q.richardson_error.into(),
            ]);
        }
    }
    Ok(r)
}

/// Chern number and opening order of every gap of the helix. A gap that
/// fails is reported and the remaining gaps still run.
pub fn chern_table(cfg: &ExperimentConfig) -> Result<(Report, Vec<String>), CliError> {
    let spec = cfg.spec()?;
    let p = spec.sites();
    let n = &cfg.numerics;
    let torus = ChernTorus { center: cfg.loop_center(), radius: n.chern_radius, n_s: n.chern_grid, n_theta: n.chern_grid + n.chern_grid % 2 };
    let mut r = Report::new(
        "chern-table",
        &["gap", "order", "chern", "plaquette_residual", "pump_charge", "expected_pump_charge", "table_order", "table_chern"],
    );
    let mut failures = Vec::new();
    for gap in 1..p {
        log::info!("Chern number of gap {gap} of {}", p - 1);
        let expected = vec![expected_pump_charge(p, gap).into(), table_order(p, gap).into(), table_chern(p, gap).into()];
        match chern_number(&spec, gap, &torus) {
            Ok(c) => {
                let mut row = vec![gap.into(), c.opening_order.into(), c.chern.into(), c.plaquette_field_residual.into(), c.chern.into()];
                row.extend(expected);
                r.push(row);
            }
            Err(e) => {
                failures.push(format!("gap {gap}: {e}"));
                let mut row = vec![gap.into(), Cell::Missing, Cell::Missing, Cell::Missing, Cell::Missing];
                row.extend(expected);
                r.push(row);
            }
        }
    }
    r.summary.push(("p", p.into()));
    r.details.push(("failures", serde_json::to_value(&failures).unwrap_or_default()));
    Ok((r, failures))
}

/// Residual of the adiabatic operator identity against the time scale.
pub fn evolve_check(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    let model = cfg.family()?;
    let band = cfg.band();
    let eps = cfg.grids.eps[0];
    let path = PathShape::Circle { center: cfg.loop_center(), radius: eps, clockwise: false };
    let opts = IdentityOptions { tau_eps: cfg.grids.tau_eps.clone(), samples: cfg.numerics.identity_samples, phase_step: cfg.numerics.phase_step };
    let mut r =
        Report::new("evolve-check", &["theta", "eps", "tau", "tau_eps", "n_steps", "max_residual", "fitted_slope", "slope_half_width", "annotation"]);
    for &theta in &cfg.grids.thetas {
        log::info!("operator identity at theta = {theta}, {} time scales", opts.tau_eps.len());
        let s = operator_identity_residual(&*model, &path, theta, &band, &opts).map_err(numerical(format!("eps = {eps}, theta = {theta}")))?;
        for run in &s.runs {
            r.push(vec![
                theta.into(),
                eps.into(),
                run.tau.into(),
                run.tau_eps.into(),
                run.n_steps.into(),
                run.max_residual.into(),
                s.slope.into(),
                s.half_width.into(),
                run.annotation.clone().map_or(Cell::Missing, |a| Cell::Text(a.replace(',', ";"))),
            ]);
        }
    }
    Ok(r)
}

/// Minimizer of the static shear–flux energy and, for a conic crossing, the
/// charge carried around the circle of minima.
pub fn jt(cfg: &ExperimentConfig, seed: u64) -> Result<Report, CliError> {
    let j = &cfg.jt;
    let spec = cfg.spec()?;
    let coeffs = match cfg.model.kind {
        ModelKind::Trimer if j.order != 1 => return Err(CliError::Config(format!("the trimer crossing has order 1, got jt.order = {}", j.order))),
        ModelKind::Trimer => trimer_coefficients(&spec.hopping()),
        ModelKind::Necklace => necklace_coefficients(&spec, j.order),
    }
    .map_err(|e| CliError::Config(format!("jt: {e}")))?;
    let params = JTParameters::new(j.k_spring, j.inductance, coeffs, spec.sites())
        .and_then(|p| p.with_branch(j.branch))
        .and_then(|p| p.with_phi0(j.phi0))
        .map_err(|e| CliError::Config(format!("jt: {e}")))?;
    let rep = minimize_seeded(&params, seed).map_err(numerical("minimizer"))?;
    let charge = if rep.class == MinimizerClass::JtCircle { Some(jt_cycle_charge(&params, &spec).map_err(numerical("cycle charge"))?) } else { None };
    let class = serde_json::to_value(rep.class).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default();
    let mut r = Report::new(
        "jt",
        &[
            "class",
            "x_star_radius",
            "phi_star",
            "phi_star_over_phi0",
            "energy",
            "gradient_norm",
            "hessian_definite",
            "jt_radius",
            "magnetic_flux",
            "cycle_charge_closed_form",
            "cycle_charge_numeric",
            "cycle_charge_relative_difference",
        ],
    );
    r.push(vec![
        Cell::Text(class),
        rep.x_star_radius.into(),
        rep.phi_star.into(),
        (rep.phi_star / params.phi0).into(),
        rep.energy.into(),
        rep.gradient_norm.into(),
        i64::from(rep.hessian_definite).into(),
        params.jt_radius().into(),
        params.magnetic_flux().into(),
        charge.map(|c| c.closed_form).into(),
        charge.map(|c| c.numeric).into(),
        charge.map(|c| c.relative_difference).into(),
    ]);
    r.details.push(("minimizer", serde_json::to_value(&rep).unwrap_or_default()));
    r.details.push(("cycle_charge", serde_json::to_value(charge).unwrap_or_default()));
    Ok(r)
}

/// Band energies of the sheared helix over the momentum circle.
pub fn band_data(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    let spec = cfg.spec()?;
    let [re, im] = cfg.grids.shear;
    let bs = band_structure(&spec, Shear::new(re, im), cfg.numerics.n_theta).map_err(numerical(format!("shear = {re}{im:+}i")))?;
    let columns: Vec<String> = std::iter::once("theta".to_string()).chain((1..=bs.p).map(|k| format!("E_{k}"))).collect();
    let mut r = Report::new("band-data", &columns);
    for (j, &t) in bs.thetas.iter().enumerate() {
        let mut row = vec![Cell::Float(t)];
        row.extend(bs.energies.column(j).iter().map(|&e| Cell::Float(e)));
        r.push(row);
    }
    r.summary.push(("min_gap", bs.gaps.iter().copied().fold(f64::INFINITY, f64::min).into()));
    r.details.push(("gaps", serde_json::to_value(&bs.gaps).unwrap_or_default()));
    Ok(r)
}

/// Sign acquired by a real eigenvector carried once round each loop.
pub fn lh_phase(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    let model = cfg.family()?;
    let center = cfg.loop_center();
    let mut r = Report::new("lh-phase", &["center_re", "center_im", "eps", "level", "winding_about_origin", "lh_phase"]);
    for &eps in &cfg.grids.eps {
        let lp = DeformationLoop::circle(center, eps, cfg.numerics.n_samples).map_err(numerical(format!("eps = {eps}")))?;
        let s = longuet_higgins_phase(&*model, &lp, cfg.model.level).map_err(numerical(format!("eps = {eps}")))?;
        r.push(vec![
            center.re.into(),
            center.im.into(),
            eps.into(),
            cfg.model.level.into(),
            lp.winding_number(Complex64::new(0.0, 0.0)).into(),
            i64::from(s).into(),
        ]);
    }
    Ok(r)
}
