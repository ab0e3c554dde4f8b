//! Experiment configuration: one strict JSON document, every key optional.

use crate::CliError;
use serde::{Deserialize, Serialize};
use shear_transport::berry::{CurvatureMethod, TransportOptions, DEFAULT_FD_STEP};
use shear_transport::model::{HoppingLaw, NecklaceModel, NecklaceSpec, ParametricFamily, TrimerCycleModel};
use shear_transport::spectral::Band;
use shear_transport::Complex64;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    pub grids: Grids,
    pub numerics: Numerics,
    pub jt: JtConfig,
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    /// Three sites, hoppings to first order in the shear.
    Trimer,
    /// `p` sites with the full nonlinear shear.
    Necklace,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case", deny_unknown_fields)]
pub enum HoppingConfig {
    Exponential { t0: f64, beta: f64 },
    Linear { h1: f64, slope: f64 },
}

impl Default for HoppingConfig {
    fn default() -> Self {
        HoppingConfig::Exponential { t0: 1.0, beta: 2.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub kind: ModelKind,
    pub p: usize,
    pub hopping: HoppingConfig,
    /// Bond carrying the flux phase (necklace only); defaults to bond `p`.
    pub flux_bond: Option<usize>,
    /// Number of lowest levels in the transported band.
    pub band: usize,
    /// Level followed by `lh-phase`, counted from zero.
    pub level: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig { kind: ModelKind::Trimer, p: 3, hopping: HoppingConfig::default(), flux_bond: None, band: 1, level: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Grids {
    /// Loop radii.
    pub eps: Vec<f64>,
    /// Time scales in units of the inverse minimal gap.
    pub tau_eps: Vec<f64>,
    /// Flux angles (Bloch momenta for chains).
    pub thetas: Vec<f64>,
    pub loop_center: [f64; 2],
    /// Shear used by `band-data`.
    pub shear: [f64; 2],
}

impl Default for Grids {
    fn default() -> Self {
        Grids {
            eps: vec![0.04, 0.02, 0.01, 0.005],
            tau_eps: vec![500.0, 1000.0, 2000.0, 4000.0],
            thetas: vec![0.0],
            loop_center: [0.0, 0.0],
            shear: [0.05, 0.0],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodConfig {
    Projector,
    SumOverStates,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Numerics {
    pub method: MethodConfig,
    pub fd_step: f64,
    /// Initial samples per loop.
    pub n_samples: usize,
    pub max_samples: usize,
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Momentum grid of `band-data`.
    pub n_theta: usize,
    pub chern_radius: f64,
    pub chern_grid: usize,
    pub phase_step: f64,
    /// Residual evaluations per `evolve-check` run.
    pub identity_samples: usize,
}

impl Default for Numerics {
    fn default() -> Self {
        Numerics {
            method: MethodConfig::Projector,
            fd_step: DEFAULT_FD_STEP,
            n_samples: 64,
            max_samples: 1 << 14,
            rel_tol: 1e-4,
            abs_tol: 1e-10,
            n_theta: 256,
            chern_radius: 0.05,
            chern_grid: 48,
            phase_step: 0.1,
            identity_samples: 64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct JtConfig {
    pub k_spring: f64,
    pub inductance: f64,
    pub phi0: f64,
    /// −1 for the lower electronic surface, +1 for the upper.
    pub branch: i32,
    /// Order of the crossing (necklace doublet index); the trimer only has 1.
    pub order: usize,
}

impl Default for JtConfig {
    fn default() -> Self {
        JtConfig { k_spring: 10.0, inductance: 1.0, phi0: shear_transport::jahnteller::DEFAULT_PHI0, branch: -1, order: 1 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    /// Where to write the result; `--out` takes precedence, stdout otherwise.
    pub path: Option<PathBuf>,
}

fn bad(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn positive(name: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(bad(format!("{name} must be positive and finite, got {v}")))
    }
}

fn positive_grid(name: &str, v: &[f64]) -> Result<(), CliError> {
    if v.is_empty() {
        return Err(bad(format!("grid {name} is empty")));
    }
    v.iter().try_for_each(|&x| positive(name, x))
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| bad(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(m) => bad(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Parses and validates; serde reports line and column on malformed input.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| bad(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let g = &self.grids;
        positive_grid("eps", &g.eps)?;
        positive_grid("tau_eps", &g.tau_eps)?;
        if g.thetas.is_empty() {
            return Err(bad("grid thetas is empty"));
        }
        if g.thetas.iter().chain(&g.loop_center).chain(&g.shear).any(|v| !v.is_finite()) {
            return Err(bad("grid values must be finite"));
        }
        let n = &self.numerics;
        for (name, v) in
            [("fd_step", n.fd_step), ("rel_tol", n.rel_tol), ("abs_tol", n.abs_tol), ("chern_radius", n.chern_radius), ("phase_step", n.phase_step)]
        {
            positive(name, v)?;
        }
        if n.n_samples < 8 || n.max_samples < n.n_samples {
            return Err(bad(format!("need 8 ≤ n_samples ≤ max_samples, got {} and {}", n.n_samples, n.max_samples)));
        }
        if n.identity_samples == 0 {
            return Err(bad("identity_samples must be positive"));
        }
        let j = &self.jt;
        for (name, v) in [("k_spring", j.k_spring), ("inductance", j.inductance), ("phi0", j.phi0)] {
            positive(name, v)?;
        }
        if j.branch != 1 && j.branch != -1 {
            return Err(bad(format!("jt.branch must be ±1, got {}", j.branch)));
        }
        let m = &self.model;
        if m.kind == ModelKind::Trimer && m.p != 3 {
            return Err(bad(format!("the trimer has p = 3, got p = {}", m.p)));
        }
        let spec = self.spec()?;
        if m.band == 0 || m.band >= spec.sites() {
            return Err(bad(format!("model.band must lie in 1..{}, got {}", spec.sites(), m.band)));
        }
        if m.level >= spec.sites() {
            return Err(bad(format!("model.level must lie in 0..{}, got {}", spec.sites(), m.level)));
        }
        self.family()?;
        Ok(())
    }

    pub fn hopping(&self) -> Result<HoppingLaw, CliError> {
        match self.model.hopping {
            HoppingConfig::Exponential { t0, beta } => HoppingLaw::exponential(t0, beta),
            HoppingConfig::Linear { h1, slope } => HoppingLaw::linear(h1, slope),
        }
        .map_err(|e| bad(e.to_string()))
    }

    pub fn spec(&self) -> Result<NecklaceSpec, CliError> {
        NecklaceSpec::new(self.model.p, self.hopping()?).map_err(|e| bad(e.to_string()))
    }

    pub fn family(&self) -> Result<Box<dyn ParametricFamily>, CliError> {
        Ok(match self.model.kind {
            ModelKind::Trimer => Box::new(TrimerCycleModel::new(self.hopping()?)),
            ModelKind::Necklace => {
                let spec = self.spec()?;
                match self.model.flux_bond {
                    Some(b) => Box::new(NecklaceModel::with_flux_bond(spec, b).map_err(|e| bad(format!("model.flux_bond: {e}")))?),
                    None => Box::new(NecklaceModel::new(spec)),
                }
            }
        })
    }

    pub fn band(&self) -> Band {
        Band::Lowest(self.model.band)
    }

    pub fn loop_center(&self) -> Complex64 {
        Complex64::new(self.grids.loop_center[0], self.grids.loop_center[1])
    }

    pub fn method(&self) -> CurvatureMethod {
        match self.numerics.method {
            MethodConfig::Projector => CurvatureMethod::Projector { fd_step: self.numerics.fd_step },
            MethodConfig::SumOverStates => CurvatureMethod::SumOverStates,
        }
    }

    pub fn transport_options(&self) -> TransportOptions {
        let n = &self.numerics;
        TransportOptions { method: self.method(), rel_tol: n.rel_tol, abs_tol: n.abs_tol, max_samples: n.max_samples }
    }
}
