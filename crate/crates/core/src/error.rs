use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("necklace needs at least 3 sites, got {0}")]
    TooFewSites(usize),
    #[error("only odd site counts are supported, got p = {0}")]
    EvenSiteCount(usize),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("matrix is not Hermitian (max deviation {0:.3e})")]
    NotHermitian(f64),
    #[error("Jacobi eigensolver did not converge after {0} sweeps")]
    NoConvergence(usize),
    #[error("band index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },
    #[error("band selection splits a degenerate cluster at level {index} (spacing {spacing:.3e})")]
    SplitDegeneracy { index: usize, spacing: f64 },
    #[error("degenerate energy denominator {0:.3e} in sum over states")]
    DegenerateDenominator(f64),
    #[error("finite-difference curvature unstable at step {step:.3e} (estimates differ by {change:.3e})")]
    StepInstability { step: f64, change: f64 },
    #[error("loop too coarse: consecutive eigenvector overlap {0:.3e}; refine the loop")]
    RefineLoop(f64),
    #[error("deformation loop is not closed")]
    LoopNotClosed,
    #[error("gap closes at {location}")]
    GapClosed { location: String },
    #[error("plaquette sum not integral (residual {0:.3e}); refine the grid")]
    RefinementRequired(f64),
    #[error("gap-opening slope {0:.4} is not close to an integer; use smaller shears")]
    NonConvergentSlope(f64),
    #[error("no conic opening: h'(1) = 0")]
    DegenerateCrossing,
    #[error("resonant denominator cos({m}θ) - cos({other}θ) = {value:.3e} in crossing product")]
    ResonantDenominator { m: usize, other: i64, value: f64 },
    #[error("two-level curvature is singular at x = 0, ϑ = 0")]
    Singular,
    #[error("time step too coarse (unitarity defect {0:.3e})")]
    CoarseStep(f64),
    #[error("minimisation failed: {0}")]
    DescentFailed(String),
    #[error("not applicable: {0}")]
    NotApplicable(String),
}
