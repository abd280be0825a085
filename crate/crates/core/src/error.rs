//! Error types, one enum per subsystem.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("step-halving disagreement {disagreement:.3e} exceeds tolerance {tol:.3e}")]
    NonconvergentIntegration { disagreement: f64, tol: f64 },
    #[error("invalid curvature profile: {0}")]
    InvalidProfile(String),
    #[error("model is parabolic: the kernel integral diverges")]
    ParabolicModel,
    #[error("kernel value {0:.6e} outside the representable range")]
    OutOfRange(f64),
    #[error("evaluation at s = {0:.6e} is below the origin floor {1:.6e}")]
    SingularOrigin(f64, f64),
    #[error("comparison function zeta fails nonnegativity (min {0:.3e}); profile is not pinching")]
    NotPinching(f64),
    #[error("log-volume slope has not stabilized by r_max (windows differ by {0:.3e})")]
    NoPlateau(f64),
}

#[derive(Debug, Error)]
pub enum SpectrumError {
    #[error("shooting and matrix eigenvalues disagree by {disagreement:.3e} (tolerance {tol:.3e})")]
    ResolutionTooCoarse { disagreement: f64, tol: f64 },
    #[error("bottom estimates increase with truncation radius (jump {0:.3e})")]
    Nonmonotone(f64),
    #[error("solution grew beyond representable range at s = {0:.3}")]
    OverflowGrowth(f64),
    #[error("{0}")]
    BadInput(String),
}

#[derive(Debug, Error)]
pub enum WeylError {
    #[error("{0}")]
    BadInput(String),
    #[error("window ordering violated: need t0+1 < t < s <= S-1, got t={t}, s={s}, S={cap_s}")]
    BadWindow { t: f64, s: f64, cap_s: f64 },
    #[error("window [{0}, {1}] exceeds the tabulated grid (r_max = {2})")]
    WindowExceedsGrid(f64, f64, f64),
    #[error("cutoff support [{0}, {1}] touches the mesh boundary or leaves the converged window [{2}, {3}]")]
    WindowTouchesBoundary(f64, f64, f64, f64),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("curvature -K = {0:.4} exceeds the declared envelope {1:.4}")]
    CurvatureViolation(f64, f64),
    #[error("{0}")]
    BadInput(String),
    #[error("linear solve stalled: relative residual {0:.3e} after {1} iterations")]
    SolverFailure(f64, usize),
    #[error("exhaustion kernels are not monotone (min increment {0:.3e})")]
    NonmonotoneExhaustion(f64),
    #[error("no cells fall in the requested band [{0}, {1}]")]
    EmptyBand(f64, f64),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}
