use thiserror::Error;

/// Failure modes shared by every module of the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not symmetric: asymmetry {asymmetry:e} exceeds tolerance {tolerance:e}")]
    NotSymmetric { asymmetry: f64, tolerance: f64 },

    #[error("matrix is numerically singular: sigma_min/sigma_max = {ratio:e} is below tolerance {tolerance:e}")]
    SingularMatrix { ratio: f64, tolerance: f64 },

    #[error("jacobian determinant {det:e} is not positive")]
    NonPositiveJacobian { det: f64 },

    #[error("{0}")]
    Domain(String),

    #[error("degenerate spectrum: requires 1 < a < b with separation above {epsilon:e} (got a = {a}, b = {b})")]
    DegenerateSpectrum { a: f64, b: f64, epsilon: f64 },

    #[error("square-root branch undefined: alpha = {alpha:e} and beta = {beta:e} do not share a sign")]
    Branch { alpha: f64, beta: f64 },

    #[error("stationarity constraint violated: residual {residual:e}")]
    ConstraintViolated { residual: f64 },

    #[error("cardano evaluation left an imaginary residue of {residue:e}")]
    ComplexLeakage { residue: f64 },

    #[error("phase {phase} lies on a sawtooth breakpoint")]
    Breakpoint { phase: f64 },

    #[error("probe radius {radius:e} exceeds the distance {distance:e} to the nearest breakpoint plane")]
    TooCoarse { radius: f64, distance: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
