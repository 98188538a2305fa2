use thiserror::Error;

/// Errors surfaced by the simulation and reconstruction pipeline.
#[derive(Debug, Error)]
pub enum HescError {
    #[error("nyquist violation: required momentum radius {required:.4} exceeds {available:.4} (margin 1.25)")]
    NyquistViolation { required: f64, available: f64 },

    #[error("zero velocity at the requested boost")]
    ZeroVelocity,

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("divergent line integral: {0}")]
    DivergentLineIntegral(String),

    #[error("containment violation: {0}")]
    ContainmentViolation(String),

    #[error("time step too large: dt*max|H0| = {0:.4} exceeds pi")]
    StepTooLarge(f64),

    #[error("scattering element did not converge within r_max = {r_max}; last change {last_change:.3e}")]
    NotConverged {
        r_max: f64,
        last_change: f64,
        log: Vec<(f64, num_complex::Complex64)>,
    },

    #[error("phase wrap risk: estimated |W|/v = {0:.4} >= pi/2")]
    PhaseWrapRisk(f64),

    #[error("empty extraction mask")]
    MaskEmpty,

    #[error("insufficient sinogram coverage: roi radius {roi:.4} exceeds offset span {smax:.4}")]
    InsufficientCoverage { roi: f64, smax: f64 },

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("config error: {0}")]
    ConfigError(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("format error: {0}")]
    Format(String),
}
