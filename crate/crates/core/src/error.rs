use thiserror::Error;

/// Errors raised by the simulation routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("degenerate time step: dt must be non-zero")]
    DegenerateStep,

    #[error("time step |dt| = {dt} exceeds the configured maximum {max}")]
    StepTooLarge { dt: f64, max: f64 },

    #[error("non-finite value in {what} at X = {x}, t = {t}")]
    NumericDomain { what: &'static str, x: f64, t: f64 },

    #[error("tolerance failure: {0}")]
    Tolerance(String),

    #[error("path must contain at least one step")]
    EmptyPath,

    #[error("path weight diverged (non-finite exp(-S/hbar)) on path {path}")]
    Divergence { path: u64 },

    #[error("invalid configuration: {0}")]
    Configuration(String),

    #[error("explicit scheme unstable: (hbar/2m) dt/dx^2 = {ratio} > 0.5")]
    Stability { ratio: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("peak is ambiguous: intensity is flat over the screen window")]
    AmbiguousPeak,

    #[error("cannot parse potential descriptor `{0}`")]
    PotentialDescriptor(String),
}

pub type Result<T> = std::result::Result<T, Error>;
