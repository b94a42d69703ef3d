use thiserror::Error;

/// Errors raised by the simulation library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("Fock cutoff overflow: population {leakage:.3e} in the top two levels exceeds tolerance {tolerance:.1e}")]
    CutoffOverflow { leakage: f64, tolerance: f64 },

    #[error("rotation axis must have unit length (|n| = {norm})")]
    BadAxis { norm: f64 },

    #[error("rotation axis undefined: |s_(1,1)| = {magnitude:.3e}")]
    AxisUndefined { magnitude: f64 },

    #[error("quadrature did not converge on [{a}, {b}]: estimated error {error:.3e} > tolerance {tolerance:.1e}")]
    QuadratureNonConvergence { a: f64, b: f64, error: f64, tolerance: f64 },

    #[error("step control failure at t = {t}: {reason}")]
    StepControlFailure { t: f64, reason: String },

    #[error("eigenvalue computation failed: {0}")]
    EigenFailure(String),

    #[error("envelope unsuitable for displacement targeting: f0_hat(0) = {f0_hat:.3e}")]
    EnvelopeUnsuitable { f0_hat: f64 },

    #[error("dense evolution refused: n_max = {n_max} exceeds the cap of {cap}")]
    DimensionTooLarge { n_max: usize, cap: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
