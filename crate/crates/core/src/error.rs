use thiserror::Error;

/// Errors raised anywhere in the actuator toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParam { name: &'static str, reason: String },

    #[error("MR current {current} A outside [0, {max}] A")]
    CurrentOutOfRange { current: f64, max: f64 },

    #[error("non-finite value in plant state at t = {t:.6} s")]
    NonFinite { t: f64 },

    #[error("synthesis failed: {0}")]
    Synthesis(#[from] SynthesisError),

    #[error("controller fault at t = {t:.6} s: {reason}")]
    ControllerFault { t: f64, reason: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("analysis error: {0}")]
    Analysis(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Failures of the offline gain computations.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthesisError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("weight matrix R is not symmetric positive definite")]
    IndefiniteR,

    #[error("pair is not stabilizable: mode {re:.4e}{im:+.4e}i cannot be reached by the input")]
    NotStabilizable { re: f64, im: f64 },

    #[error("Hamiltonian has eigenvalues on the imaginary axis; no stabilizing solution")]
    ImaginaryAxisEigenvalues,

    #[error("Riccati residual {residual:.3e} exceeds certification bound {bound:.1e}")]
    ResidualNotCertified { residual: f64, bound: f64 },

    #[error("closed loop is not Hurwitz (max real part {max_re:.4e})")]
    NotHurwitz { max_re: f64 },

    #[error("singular matrix while computing {0}")]
    Singular(&'static str),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParam {
        name,
        reason: reason.into(),
    }
}
