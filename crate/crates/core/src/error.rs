use thiserror::Error;

/// Errors raised anywhere in the numerical pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("alpha out of range: {0}")]
    AlphaOutOfRange(String),
    #[error("k2 out of range: {0} (need k2 < 1)")]
    K2OutOfRange(String),
    #[error("negative deformation time t = {0}")]
    NegativeT(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("z = {0} lies outside [-1, 1]")]
    DomainError(String),
    #[error("evaluation at or too close to a pole: {0}")]
    PoleError(String),
    #[error("quadrature did not converge: estimate {estimate} above tolerance at level {level}")]
    NoConvergence { estimate: String, level: u32 },
    #[error("precision exhausted: {0}")]
    PrecisionExhausted(String),
    #[error("index error: {0}")]
    IndexError(String),
    #[error("singular parameters: {0}")]
    SingularParams(String),
    #[error("step size underflow at t = {t}: {detail}")]
    StepUnderflow { t: String, detail: String },
    #[error("pole hit at t = {t}: {detail}")]
    PoleHit { t: String, detail: String },
}

impl Error {
    /// True for failures of the numerics (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NoConvergence { .. }
                | Error::PrecisionExhausted(_)
                | Error::StepUnderflow { .. }
                | Error::PoleHit { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
