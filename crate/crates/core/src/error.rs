use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    /// A solver step produced non-finite values, usually because the stepsize
    /// is too large for the dynamics.
    #[error("non-finite values after step {step} (h = {h})")]
    Overflow { step: usize, h: f64 },

    /// The perturbation basis lost rank: some diagonal entry of `R` vanished.
    #[error("degenerate perturbation basis at step {step}: |R[{index},{index}]| = {value:e}")]
    DegenerateBasis {
        step: usize,
        index: usize,
        value: f64,
    },
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
