use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// zeta^2 = 0 sits between the scattering and bound regimes.
    #[error("threshold case: zeta^2 = 0 is neither a scattering nor a bound candidate")]
    Threshold,

    #[error("precision exhausted at {digits} digits: {detail}; raise precision to at least {required_digits} digits (+{})", required_digits.saturating_sub(*digits))]
    PrecisionExhausted {
        digits: u32,
        required_digits: u32,
        detail: String,
    },

    #[error("root finder did not converge on interval [{lo}, {hi}]: {detail}")]
    RootFinding {
        lo: String,
        hi: String,
        detail: String,
    },

    #[error("not converged: {0}")]
    NotConverged(String),

    #[error("check failed: {0}")]
    CheckFailure(String),

    #[error("oracle grid: {0}")]
    Grid(String),
}

impl Error {
    /// Process exit status: 1 check failure, 2 usage, 3 precision.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidInput(_) | Error::Threshold => 2,
            Error::PrecisionExhausted { .. } => 3,
            Error::RootFinding { .. } | Error::NotConverged(_) | Error::CheckFailure(_) | Error::Grid(_) => 1,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
