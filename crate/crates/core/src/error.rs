use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Both switching rates are zero, so there is no stationary law. The
    /// caller has to pin the mode explicitly.
    #[error("degenerate process: both switching rates are zero")]
    DegenerateProcess,

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// The drive is too weak for the population-weighted frequency to be the
    /// optimal blind choice.
    #[error("strong-splitting regime: 2π·Δ_TLS/Ω = {ratio:.3} ≥ 1, blind optimum is bimodal")]
    StrongSplitting { ratio: f64 },

    #[error("fit failed: {0}")]
    FitFailed(String),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
