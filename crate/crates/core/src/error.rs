use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("index {index} out of range 1..={len}")]
    Index { index: usize, len: usize },

    #[error(
        "capacity exceeded: {what} needs {required_bytes} bytes, budget is {budget_bytes} bytes"
    )]
    Capacity {
        what: &'static str,
        required_bytes: u64,
        budget_bytes: u64,
    },

    #[error("speed is zero, correlation never decays")]
    NoDecorrelation,

    #[error("unsupported input: {0}")]
    Unsupported(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("degenerate spectrum: {0}")]
    DegenerateSpectrum(String),

    #[error("outside validity domain: {0}")]
    OutOfDomain(String),

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("numerical contract violated: {0}")]
    NumericalContract(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
