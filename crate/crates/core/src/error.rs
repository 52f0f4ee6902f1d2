use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A configuration field failed validation.
    #[error("invalid value for `{field}`: {reason}")]
    Config { field: String, reason: String },

    /// No observation satisfies the conditioning event.
    #[error("empty estimate: no observations with {0}")]
    EmptyEstimate(String),

    /// A moment needed by the request does not exist.
    #[error("infinite moment: {0}")]
    InfiniteMoment(String),

    /// Input data cannot support the requested fit.
    #[error("degenerate data: {0}")]
    Degenerate(String),

    /// An iterative method failed to converge.
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(field: &str, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.to_string(),
            reason: reason.into(),
        }
    }
}
