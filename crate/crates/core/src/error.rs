use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected} qubits, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("{what} exceeds limit: {got} > {limit}")]
    Size {
        what: &'static str,
        limit: usize,
        got: usize,
    },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("degenerate Jastrow factor: <J^dag J> = {value:e} <= {tol:e}; restart advised")]
    DegenerateJastrow { value: f64, tol: f64 },

    #[error("correlation fraction undefined: reference energy equals starting energy")]
    UndefinedFraction,

    #[error("optimizer failure: {0}")]
    Optimizer(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
        if expected == found {
            Ok(())
        } else {
            Err(Error::Dimension { expected, found })
        }
    }
}
