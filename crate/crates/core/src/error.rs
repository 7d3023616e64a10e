use thiserror::Error;

/// Errors raised by the library. Each variant maps to a stable category
/// string used by the command-line front end.
#[derive(Debug, Error)]
pub enum Error {
    /// Requested size outside the admissible range (p = 0, for instance).
    #[error("invalid size: {0}")]
    Size(String),

    /// Request exceeds a configured or representable limit.
    #[error("capacity exceeded: {0}")]
    Capacity(String),

    /// Malformed combinatorial structure (dart ids out of range, wrong
    /// bud/leaf counts, ...). Distinct from an invariant violation
    /// reported by [`crate::validate`].
    #[error("structural error: {0}")]
    Structure(String),

    #[error("statistics error: {0}")]
    Statistics(String),

    #[error("series error: {0}")]
    Series(String),

    /// Argument outside the domain of a closed-form evaluator.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("underdetermined fit: {0}")]
    Underdetermined(String),

    #[error("invalid weight: {0}")]
    Weight(String),

    #[error("ill-conditioned fit: {0}")]
    Conditioning(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn category(&self) -> &'static str {
        match self {
            Error::Size(_) => "size",
            Error::Capacity(_) => "capacity",
            Error::Structure(_) => "structure",
            Error::Statistics(_) => "statistics",
            Error::Series(_) => "series",
            Error::Domain(_) => "domain",
            Error::Underdetermined(_) => "underdetermined",
            Error::Weight(_) => "weight",
            Error::Conditioning(_) => "conditioning",
            Error::Parse { .. } => "parse",
            Error::Io(_) => "io",
            Error::Csv(_) => "csv",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
