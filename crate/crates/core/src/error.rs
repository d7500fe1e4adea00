use thiserror::Error;

/// Stable identifiers for configuration failures, reported by the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConfigErrorCode {
    Syntax,
    UnknownKind,
    MissingField,
    InvalidValue,
    Invariant,
}

impl ConfigErrorCode {
    pub fn as_str(self) -> &'static str {
        match self {
            ConfigErrorCode::Syntax => "E_SYNTAX",
            ConfigErrorCode::UnknownKind => "E_UNKNOWN_KIND",
            ConfigErrorCode::MissingField => "E_MISSING_FIELD",
            ConfigErrorCode::InvalidValue => "E_INVALID_VALUE",
            ConfigErrorCode::Invariant => "E_INVARIANT",
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("matrix is not positive definite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },
    #[error("invalid variogram: {0}")]
    InvalidVariogram(String),
    #[error("schedule too early: Σ_n = 11ᵀ − Γ/c_n with c_n = {c_n} has smallest eigenvalue {min_eigenvalue:e}")]
    ScheduleTooEarly { c_n: f64, min_eigenvalue: f64 },
    #[error("unsupported law: {0}")]
    UnsupportedLaw(String),
    #[error("no solution: {0}")]
    NoSolution(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("problem too large: {0}")]
    TooLarge(String),
    #[error("empty input: {0}")]
    EmptyInput(String),
    #[error("config error {} at `{path}`: {message}", code.as_str())]
    Config {
        code: ConfigErrorCode,
        path: String,
        message: String,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
