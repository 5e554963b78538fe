use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid value for `{key}`: {msg}")]
    Validation { key: String, msg: String },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("out of domain: {0}")]
    OutOfDomain(String),

    #[error("resolution error: {0}")]
    Resolution(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("undefined dimension: {0}")]
    UndefinedDimension(String),

    #[error("corrupt data: {0}")]
    Corrupt(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn validation(key: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Validation {
            key: key.into(),
            msg: msg.into(),
        }
    }

    /// Process exit status: 2 for usage and configuration problems, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Validation { .. } | Error::Parse(_) | Error::Usage(_) => 2,
            _ => 1,
        }
    }

    /// Short machine-readable tag used in error records.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Config(_) => "config",
            Error::Validation { .. } => "validation",
            Error::Parse(_) => "parse",
            Error::Usage(_) => "usage",
            Error::OutOfDomain(_) => "out_of_domain",
            Error::Resolution(_) => "resolution",
            Error::Domain(_) => "domain",
            Error::UndefinedDimension(_) => "undefined_dimension",
            Error::Corrupt(_) => "corrupt",
            Error::Io(_) => "io",
        }
    }
}
