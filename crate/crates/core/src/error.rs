use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure a widget, its backend or the protocol layer can report.
///
/// Each variant maps to a stable short code (see [`Error::code`]) used in
/// protocol error envelopes, replay reports and HTTP responses.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("payload error: {0}")]
    Payload(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("not found: {0}")]
    NotFound(String),

    #[error("user function for `{action}` failed: {message}")]
    Udf { action: String, message: String },

    #[error("backend error: {0}")]
    Backend(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub fn code(&self) -> &'static str {
        match self {
            Error::Payload(_) => "payload",
            Error::Contract(_) => "contract",
            Error::NotFound(_) => "not_found",
            Error::Udf { .. } => "udf_error",
            Error::Backend(_) => "backend",
            Error::Format(_) => "format",
            Error::Protocol(_) => "protocol",
            Error::Io(_) => "io",
        }
    }

    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub(crate) fn not_found(msg: impl Into<String>) -> Self {
        Error::NotFound(msg.into())
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
