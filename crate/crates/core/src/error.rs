use std::fmt;

/// Errors produced by domain checks, configuration handling and file I/O.
#[derive(Debug)]
pub enum Error {
    /// An argument violated an operation's domain (negative threshold,
    /// non-positive distance, malformed permutation, ...).
    InvalidInput(String),
    /// A configuration key or value is invalid or unknown.
    InvalidConfig(String),
    /// Reading or writing a file failed.
    Io(std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidInput(msg) => write!(f, "invalid input: {msg}"),
            Error::InvalidConfig(msg) => write!(f, "invalid config: {msg}"),
            Error::Io(err) => write!(f, "i/o error: {err}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io(err) => Some(err),
            _ => None,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err)
    }
}
