//! Error type shared by all modules of the crate.

use std::fmt;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by the toolkit.
#[derive(Debug)]
pub enum Error {
    /// Unknown names, invalid parameter combinations, bad flag values.
    Config(String),
    /// Shape mismatches and other precondition violations on otherwise
    /// valid configurations.
    Argument(String),
    /// Diverging iterations, non-convergent limits, failed residual checks.
    Numerical(String),
    /// Underlying I/O failure, annotated with the path involved.
    Io { path: String, source: std::io::Error },
    /// Malformed file contents. `offset` is the byte position at which
    /// parsing gave up.
    Parse {
        path: String,
        offset: usize,
        message: String,
    },
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn argument(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }

    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn parse(path: impl Into<String>, offset: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            offset,
            message: message.into(),
        }
    }

    /// Process exit code used by the command-line frontend:
    /// 1 configuration, 2 I/O or parsing, 3 numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Argument(_) => 1,
            Error::Io { .. } | Error::Parse { .. } => 2,
            Error::Numerical(_) => 3,
        }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Config(m) => write!(f, "configuration error: {m}"),
            Error::Argument(m) => write!(f, "argument error: {m}"),
            Error::Numerical(m) => write!(f, "numerical error: {m}"),
            Error::Io { path, source } => write!(f, "i/o error on {path}: {source}"),
            Error::Parse {
                path,
                offset,
                message,
            } => write!(f, "parse error in {path} at byte {offset}: {message}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io { source, .. } => Some(source),
            _ => None,
        }
    }
}
