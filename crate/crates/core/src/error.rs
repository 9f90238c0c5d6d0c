use std::fmt;
use std::io;

/// Errors raised by the buffer policies, the analysis routines and the transport.
#[derive(Debug)]
pub enum Error {
    /// An argument fell outside the domain of the operation.
    Domain {
        op: &'static str,
        reason: String,
    },
    /// A message arrived with a sequence number not above every buffered one.
    NonMonotonic {
        seq: u64,
        last: u64,
    },
    /// An exhaustive search was refused because the instance is too large.
    InstanceTooLarge {
        size: u128,
        limit: u128,
    },
    /// `emit_csv` was handed no rows.
    EmptyTrace,
    /// A frame on the wire was malformed.
    Protocol(String),
    /// Could not reach a transport endpoint; worth retrying.
    Connect {
        endpoint: String,
        source: io::Error,
    },
    Io(io::Error),
}

impl Error {
    pub(crate) fn domain(op: &'static str, reason: impl Into<String>) -> Self {
        Error::Domain {
            op,
            reason: reason.into(),
        }
    }

    pub fn is_retriable(&self) -> bool {
        matches!(self, Error::Connect { .. })
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain { op, reason } => write!(f, "{op}: {reason}"),
            Error::NonMonotonic { seq, last } => write!(
                f,
                "sequence number {seq} is not greater than last buffered {last}"
            ),
            Error::InstanceTooLarge { size, limit } => write!(
                f,
                "search space {size} exceeds the limit of {limit} branches"
            ),
            Error::EmptyTrace => write!(f, "no trace rows to emit"),
            Error::Protocol(msg) => write!(f, "protocol error: {msg}"),
            Error::Connect { endpoint, source } => {
                write!(f, "cannot connect to {endpoint}: {source}")
            }
            Error::Io(err) => write!(f, "i/o error: {err}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io(err) | Error::Connect { source: err, .. } => Some(err),
            _ => None,
        }
    }
}

impl From<io::Error> for Error {
    fn from(err: io::Error) -> Self {
        Error::Io(err)
    }
}

pub type Result<T> = std::result::Result<T, Error>;
