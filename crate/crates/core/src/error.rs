use alloc::string::String;
use core::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
#[non_exhaustive]
pub enum Error {
    EmptyIdentifier,
    DuplicateClient(String),
    DuplicateLibrary(String),
    UnknownLibrary(String),
    UnknownClient(String),
    EmptyCorpus,
    EmptyPattern,
    EmptyTarget,
    InvalidConfig(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::EmptyIdentifier => f.write_str("identifier must not be empty"),
            Error::DuplicateClient(c) => write!(f, "duplicate client `{c}`"),
            Error::DuplicateLibrary(l) => write!(f, "duplicate library `{l}`"),
            Error::UnknownLibrary(l) => write!(f, "library `{l}` is not in the matrix"),
            Error::UnknownClient(c) => write!(f, "client `{c}` is not in the matrix"),
            Error::EmptyCorpus => f.write_str("empty corpus after filtering"),
            Error::EmptyPattern => f.write_str("pattern has no libraries"),
            Error::EmptyTarget => f.write_str("target library set is empty"),
            Error::InvalidConfig(msg) => write!(f, "invalid configuration: {msg}"),
        }
    }
}

impl core::error::Error for Error {}
