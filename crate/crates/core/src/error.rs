use alloc::string::String;
use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Error {
    /// An item size (or side length) outside of `(0, 1]`.
    SizeOutOfRange,
    /// A numeric literal that could not be parsed as an exact rational.
    Parse(String),
    /// A parameter that is structurally unusable (wrong length, bad range...).
    InvalidParameter(String),
    /// A parameter table that breaks one or more of its invariants.
    InvalidTable(usize),
    /// A weight function that must be strictly positive is not.
    NonPositive { interval: usize },
    /// An enumeration refused because it would be too large.
    TooLarge { what: &'static str, size: u128, limit: u128 },
    /// Exact integer arithmetic overflowed its fixed-width representation.
    Overflow(&'static str),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::SizeOutOfRange => write!(f, "size must lie in (0, 1]"),
            Error::Parse(s) => write!(f, "cannot parse exact rational from {s:?}"),
            Error::InvalidParameter(s) => write!(f, "invalid parameter: {s}"),
            Error::InvalidTable(n) => write!(f, "parameter table has {n} violation(s)"),
            Error::NonPositive { interval } => {
                write!(f, "weight function is not positive on interval {interval}")
            }
            Error::TooLarge { what, size, limit } => {
                write!(f, "{what}: {size} exceeds the limit of {limit}")
            }
            Error::Overflow(what) => write!(f, "integer overflow while computing {what}"),
        }
    }
}

impl core::error::Error for Error {}
