use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid field order {0}: must be a prime or a power of two up to 2^16")]
    InvalidField(u64),
    #[error("field of order {order} too small for a length-{n} code")]
    FieldTooSmall { order: u64, n: usize },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("need {needed} symbols to decode, have {available}")]
    InsufficientSymbols { needed: usize, available: usize },
    #[error("singular {0}x{0} system; generator is not MDS")]
    Singular(usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("search failed: {0}")]
    SearchFailed(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("validation failed: {0}")]
    Invalid(String),
    #[error("no zeta for active set {0:?}")]
    NotAnHpPda(Vec<usize>),
    #[error("configuration rejected: {0}")]
    ConfigRejected(String),
    #[error("invalid removal set: {0}")]
    InvalidRemoval(String),
    #[error("user {user} failed to decode: {reason}")]
    DecodeFailure { user: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}
