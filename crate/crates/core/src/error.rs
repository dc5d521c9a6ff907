use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("signal must have at least one entry")]
    EmptySignal,
    #[error("signal entry {index} is not finite")]
    NonFiniteEntry { index: usize },
    #[error("coordinate {index} is out of range for dimension {n}")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("a measurement round is already open")]
    RoundAlreadyOpen,
    #[error("no measurement round is open")]
    NoOpenRound,
    #[error("round token does not belong to the open round")]
    StaleToken,
    #[error("ledger still has an open round")]
    OpenLedger,
    #[error("linear functional has no nonzero coefficient")]
    EmptyFunctional,
    #[error("p must lie in (0, 2), got {0}")]
    InvalidP(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("malformed signal encoding: {0}")]
    Decode(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
