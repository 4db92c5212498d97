use thiserror::Error;

use crate::numerics::Rational;
use crate::state::{AccountId, MintedId, TokenId};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("expected a strictly positive amount, got {0}")]
    NotPositive(Rational),

    #[error("expected a nonnegative amount, got {0}")]
    Negative(Rational),

    #[error("division by zero")]
    DivisionByZero,

    #[error("cannot parse rational {0:?}")]
    ParseRational(String),

    #[error("token pair must be two distinct tokens, got {0} twice")]
    SameToken(TokenId),

    /// The account does not hold enough of an asset (the `enough` condition).
    #[error("{0}")]
    InsufficientBalance(Box<Shortfall>),

    /// No pool exists for the pair (the `exi` condition).
    #[error("no AMM for pair {0}")]
    UninitializedAmm(MintedId),

    /// The operation would empty a reserve (the `nodrain` condition).
    #[error("operation would drain a reserve of pool {0}")]
    ReserveDrained(MintedId),

    #[error("AMM for pair {0} already exists")]
    AlreadyInitialized(MintedId),

    #[error("oracle has no price for token {0}")]
    MissingPrice(TokenId),

    #[error("account {account} holds minted tokens of pool {pool}")]
    TraderHoldsMinted { account: AccountId, pool: MintedId },

    #[error("malformed state: {0}")]
    MalformedState(String),

    #[error("initial state has pools or minted tokens")]
    InvalidInitialState,

    #[error("step {index} is invalid: {cause}")]
    StepInvalid { index: usize, cause: Box<Error> },

    #[error("no valid transaction found for step {step} after {attempts} attempts")]
    GenerationStalled { step: usize, attempts: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("json: {0}")]
    Json(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e.to_string())
    }
}

/// Details of a failed balance check, boxed to keep [`Error`] small.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("account {account} holds {have} of {asset}, needs {need}")]
pub struct Shortfall {
    pub account: AccountId,
    pub asset: String,
    pub have: Rational,
    pub need: Rational,
}

impl Error {
    pub fn insufficient(account: AccountId, asset: String, have: Rational, need: Rational) -> Self {
        Error::InsufficientBalance(Box::new(Shortfall {
            account,
            asset,
            have,
            need,
        }))
    }
}
