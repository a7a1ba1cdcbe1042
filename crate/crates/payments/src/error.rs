use thiserror::Error;

use crate::htlc::ScriptError;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PaymentError {
    #[error("unknown {0}")]
    Unknown(String),
    #[error("insufficient funds")]
    InsufficientFunds,
    #[error("operation not allowed in state {0}")]
    InvalidState(&'static str),
    #[error("key does not match the verification key")]
    BadSecret,
    #[error("preimage does not match the hashlock")]
    BadPreimage,
    #[error("timeout has passed")]
    Expired,
    #[error("timeout not reached")]
    NotYetExpired,
    #[error("caller is not a party to this object")]
    Unauthorized,
    #[error("capacity exceeded")]
    Capacity,
    #[error("amount must be positive")]
    ZeroAmount,
    #[error("script failed: {0}")]
    Script(#[from] ScriptError),
}

pub type Result<T, E = PaymentError> = std::result::Result<T, E>;
