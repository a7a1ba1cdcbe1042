//! Two-party fair exchange: a server sells a committed file, a client pays
//! for it, and the payment rail releases the decryption key atomically with
//! the payment.
//!
//! A session runs over any [`transport::Transport`] and settles on any
//! [`world::LedgerAccess`]. The flow is
//!
//! 1. client `OFFER` (proposal), server `OFFER` echo with terms;
//! 2. server `BUNDLE`: ciphertext, consistency proof and rail data;
//! 3. client verifies, pays on the ledger, sends `PAY_EVIDENCE`;
//! 4. server claims with the key and sends `KEY_REVEAL`;
//! 5. client reads the key from the ledger, decrypts and decodes.
//!
//! Any verification failure ends the session with an `ABORT` before money
//! moves; a missing key ends it with a refund after the rail timeout.

pub mod bench;
pub mod client;
pub mod config;
pub mod encoding;
pub mod harness;
pub mod server;
mod session;
pub mod transport;
pub mod wire;
pub mod world;

pub use client::{run_client, ClientIdentity, ClientOutcome, ClientReport, ClientStep};
pub use config::{RailKind, Scheme, SessionConfig};
pub use encoding::{decode_file, encode_file, FileEncoding};
pub use server::{run_server, ServerAssets, ServerIdentity, ServerOptions, ServerOutcome, ServerReport};
pub use session::{Context, Timings};
pub use wire::ReasonCode;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExchangeError {
    #[error("wire format: {0}")]
    Wire(String),
    #[error("timed out waiting for the peer")]
    Timeout,
    #[error("peer closed the connection")]
    Closed,
    #[error("configuration: {0}")]
    Config(String),
    #[error("ledger: {0}")]
    Ledger(String),
    #[error(transparent)]
    Core(#[from] fde_core::Error),
    #[error(transparent)]
    Payment(#[from] fde_payments::PaymentError),
    #[error(transparent)]
    Encoding(#[from] encoding::EncodingError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = ExchangeError> = std::result::Result<T, E>;
