use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::channel::ChannelEscrow;
use crate::contract::ContractState;
use crate::htlc::HtlcOutput;
use crate::sig::KeyRegistry;
use crate::{PaymentError, Result};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Address(pub String);

impl From<&str> for Address {
    fn from(s: &str) -> Self {
        Address(s.to_owned())
    }
}

impl fmt::Display for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// One ledger transaction. The payload is public; the export carries only
/// its hash.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Event {
    pub height: u64,
    /// Object the transaction touched, e.g. `contract/0`.
    pub object: String,
    pub action: String,
    pub payload_hash: String,
    #[serde(with = "crate::serde_util::bytes")]
    pub payload: Vec<u8>,
}

/// Single-writer simulated chain. Time moves only through
/// [`MockLedger::advance_height`].
#[derive(Debug, Default, Serialize, Deserialize)]
pub struct MockLedger {
    height: u64,
    supply: u64,
    accounts: BTreeMap<Address, u64>,
    pub(crate) contracts: Vec<ContractState>,
    pub(crate) htlcs: Vec<HtlcOutput>,
    pub(crate) channels: Vec<ChannelEscrow>,
    pub(crate) keys: KeyRegistry,
    events: Vec<Event>,
}

impl MockLedger {
    pub fn new() -> Self {
        Self::default()
    }

    /// Genesis allocation; the only way to create money.
    pub fn mint(&mut self, to: &Address, amount: u64) {
        *self.accounts.entry(to.clone()).or_default() += amount;
        self.supply += amount;
    }

    pub fn height(&self) -> u64 {
        self.height
    }

    pub fn advance_height(&mut self, blocks: u64) {
        self.height += blocks;
    }

    pub fn balance(&self, who: &Address) -> u64 {
        self.accounts.get(who).copied().unwrap_or(0)
    }

    pub fn supply(&self) -> u64 {
        self.supply
    }

    /// Free balances plus everything held by contracts, outputs and
    /// channels. Equal to [`MockLedger::supply`] at all times.
    pub fn total_balance(&self) -> u64 {
        let free: u64 = self.accounts.values().sum();
        let contracts: u64 = self.contracts.iter().map(ContractState::held).sum();
        let htlcs: u64 = self.htlcs.iter().filter(|h| h.spent.is_none()).map(|h| h.amount).sum();
        let channels: u64 = self.channels.iter().map(|c| c.held).sum();
        free + contracts + htlcs + channels
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn transaction_count(&self) -> usize {
        self.events.len()
    }

    /// Writes the event log as JSON lines of `(height, object, action,
    /// payload_hash)`.
    pub fn export_events(&self, w: &mut impl Write) -> std::io::Result<()> {
        #[derive(Serialize)]
        struct Line<'a> {
            height: u64,
            object: &'a str,
            action: &'a str,
            payload_hash: &'a str,
        }
        for e in &self.events {
            let line = Line { height: e.height, object: &e.object, action: &e.action, payload_hash: &e.payload_hash };
            serde_json::to_writer(&mut *w, &line)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub(crate) fn debit(&mut self, from: &Address, amount: u64) -> Result<()> {
        let bal = self.accounts.get_mut(from).ok_or(PaymentError::InsufficientFunds)?;
        if *bal < amount {
            return Err(PaymentError::InsufficientFunds);
        }
        *bal -= amount;
        Ok(())
    }

    pub(crate) fn credit(&mut self, to: &Address, amount: u64) {
        *self.accounts.entry(to.clone()).or_default() += amount;
    }

    pub(crate) fn record(&mut self, object: String, action: &str, payload: Vec<u8>) {
        self.events.push(Event {
            height: self.height,
            object,
            action: action.to_owned(),
            payload_hash: hex::encode(Sha256::digest(&payload)),
            payload,
        });
    }
}
