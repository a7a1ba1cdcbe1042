//! Payment channel with hash-locked updates.
//!
//! Opening and closing are ledger transactions; every purchase in between
//! is an off-chain update, so repeat purchases cost no on-chain messages.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::ledger::{Address, MockLedger};
use crate::{PaymentError, Result};

/// Ledger-side record of the funds a channel holds.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChannelEscrow {
    pub held: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum HtlcState {
    Pending,
    Fulfilled,
    Expired,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChannelHtlc {
    pub amount: u64,
    #[serde(with = "crate::serde_util::array32")]
    pub hashlock: [u8; 32],
    pub expiry: u64,
    pub state: HtlcState,
    pub preimage: Option<Vec<u8>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LightningChannel {
    id: u64,
    client: Address,
    server: Address,
    capacity: u64,
    client_balance: u64,
    server_balance: u64,
    htlcs: Vec<ChannelHtlc>,
    revision: u64,
    closed: bool,
}

impl LightningChannel {
    /// Client funds a channel of `capacity` towards `server`.
    pub fn open(ledger: &mut MockLedger, client: &Address, server: &Address, capacity: u64) -> Result<Self> {
        if capacity == 0 {
            return Err(PaymentError::ZeroAmount);
        }
        ledger.debit(client, capacity)?;
        let id = ledger.channels.len() as u64;
        ledger.channels.push(ChannelEscrow { held: capacity });
        ledger.record(format!("channel/{id}"), "open", capacity.to_le_bytes().to_vec());
        Ok(Self {
            id,
            client: client.clone(),
            server: server.clone(),
            capacity,
            client_balance: capacity,
            server_balance: 0,
            htlcs: Vec::new(),
            revision: 0,
            closed: false,
        })
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn client(&self) -> &Address {
        &self.client
    }

    pub fn server(&self) -> &Address {
        &self.server
    }

    pub fn capacity(&self) -> u64 {
        self.capacity
    }

    pub fn htlcs(&self) -> &[ChannelHtlc] {
        &self.htlcs
    }

    pub fn client_balance(&self) -> u64 {
        self.client_balance
    }

    pub fn server_balance(&self) -> u64 {
        self.server_balance
    }

    pub fn revision(&self) -> u64 {
        self.revision
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn htlc(&self, idx: usize) -> Option<&ChannelHtlc> {
        self.htlcs.get(idx)
    }

    fn in_flight(&self) -> u64 {
        self.htlcs.iter().filter(|h| h.state == HtlcState::Pending).map(|h| h.amount).sum()
    }

    fn check_open(&self) -> Result<()> {
        if self.closed {
            Err(PaymentError::InvalidState("closed"))
        } else {
            Ok(())
        }
    }

    /// Client offers `amount` against `hashlock`, refundable after `expiry`.
    pub fn add_htlc(&mut self, amount: u64, hashlock: [u8; 32], expiry: u64) -> Result<usize> {
        self.check_open()?;
        if amount == 0 {
            return Err(PaymentError::ZeroAmount);
        }
        if amount > self.client_balance {
            return Err(PaymentError::Capacity);
        }
        self.client_balance -= amount;
        self.htlcs.push(ChannelHtlc { amount, hashlock, expiry, state: HtlcState::Pending, preimage: None });
        self.revision += 1;
        Ok(self.htlcs.len() - 1)
    }

    /// Server settles with the preimage; the client learns it from the update.
    pub fn fulfill(&mut self, idx: usize, preimage: &[u8], height: u64) -> Result<()> {
        self.check_open()?;
        let h = self.htlcs.get_mut(idx).ok_or_else(|| PaymentError::Unknown(format!("channel htlc {idx}")))?;
        if h.state != HtlcState::Pending {
            return Err(PaymentError::InvalidState("fulfill"));
        }
        if height > h.expiry {
            return Err(PaymentError::Expired);
        }
        if <[u8; 32]>::from(Sha256::digest(preimage)) != h.hashlock {
            return Err(PaymentError::BadPreimage);
        }
        h.state = HtlcState::Fulfilled;
        h.preimage = Some(preimage.to_vec());
        self.server_balance += h.amount;
        self.revision += 1;
        Ok(())
    }

    /// Returns an unfulfilled HTLC to the client after its expiry.
    pub fn expire(&mut self, idx: usize, height: u64) -> Result<()> {
        self.check_open()?;
        let h = self.htlcs.get_mut(idx).ok_or_else(|| PaymentError::Unknown(format!("channel htlc {idx}")))?;
        if h.state != HtlcState::Pending {
            return Err(PaymentError::InvalidState("expire"));
        }
        if height <= h.expiry {
            return Err(PaymentError::NotYetExpired);
        }
        h.state = HtlcState::Expired;
        self.client_balance += h.amount;
        self.revision += 1;
        Ok(())
    }

    /// Preimages the server has released on this channel.
    pub fn revealed_preimages(&self) -> impl Iterator<Item = &[u8]> {
        self.htlcs.iter().filter_map(|h| h.preimage.as_deref())
    }

    /// Cooperative close; all HTLCs must be resolved first.
    pub fn close(&mut self, ledger: &mut MockLedger) -> Result<()> {
        self.check_open()?;
        if self.in_flight() != 0 {
            return Err(PaymentError::InvalidState("close with pending htlcs"));
        }
        debug_assert_eq!(self.client_balance + self.server_balance, self.capacity);
        ledger.channels[self.id as usize].held = 0;
        ledger.credit(&self.client, self.client_balance);
        ledger.credit(&self.server, self.server_balance);
        let mut payload = self.client_balance.to_le_bytes().to_vec();
        payload.extend_from_slice(&self.server_balance.to_le_bytes());
        payload.extend_from_slice(&self.revision.to_le_bytes());
        ledger.record(format!("channel/{}", self.id), "close", payload);
        self.closed = true;
        Ok(())
    }
}
