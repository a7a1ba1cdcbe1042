//! Escrow contract that releases payment against the secret key.
//!
//! Lifecycle: `Open` after deployment, `Locked` once the client deposits,
//! then either `Claimed` by the server revealing `sk` with `h^sk = vk` before
//! the timeout, or `Refunded` to the client after it.

use blstrs::{G1Affine, Scalar};
use group::Curve;
use serde::{Deserialize, Serialize};

use crate::ledger::{Address, MockLedger};
use crate::{secret_bytes, PaymentError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ContractId(pub u64);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ContractStatus {
    Open,
    Locked,
    Claimed,
    Refunded,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ContractState {
    pub server: Address,
    pub client: Address,
    #[serde(with = "crate::serde_util::g1")]
    pub h: G1Affine,
    #[serde(with = "crate::serde_util::g1")]
    pub vk: G1Affine,
    pub price: u64,
    /// Last height at which a claim is accepted.
    pub timeout: u64,
    pub status: ContractStatus,
    /// Key published by a successful claim.
    #[serde(with = "crate::serde_util::opt_scalar")]
    pub revealed: Option<Scalar>,
}

impl ContractState {
    pub(crate) fn held(&self) -> u64 {
        if self.status == ContractStatus::Locked {
            self.price
        } else {
            0
        }
    }
}

fn object(id: ContractId) -> String {
    format!("contract/{}", id.0)
}

impl MockLedger {
    /// Server publishes the terms. The payload carries `vk` so anyone can
    /// audit the claim condition.
    pub fn contract_deploy(
        &mut self,
        server: &Address,
        client: &Address,
        h: G1Affine,
        vk: G1Affine,
        price: u64,
        timeout: u64,
    ) -> Result<ContractId> {
        if price == 0 {
            return Err(PaymentError::ZeroAmount);
        }
        let id = ContractId(self.contracts.len() as u64);
        self.contracts.push(ContractState {
            server: server.clone(),
            client: client.clone(),
            h,
            vk,
            price,
            timeout,
            status: ContractStatus::Open,
            revealed: None,
        });
        let mut payload = vk.to_compressed().to_vec();
        payload.extend_from_slice(&price.to_le_bytes());
        payload.extend_from_slice(&timeout.to_le_bytes());
        self.record(object(id), "deploy", payload);
        Ok(id)
    }

    pub fn contract(&self, id: ContractId) -> Result<&ContractState> {
        self.contracts
            .get(id.0 as usize)
            .ok_or_else(|| PaymentError::Unknown(object(id)))
    }

    fn contract_mut(&mut self, id: ContractId) -> Result<&mut ContractState> {
        self.contracts
            .get_mut(id.0 as usize)
            .ok_or_else(|| PaymentError::Unknown(object(id)))
    }

    /// Client deposits the price.
    pub fn contract_lock(&mut self, id: ContractId, caller: &Address) -> Result<()> {
        let height = self.height();
        let c = self.contract(id)?;
        if *caller != c.client {
            return Err(PaymentError::Unauthorized);
        }
        if c.status != ContractStatus::Open {
            return Err(PaymentError::InvalidState("lock"));
        }
        if height > c.timeout {
            return Err(PaymentError::Expired);
        }
        let price = c.price;
        self.debit(caller, price)?;
        self.contract_mut(id)?.status = ContractStatus::Locked;
        self.record(object(id), "lock", price.to_le_bytes().to_vec());
        Ok(())
    }

    /// Server reveals `sk`. Pays out iff `h^sk = vk` and the timeout has not
    /// passed; the key lands in the public event payload.
    pub fn contract_claim(&mut self, id: ContractId, caller: &Address, sk: &Scalar) -> Result<()> {
        let height = self.height();
        let c = self.contract(id)?;
        if *caller != c.server {
            return Err(PaymentError::Unauthorized);
        }
        if c.status != ContractStatus::Locked {
            return Err(PaymentError::InvalidState("claim"));
        }
        if height > c.timeout {
            return Err(PaymentError::Expired);
        }
        if (c.h * sk).to_affine() != c.vk {
            return Err(PaymentError::BadSecret);
        }
        let (price, server) = (c.price, c.server.clone());
        let c = self.contract_mut(id)?;
        c.status = ContractStatus::Claimed;
        c.revealed = Some(*sk);
        self.credit(&server, price);
        self.record(object(id), "claim", secret_bytes(sk).to_vec());
        Ok(())
    }

    /// Client recovers the deposit once the timeout has passed.
    pub fn contract_refund(&mut self, id: ContractId, caller: &Address) -> Result<()> {
        let height = self.height();
        let c = self.contract(id)?;
        if *caller != c.client {
            return Err(PaymentError::Unauthorized);
        }
        if c.status != ContractStatus::Locked {
            return Err(PaymentError::InvalidState("refund"));
        }
        if height <= c.timeout {
            return Err(PaymentError::NotYetExpired);
        }
        let price = c.price;
        self.contract_mut(id)?.status = ContractStatus::Refunded;
        self.credit(caller, price);
        self.record(object(id), "refund", Vec::new());
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use blstrs::G1Projective;
    use group::Group;

    fn setup() -> (MockLedger, Address, Address, ContractId, Scalar) {
        let mut l = MockLedger::new();
        let (s, c) = (Address::from("server"), Address::from("client"));
        l.mint(&c, 100);
        let h = G1Projective::generator() * Scalar::from(3u64);
        let sk = Scalar::from(12345u64);
        let id = l
            .contract_deploy(&s, &c, h.to_affine(), (h * sk).to_affine(), 40, 10)
            .unwrap();
        (l, s, c, id, sk)
    }

    #[test]
    fn three_messages_on_the_happy_path() {
        let (mut l, s, c, id, sk) = setup();
        l.contract_lock(id, &c).unwrap();
        assert_eq!(l.total_balance(), l.supply());
        assert_eq!(l.contract_claim(id, &s, &(sk + Scalar::from(1u64))), Err(PaymentError::BadSecret));
        l.contract_claim(id, &s, &sk).unwrap();
        assert_eq!((l.balance(&s), l.balance(&c)), (40, 60));
        assert_eq!(l.transaction_count(), 3);
        assert_eq!(l.events()[2].payload, secret_bytes(&sk).to_vec());
        assert_eq!(l.contract_claim(id, &s, &sk), Err(PaymentError::InvalidState("claim")));
        assert_eq!(l.total_balance(), l.supply());
    }

    #[test]
    fn claim_requires_lock_and_deadline() {
        let (mut l, s, c, id, sk) = setup();
        assert_eq!(l.contract_claim(id, &s, &sk), Err(PaymentError::InvalidState("claim")));
        l.contract_lock(id, &c).unwrap();
        assert_eq!(l.contract_refund(id, &c), Err(PaymentError::NotYetExpired));
        l.advance_height(11);
        assert_eq!(l.contract_claim(id, &s, &sk), Err(PaymentError::Expired));
        assert_eq!(l.contract_refund(id, &s), Err(PaymentError::Unauthorized));
        l.contract_refund(id, &c).unwrap();
        assert_eq!(l.balance(&c), 100);
        assert!(l.contract(id).unwrap().revealed.is_none());
    }
}
