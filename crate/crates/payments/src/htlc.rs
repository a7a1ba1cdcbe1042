//! Hash time-locked output in the style of Bitcoin script.
//!
//! ```text
//! OP_IF
//!     OP_SHA256 <t> OP_EQUALVERIFY <server_pk> OP_CHECKSIG
//! OP_ELSE
//!     <timeout> OP_CHECKLOCKTIMEVERIFY OP_DROP <client_pk> OP_CHECKSIG
//! OP_ENDIF
//! ```
//!
//! Success witness `[sig_server, sk, 1]`, refund witness `[sig_client, 0]`.
//! The script cannot express "before the timeout" for the success branch,
//! so the ledger enforces `height <= timeout` on it as a spending policy.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::ledger::{Address, MockLedger};
use crate::sig::{KeyRegistry, PublicKeyId, SigningKey};
use crate::{PaymentError, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Op {
    Push(Vec<u8>),
    If,
    Else,
    EndIf,
    Sha256,
    EqualVerify,
    CheckSig,
    CheckLockTimeVerify,
    Drop,
}

impl Op {
    fn opcode(&self) -> u8 {
        match self {
            Op::Push(d) => d.len() as u8,
            Op::If => 0x63,
            Op::Else => 0x67,
            Op::EndIf => 0x68,
            Op::Sha256 => 0xa8,
            Op::EqualVerify => 0x88,
            Op::CheckSig => 0xac,
            Op::CheckLockTimeVerify => 0xb1,
            Op::Drop => 0x75,
        }
    }
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum ScriptError {
    #[error("stack underflow")]
    StackUnderflow,
    #[error("unbalanced conditional")]
    UnbalancedConditional,
    #[error("equalverify failed")]
    EqualVerify,
    #[error("locktime not reached")]
    LockTime,
    #[error("malformed number")]
    BadNumber,
    #[error("script finished false")]
    EvalFalse,
}

/// Minimal little-endian encoding of a non-negative integer.
pub fn encode_num(n: u64) -> Vec<u8> {
    let mut v = n.to_le_bytes().to_vec();
    while v.last() == Some(&0) {
        v.pop();
    }
    if v.last().is_some_and(|b| b & 0x80 != 0) {
        v.push(0);
    }
    v
}

fn decode_num(bytes: &[u8]) -> std::result::Result<u64, ScriptError> {
    if bytes.len() > 9 || bytes.last().is_some_and(|b| b & 0x80 != 0) {
        return Err(ScriptError::BadNumber);
    }
    let mut buf = [0u8; 8];
    let n = bytes.len().min(8);
    buf[..n].copy_from_slice(&bytes[..n]);
    if bytes.len() == 9 && bytes[8] != 0 {
        return Err(ScriptError::BadNumber);
    }
    Ok(u64::from_le_bytes(buf))
}

fn truthy(bytes: &[u8]) -> bool {
    bytes.iter().any(|b| *b != 0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HtlcTerms {
    #[serde(with = "crate::serde_util::array32")]
    pub hashlock: [u8; 32],
    pub server_pk: PublicKeyId,
    pub client_pk: PublicKeyId,
    pub timeout: u64,
}

impl HtlcTerms {
    pub fn script(&self) -> Vec<Op> {
        vec![
            Op::If,
            Op::Sha256,
            Op::Push(self.hashlock.to_vec()),
            Op::EqualVerify,
            Op::Push(self.server_pk.0.to_vec()),
            Op::CheckSig,
            Op::Else,
            Op::Push(encode_num(self.timeout)),
            Op::CheckLockTimeVerify,
            Op::Drop,
            Op::Push(self.client_pk.0.to_vec()),
            Op::CheckSig,
            Op::EndIf,
        ]
    }
}

/// Serialized script, one byte per opcode and direct pushes of up to 75
/// bytes.
pub fn script_bytes(script: &[Op]) -> Vec<u8> {
    let mut out = Vec::new();
    for op in script {
        out.push(op.opcode());
        if let Op::Push(d) = op {
            assert!(d.len() <= 75, "push too long");
            out.extend_from_slice(d);
        }
    }
    out
}

pub struct SpendContext<'a> {
    pub height: u64,
    pub sighash: &'a [u8],
    pub keys: &'a KeyRegistry,
}

/// Runs `script` on top of `witness` (last element on top of the stack).
pub fn execute(script: &[Op], witness: &[Vec<u8>], ctx: &SpendContext<'_>) -> std::result::Result<(), ScriptError> {
    let mut stack: Vec<Vec<u8>> = witness.to_vec();
    let mut exec: Vec<bool> = Vec::new();
    let pop = |s: &mut Vec<Vec<u8>>| s.pop().ok_or(ScriptError::StackUnderflow);
    for op in script {
        let active = exec.iter().all(|b| *b);
        match op {
            Op::If => {
                let cond = if active { truthy(&pop(&mut stack)?) } else { false };
                exec.push(cond);
            }
            Op::Else => {
                let top = exec.last_mut().ok_or(ScriptError::UnbalancedConditional)?;
                *top = !*top;
            }
            Op::EndIf => {
                exec.pop().ok_or(ScriptError::UnbalancedConditional)?;
            }
            _ if !active => {}
            Op::Push(d) => stack.push(d.clone()),
            Op::Sha256 => {
                let x = pop(&mut stack)?;
                stack.push(Sha256::digest(&x).to_vec());
            }
            Op::EqualVerify => {
                let (a, b) = (pop(&mut stack)?, pop(&mut stack)?);
                if a != b {
                    return Err(ScriptError::EqualVerify);
                }
            }
            Op::CheckSig => {
                let pk = pop(&mut stack)?;
                let sig = pop(&mut stack)?;
                let ok = <[u8; 32]>::try_from(pk.as_slice())
                    .map(|pk| ctx.keys.verify(&PublicKeyId(pk), ctx.sighash, &sig))
                    .unwrap_or(false);
                stack.push(if ok { vec![1] } else { Vec::new() });
            }
            Op::CheckLockTimeVerify => {
                let lock = decode_num(stack.last().ok_or(ScriptError::StackUnderflow)?)?;
                if ctx.height <= lock {
                    return Err(ScriptError::LockTime);
                }
            }
            Op::Drop => {
                pop(&mut stack)?;
            }
        }
    }
    if !exec.is_empty() {
        return Err(ScriptError::UnbalancedConditional);
    }
    match stack.last() {
        Some(top) if truthy(top) => Ok(()),
        _ => Err(ScriptError::EvalFalse),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct HtlcId(pub u64);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    Success,
    Refund,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HtlcOutput {
    pub terms: HtlcTerms,
    pub server: Address,
    pub client: Address,
    pub amount: u64,
    pub spent: Option<Branch>,
}

fn object(id: HtlcId) -> String {
    format!("htlc/{}", id.0)
}

/// Message both branches sign.
pub fn sighash(id: HtlcId, branch: Branch) -> Vec<u8> {
    let mut m = b"fde/htlc-spend".to_vec();
    m.extend_from_slice(&id.0.to_le_bytes());
    m.push(branch as u8);
    m
}

pub fn success_witness(id: HtlcId, server_key: &SigningKey, preimage: &[u8]) -> Vec<Vec<u8>> {
    vec![server_key.sign(&sighash(id, Branch::Success)), preimage.to_vec(), vec![1]]
}

pub fn refund_witness(id: HtlcId, client_key: &SigningKey) -> Vec<Vec<u8>> {
    vec![client_key.sign(&sighash(id, Branch::Refund)), Vec::new()]
}

fn encode_witness(w: &[Vec<u8>]) -> Vec<u8> {
    let mut out = Vec::new();
    for item in w {
        out.extend_from_slice(&(item.len() as u32).to_le_bytes());
        out.extend_from_slice(item);
    }
    out
}

fn decode_witness(mut bytes: &[u8]) -> Option<Vec<Vec<u8>>> {
    let mut items = Vec::new();
    while !bytes.is_empty() {
        let len = u32::from_le_bytes(bytes.get(..4)?.try_into().ok()?) as usize;
        items.push(bytes.get(4..4 + len)?.to_vec());
        bytes = &bytes[4 + len..];
    }
    Some(items)
}

impl MockLedger {
    pub fn register_key(&mut self, key: &SigningKey) -> PublicKeyId {
        self.keys.register(key)
    }

    /// Client funds an output locked by `terms`.
    pub fn htlc_fund(&mut self, client: &Address, server: &Address, amount: u64, terms: HtlcTerms) -> Result<HtlcId> {
        if amount == 0 {
            return Err(PaymentError::ZeroAmount);
        }
        self.debit(client, amount)?;
        let id = HtlcId(self.htlcs.len() as u64);
        self.htlcs.push(HtlcOutput {
            terms,
            server: server.clone(),
            client: client.clone(),
            amount,
            spent: None,
        });
        self.record(object(id), "fund", script_bytes(&terms.script()));
        Ok(id)
    }

    /// All outputs, indexed by [`HtlcId`].
    pub fn htlcs(&self) -> &[HtlcOutput] {
        &self.htlcs
    }

    pub fn htlc(&self, id: HtlcId) -> Result<&HtlcOutput> {
        self.htlcs.get(id.0 as usize).ok_or_else(|| PaymentError::Unknown(object(id)))
    }

    /// Spends the output with `witness`; the branch is selected by the top
    /// witness item as in the script. The witness is published.
    pub fn htlc_spend(&mut self, id: HtlcId, witness: Vec<Vec<u8>>) -> Result<Branch> {
        let height = self.height();
        let out = self.htlc(id)?;
        if out.spent.is_some() {
            return Err(PaymentError::InvalidState("spend"));
        }
        let branch = match witness.last() {
            Some(top) if truthy(top) => Branch::Success,
            _ => Branch::Refund,
        };
        if branch == Branch::Success && height > out.terms.timeout {
            return Err(PaymentError::Expired);
        }
        let msg = sighash(id, branch);
        execute(&out.terms.script(), &witness, &SpendContext { height, sighash: &msg, keys: &self.keys })?;
        let (amount, payee) = match branch {
            Branch::Success => (out.amount, out.server.clone()),
            Branch::Refund => (out.amount, out.client.clone()),
        };
        self.htlcs[id.0 as usize].spent = Some(branch);
        self.credit(&payee, amount);
        let action = match branch {
            Branch::Success => "spend-success",
            Branch::Refund => "spend-refund",
        };
        self.record(object(id), action, encode_witness(&witness));
        Ok(branch)
    }

    /// Preimage published by a success spend, read from the public log.
    pub fn htlc_revealed_preimage(&self, id: HtlcId) -> Option<Vec<u8>> {
        let obj = object(id);
        let e = self.events().iter().find(|e| e.object == obj && e.action == "spend-success")?;
        decode_witness(&e.payload)?.get(1).cloned()
    }
}
