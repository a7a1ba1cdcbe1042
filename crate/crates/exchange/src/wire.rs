//! Length-prefixed protocol messages.
//!
//! Frame: `u32` little-endian length of what follows, version byte, type
//! byte, body. Bodies are fixed-layout little-endian records.

use std::io::{Read, Write};

use fde_core::veck::MaskHash;

use crate::config::{RailKind, Scheme};
use crate::{ExchangeError, Result};

pub const PROTOCOL_VERSION: u8 = 1;
/// Largest accepted frame, to bound allocation on hostile input.
pub const MAX_FRAME: usize = 1 << 30;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum MessageType {
    Offer = 1,
    Bundle = 2,
    PayEvidence = 3,
    KeyReveal = 4,
    Abort = 5,
}

impl MessageType {
    pub const ALL: [MessageType; 5] = [
        MessageType::Offer,
        MessageType::Bundle,
        MessageType::PayEvidence,
        MessageType::KeyReveal,
        MessageType::Abort,
    ];
}

impl TryFrom<u8> for MessageType {
    type Error = ExchangeError;

    fn try_from(v: u8) -> Result<Self> {
        MessageType::ALL
            .into_iter()
            .find(|t| *t as u8 == v)
            .ok_or_else(|| ExchangeError::Wire(format!("unknown message type {v}")))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WireMessage {
    pub version: u8,
    pub kind: MessageType,
    pub body: Vec<u8>,
}

impl WireMessage {
    pub fn new(kind: MessageType, body: Vec<u8>) -> Self {
        Self { version: PROTOCOL_VERSION, kind, body }
    }

    pub fn encoded_len(&self) -> usize {
        4 + 2 + self.body.len()
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.encoded_len());
        out.extend_from_slice(&((self.body.len() + 2) as u32).to_le_bytes());
        out.push(self.version);
        out.push(self.kind as u8);
        out.extend_from_slice(&self.body);
        out
    }

    /// Decodes one complete frame.
    pub fn decode(frame: &[u8]) -> Result<Self> {
        let len = frame
            .get(..4)
            .map(|b| u32::from_le_bytes(b.try_into().unwrap()) as usize)
            .ok_or_else(|| ExchangeError::Wire("truncated frame".into()))?;
        if len != frame.len() - 4 {
            return Err(ExchangeError::Wire("frame length mismatch".into()));
        }
        Self::from_payload(&frame[4..])
    }

    fn from_payload(p: &[u8]) -> Result<Self> {
        if p.len() < 2 {
            return Err(ExchangeError::Wire("frame too short".into()));
        }
        if p[0] != PROTOCOL_VERSION {
            return Err(ExchangeError::Wire(format!("unsupported protocol version {}", p[0])));
        }
        Ok(Self { version: p[0], kind: MessageType::try_from(p[1])?, body: p[2..].to_vec() })
    }

    pub fn write_to(&self, w: &mut impl Write) -> Result<()> {
        w.write_all(&self.encode())?;
        w.flush()?;
        Ok(())
    }

    pub fn read_from(r: &mut impl Read) -> Result<Self> {
        let mut len = [0u8; 4];
        r.read_exact(&mut len)?;
        let len = u32::from_le_bytes(len) as usize;
        if !(2..=MAX_FRAME).contains(&len) {
            return Err(ExchangeError::Wire(format!("frame length {len} out of range")));
        }
        let mut payload = vec![0u8; len];
        r.read_exact(&mut payload)?;
        Self::from_payload(&payload)
    }
}

/// Cursor over a message body.
struct Reader<'a>(&'a [u8]);

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.0.len() < n {
            return Err(ExchangeError::Wire("truncated body".into()));
        }
        let (head, rest) = self.0.split_at(n);
        self.0 = rest;
        Ok(head)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N]> {
        Ok(self.take(N)?.try_into().unwrap())
    }

    fn bytes(&mut self) -> Result<Vec<u8>> {
        let n = self.u32()? as usize;
        Ok(self.take(n)?.to_vec())
    }

    fn finish(self) -> Result<()> {
        if self.0.is_empty() {
            Ok(())
        } else {
            Err(ExchangeError::Wire("trailing bytes in body".into()))
        }
    }
}

fn put_bytes(out: &mut Vec<u8>, b: &[u8]) {
    out.extend_from_slice(&(b.len() as u32).to_le_bytes());
    out.extend_from_slice(b);
}

/// Server-side terms appended to an offer echo.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OfferTerms {
    pub crs_digest: [u8; 32],
    pub params_seed: Vec<u8>,
    pub commitment: [u8; 48],
    /// Degree bound of the committed file.
    pub ell: u64,
    /// Code length of the encrypted word, fixed by `ell` or `|S|`.
    pub m: u64,
    pub backend: u8,
    /// Ledger address the payment goes to.
    pub payee: String,
    /// Encoding of the key fed to the hashlock; 0 is 32-byte little-endian.
    pub key_encoding: u8,
}

/// Session proposal. The client sends it without terms; the server echoes
/// it with terms filled in.
#[derive(Clone, Debug, PartialEq)]
pub struct Offer {
    pub scheme: Scheme,
    pub rail: RailKind,
    pub beta: f64,
    pub lambda: u32,
    pub chunk_bits: u32,
    pub mask: MaskHash,
    pub price: u64,
    pub timeout_blocks: u64,
    pub subset: Vec<u64>,
    /// Ledger address of the buyer.
    pub buyer: String,
    pub terms: Option<OfferTerms>,
}

impl Offer {
    /// Same proposal, ignoring the terms.
    pub fn same_proposal(&self, other: &Offer) -> bool {
        Offer { terms: None, ..self.clone() } == Offer { terms: None, ..other.clone() }
    }

    pub fn to_message(&self) -> WireMessage {
        let mut b = vec![self.scheme as u8, self.rail as u8];
        b.extend_from_slice(&self.beta.to_bits().to_le_bytes());
        b.extend_from_slice(&self.lambda.to_le_bytes());
        b.extend_from_slice(&self.chunk_bits.to_le_bytes());
        b.push(self.mask as u8);
        b.extend_from_slice(&self.price.to_le_bytes());
        b.extend_from_slice(&self.timeout_blocks.to_le_bytes());
        b.extend_from_slice(&(self.subset.len() as u32).to_le_bytes());
        for i in &self.subset {
            b.extend_from_slice(&i.to_le_bytes());
        }
        put_bytes(&mut b, self.buyer.as_bytes());
        match &self.terms {
            None => b.push(0),
            Some(t) => {
                b.push(1);
                b.extend_from_slice(&t.crs_digest);
                put_bytes(&mut b, &t.params_seed);
                b.extend_from_slice(&t.commitment);
                b.extend_from_slice(&t.ell.to_le_bytes());
                b.extend_from_slice(&t.m.to_le_bytes());
                b.push(t.backend);
                put_bytes(&mut b, t.payee.as_bytes());
                b.push(t.key_encoding);
            }
        }
        WireMessage::new(MessageType::Offer, b)
    }

    pub fn from_message(msg: &WireMessage) -> Result<Self> {
        expect(msg, MessageType::Offer)?;
        let mut r = Reader(&msg.body);
        let scheme = Scheme::try_from(r.u8()?)?;
        let rail = RailKind::try_from(r.u8()?)?;
        let beta = f64::from_bits(r.u64()?);
        let lambda = r.u32()?;
        let chunk_bits = r.u32()?;
        let mask = MaskHash::try_from(r.u8()?).map_err(|e| ExchangeError::Wire(e.to_string()))?;
        let price = r.u64()?;
        let timeout_blocks = r.u64()?;
        let n = r.u32()? as usize;
        if n > r.0.len() / 8 {
            return Err(ExchangeError::Wire("subset longer than body".into()));
        }
        let subset = (0..n).map(|_| r.u64()).collect::<Result<_>>()?;
        let buyer = String::from_utf8(r.bytes()?).map_err(|_| ExchangeError::Wire("buyer is not UTF-8".into()))?;
        let terms = match r.u8()? {
            0 => None,
            1 => Some(OfferTerms {
                crs_digest: r.array()?,
                params_seed: r.bytes()?,
                commitment: r.array()?,
                ell: r.u64()?,
                m: r.u64()?,
                backend: r.u8()?,
                payee: String::from_utf8(r.bytes()?).map_err(|_| ExchangeError::Wire("payee is not UTF-8".into()))?,
                key_encoding: r.u8()?,
            }),
            f => return Err(ExchangeError::Wire(format!("bad terms flag {f}"))),
        };
        r.finish()?;
        Ok(Self { scheme, rail, beta, lambda, chunk_bits, mask, price, timeout_blocks, subset, buyer, terms })
    }
}

/// Rail-specific data the client needs before paying.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RailData {
    /// Contract deployed with the bundle's verification key.
    Contract { contract: u64 },
    /// Hashlock, the server's script key and the proof linking the
    /// hashlock to the verification key.
    Htlc { hashlock: [u8; 32], server_pk: [u8; 32], bridge_proof: Vec<u8> },
    Lightning { hashlock: [u8; 32], bridge_proof: Vec<u8> },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BundleMessage {
    pub scheme: Scheme,
    pub bundle: Vec<u8>,
    pub rail: RailData,
}

impl BundleMessage {
    pub fn to_message(&self) -> WireMessage {
        let mut b = vec![self.scheme as u8];
        put_bytes(&mut b, &self.bundle);
        match &self.rail {
            RailData::Contract { contract } => {
                b.push(RailKind::Contract as u8);
                b.extend_from_slice(&contract.to_le_bytes());
            }
            RailData::Htlc { hashlock, server_pk, bridge_proof } => {
                b.push(RailKind::Htlc as u8);
                b.extend_from_slice(hashlock);
                b.extend_from_slice(server_pk);
                put_bytes(&mut b, bridge_proof);
            }
            RailData::Lightning { hashlock, bridge_proof } => {
                b.push(RailKind::Lightning as u8);
                b.extend_from_slice(hashlock);
                put_bytes(&mut b, bridge_proof);
            }
        }
        WireMessage::new(MessageType::Bundle, b)
    }

    pub fn from_message(msg: &WireMessage) -> Result<Self> {
        expect(msg, MessageType::Bundle)?;
        let mut r = Reader(&msg.body);
        let scheme = Scheme::try_from(r.u8()?)?;
        let bundle = r.bytes()?;
        let rail = match RailKind::try_from(r.u8()?)? {
            RailKind::Contract => RailData::Contract { contract: r.u64()? },
            RailKind::Htlc => RailData::Htlc { hashlock: r.array()?, server_pk: r.array()?, bridge_proof: r.bytes()? },
            RailKind::Lightning => RailData::Lightning { hashlock: r.array()?, bridge_proof: r.bytes()? },
        };
        r.finish()?;
        Ok(Self { scheme, bundle, rail })
    }
}

/// Where the client's payment sits on the ledger.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PayEvidence {
    Contract { contract: u64 },
    Htlc { htlc: u64 },
    Lightning { channel: u64, htlc: u64 },
}

impl PayEvidence {
    pub fn to_message(&self) -> WireMessage {
        let mut b = Vec::new();
        match self {
            PayEvidence::Contract { contract } => {
                b.push(RailKind::Contract as u8);
                b.extend_from_slice(&contract.to_le_bytes());
            }
            PayEvidence::Htlc { htlc } => {
                b.push(RailKind::Htlc as u8);
                b.extend_from_slice(&htlc.to_le_bytes());
            }
            PayEvidence::Lightning { channel, htlc } => {
                b.push(RailKind::Lightning as u8);
                b.extend_from_slice(&channel.to_le_bytes());
                b.extend_from_slice(&htlc.to_le_bytes());
            }
        }
        WireMessage::new(MessageType::PayEvidence, b)
    }

    pub fn from_message(msg: &WireMessage) -> Result<Self> {
        expect(msg, MessageType::PayEvidence)?;
        let mut r = Reader(&msg.body);
        let ev = match RailKind::try_from(r.u8()?)? {
            RailKind::Contract => PayEvidence::Contract { contract: r.u64()? },
            RailKind::Htlc => PayEvidence::Htlc { htlc: r.u64()? },
            RailKind::Lightning => PayEvidence::Lightning { channel: r.u64()?, htlc: r.u64()? },
        };
        r.finish()?;
        Ok(ev)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct KeyReveal {
    pub key: [u8; 32],
}

impl KeyReveal {
    pub fn to_message(&self) -> WireMessage {
        WireMessage::new(MessageType::KeyReveal, self.key.to_vec())
    }

    pub fn from_message(msg: &WireMessage) -> Result<Self> {
        expect(msg, MessageType::KeyReveal)?;
        let mut r = Reader(&msg.body);
        let key = r.array()?;
        r.finish()?;
        Ok(Self { key })
    }
}

/// Why a session ended without a delivered file.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum ReasonCode {
    VerCtFail = 1,
    VerKeyFail = 2,
    RsFail = 3,
    Timeout = 4,
    Negotiation = 5,
}

impl ReasonCode {
    pub const ALL: [ReasonCode; 5] = [
        ReasonCode::VerCtFail,
        ReasonCode::VerKeyFail,
        ReasonCode::RsFail,
        ReasonCode::Timeout,
        ReasonCode::Negotiation,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ReasonCode::VerCtFail => "VER_CT_FAIL",
            ReasonCode::VerKeyFail => "VER_KEY_FAIL",
            ReasonCode::RsFail => "RS_FAIL",
            ReasonCode::Timeout => "TIMEOUT",
            ReasonCode::Negotiation => "NEGOTIATION",
        }
    }
}

impl std::fmt::Display for ReasonCode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Abort {
    pub reason: ReasonCode,
    pub detail: String,
}

impl Abort {
    pub fn to_message(&self) -> WireMessage {
        let mut b = vec![self.reason as u8];
        put_bytes(&mut b, self.detail.as_bytes());
        WireMessage::new(MessageType::Abort, b)
    }

    pub fn from_message(msg: &WireMessage) -> Result<Self> {
        expect(msg, MessageType::Abort)?;
        let mut r = Reader(&msg.body);
        let code = r.u8()?;
        let reason = ReasonCode::ALL
            .into_iter()
            .find(|c| *c as u8 == code)
            .ok_or_else(|| ExchangeError::Wire(format!("unknown reason code {code}")))?;
        let detail = String::from_utf8(r.bytes()?).map_err(|_| ExchangeError::Wire("detail is not UTF-8".into()))?;
        r.finish()?;
        Ok(Self { reason, detail })
    }
}

fn expect(msg: &WireMessage, kind: MessageType) -> Result<()> {
    if msg.kind != kind {
        return Err(ExchangeError::Wire(format!("expected {kind:?}, got {:?}", msg.kind)));
    }
    Ok(())
}
