//! Client state machine: negotiate, verify before paying, pay, recover the
//! key from the ledger, decrypt and decode.

use blstrs::G1Affine;
use fde_core::rscode::Decoding;
use fde_core::veck::plus::VeckPlusBundle;
use fde_core::veck::star::StarBundle;
use fde_core::veck::{
    plus_dec, plus_ver_full, plus_ver_subset, star_dec, star_ver, ver_key, BackendId, DecodePath, TransparentBackend,
    VerificationKey,
};
use fde_payments::bridge::{bridge_verify, BridgeStatement};
use fde_payments::contract::{ContractId, ContractStatus};
use fde_payments::htlc::{refund_witness, HtlcId, HtlcTerms};
use fde_payments::sig::{PublicKeyId, SigningKey};
use fde_payments::{parse_secret, Address};
use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::config::{RailKind, Scheme, SessionConfig};
use crate::encoding::{decode_blocks, decode_file};
use crate::session::{code_length, plus_config, star_config, timed, Context, Timings};
use crate::transport::Transport;
use crate::wire::{Abort, BundleMessage, MessageType, Offer, OfferTerms, PayEvidence, RailData, ReasonCode, WireMessage};
use crate::world::{LedgerAccess, World};
use crate::{ExchangeError, Result};

pub struct ClientIdentity {
    pub address: Address,
    pub signing_key: SigningKey,
    /// Open channel to the server, for the lightning rail.
    pub channel: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ClientOutcome {
    Delivered(Vec<u8>),
    /// Ended before paying.
    Aborted(ReasonCode),
    /// Paid, no key appeared, payment returned after the timeout.
    Refunded(ReasonCode),
    /// Paid and got the key, but the data did not decode.
    PaidUndelivered(ReasonCode),
}

/// Ordered log of what the client did, for auditing payment order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ClientStep {
    OfferAccepted,
    BundleVerified { ciphertext: bool, key_link: bool },
    Paid,
    KeyRecovered,
    Decoded,
    Refunded,
    Aborted(ReasonCode),
}

#[derive(Clone, Debug)]
pub struct ClientReport {
    pub outcome: ClientOutcome,
    pub steps: Vec<ClientStep>,
    pub timings: Timings,
    pub bytes_sent: u64,
    pub bytes_received: u64,
    pub decode_path: Option<DecodePath>,
    /// Enough state to recover the file later from the ledger.
    pub record: Option<SessionRecord>,
}

impl ClientReport {
    /// True iff every payment step comes after a fully accepted bundle.
    pub fn paid_only_after_verification(&self) -> bool {
        let mut verified = false;
        for s in &self.steps {
            match s {
                ClientStep::BundleVerified { ciphertext, key_link } => verified = *ciphertext && *key_link,
                ClientStep::Paid if !verified => return false,
                _ => {}
            }
        }
        true
    }

    pub fn paid(&self) -> bool {
        self.steps.contains(&ClientStep::Paid)
    }
}

/// Persisted session for recovering the file after the fact.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SessionRecord {
    pub scheme: String,
    pub rail: String,
    pub ell: u64,
    pub subset: Vec<u64>,
    pub lambda: usize,
    pub beta: f64,
    pub chunk_bits: u32,
    pub params_seed_hex: String,
    pub bundle_hex: String,
    pub contract: Option<u64>,
    pub htlc: Option<u64>,
    pub channel: Option<(u64, u64)>,
}

impl SessionRecord {
    pub fn payment(&self) -> Option<PayEvidence> {
        match (self.contract, self.htlc, self.channel) {
            (Some(contract), _, _) => Some(PayEvidence::Contract { contract }),
            (_, Some(htlc), _) => Some(PayEvidence::Htlc { htlc }),
            (_, _, Some((channel, htlc))) => Some(PayEvidence::Lightning { channel, htlc }),
            _ => None,
        }
    }
}

enum Verified {
    Plus(Box<VeckPlusBundle>),
    Star(Box<StarBundle>),
}

impl Verified {
    fn vk(&self) -> &VerificationKey {
        match self {
            Verified::Plus(b) => &b.vk,
            Verified::Star(b) => &b.vk,
        }
    }
}

struct Run<'a, T> {
    transport: &'a mut T,
    steps: Vec<ClientStep>,
    timings: Timings,
    received: u64,
}

impl<T: Transport> Run<'_, T> {
    fn recv(&mut self) -> Result<WireMessage> {
        let m = self.transport.recv()?;
        self.received += m.encoded_len() as u64;
        Ok(m)
    }

    fn abort(&mut self, reason: ReasonCode, detail: impl Into<String>) -> ClientOutcome {
        let _ = self.transport.send(&Abort { reason, detail: detail.into() }.to_message());
        self.steps.push(ClientStep::Aborted(reason));
        ClientOutcome::Aborted(reason)
    }

    fn report(self, outcome: ClientOutcome, decode_path: Option<DecodePath>, record: Option<SessionRecord>) -> ClientReport {
        ClientReport {
            outcome,
            steps: self.steps,
            timings: self.timings,
            bytes_sent: self.transport.bytes_sent(),
            bytes_received: self.received,
            decode_path,
            record,
        }
    }
}

fn proposal(cfg: &SessionConfig, me: &ClientIdentity) -> Offer {
    Offer {
        scheme: cfg.scheme,
        rail: cfg.rail,
        beta: cfg.beta,
        lambda: cfg.lambda as u32,
        chunk_bits: cfg.chunk_bits,
        mask: cfg.mask,
        price: cfg.price,
        timeout_blocks: cfg.timeout_blocks,
        subset: cfg.subset.clone().unwrap_or_default(),
        buyer: me.address.0.clone(),
        terms: None,
    }
}

fn check_terms(
    ctx: &Context,
    request: &Offer,
    echo: &Offer,
    expected_commitment: Option<&G1Affine>,
) -> Result<(OfferTerms, G1Affine), String> {
    if !echo.same_proposal(request) {
        return Err("server changed the proposal".into());
    }
    let terms = echo.terms.clone().ok_or("offer echo carries no terms")?;
    if terms.crs_digest != ctx.crs.digest() {
        return Err("reference string differs".into());
    }
    if terms.params_seed != ctx.params.seed() || request.chunk_bits != ctx.params.chunk_bits() {
        return Err("encryption parameters differ".into());
    }
    let c: G1Affine = Option::from(G1Affine::from_compressed(&terms.commitment)).ok_or("invalid commitment")?;
    if expected_commitment.is_some_and(|e| *e != c) {
        return Err("commitment is not the advertised one".into());
    }
    if terms.ell as usize >= ctx.crs.max_degree() || request.subset.iter().any(|i| *i > terms.ell) {
        return Err("file size out of range".into());
    }
    if code_length(terms.ell, &request.subset, request.beta).ok() != Some(terms.m) {
        return Err("code length does not follow from the rate".into());
    }
    if terms.backend != BackendId::Transparent as u8 || terms.key_encoding != 0 {
        return Err("unsupported proof backend or key encoding".into());
    }
    Ok((terms, c))
}

fn verify_bundle(
    ctx: &Context,
    cfg: &SessionConfig,
    terms: &OfferTerms,
    c_phi: &G1Affine,
    msg: &BundleMessage,
    rng: &mut impl RngCore,
    timings: &mut Timings,
) -> std::result::Result<Verified, String> {
    if msg.scheme != cfg.scheme {
        return Err("bundle for another scheme".into());
    }
    let ell = terms.ell as usize;
    match cfg.scheme {
        Scheme::VeckPlus => {
            let b = VeckPlusBundle::from_bytes(&msg.bundle).map_err(|e| e.to_string())?;
            let pc = plus_config(cfg);
            let verdict = timed(&mut timings.verify_ms, || match &cfg.subset {
                None => plus_ver_full(&ctx.crs, &ctx.params, &pc, ell, c_phi, &b, rng),
                Some(s) => plus_ver_subset(&ctx.crs, &ctx.params, &pc, c_phi, s, &b, None, rng),
            });
            match verdict.is_accept() {
                true => Ok(Verified::Plus(Box::new(b))),
                false => Err(format!("{verdict:?}")),
            }
        }
        Scheme::VeckStar => {
            let b = StarBundle::from_bytes(&msg.bundle).map_err(|e| e.to_string())?;
            let backend = TransparentBackend::new(cfg.mode);
            let verdict = timed(&mut timings.verify_ms, || {
                star_ver(&ctx.crs, &ctx.params, &star_config(cfg), ell, c_phi, &b, &backend, rng)
            });
            match verdict.is_accept() {
                true => Ok(Verified::Star(Box::new(b))),
                false => Err(format!("{verdict:?}")),
            }
        }
    }
}

/// Checks that the rail releases exactly the key behind `vk`.
fn verify_rail<L: LedgerAccess>(
    ctx: &Context,
    cfg: &SessionConfig,
    me: &ClientIdentity,
    vk: &VerificationKey,
    rail: &RailData,
    ledger: &L,
    timings: &mut Timings,
) -> std::result::Result<(), String> {
    let h = ctx.params.h();
    let bridge = |t: &[u8; 32], proof: &[u8], timings: &mut Timings| {
        let st = BridgeStatement { h, vk: vk.vk, hashlock: *t };
        let backend = TransparentBackend::new(cfg.mode);
        match timed(&mut timings.verify_ms, || bridge_verify(&backend, &st, proof)) {
            Ok(true) => Ok(()),
            Ok(false) => Err("hashlock is not bound to the verification key".to_string()),
            Err(e) => Err(e.to_string()),
        }
    };
    match (cfg.rail, rail) {
        (RailKind::Contract, RailData::Contract { contract }) => ledger
            .transact(|w| {
                let c = w.ledger.contract(ContractId(*contract)).map_err(|e| e.to_string())?;
                let ok = c.status == ContractStatus::Open
                    && c.client == me.address
                    && c.h == h
                    && c.vk == vk.vk
                    && c.price == cfg.price
                    && c.timeout > w.ledger.height();
                ok.then_some(()).ok_or_else(|| "contract terms do not match the bundle".to_string())
            })
            .map_err(|e| e.to_string())?,
        (RailKind::Htlc, RailData::Htlc { hashlock, bridge_proof, .. })
        | (RailKind::Lightning, RailData::Lightning { hashlock, bridge_proof }) => bridge(hashlock, bridge_proof, timings),
        _ => Err("rail data for another rail".into()),
    }
}

fn pay(w: &mut World, cfg: &SessionConfig, me: &ClientIdentity, payee: &Address, rail: &RailData) -> Result<PayEvidence> {
    let height = w.ledger.height();
    Ok(match rail {
        RailData::Contract { contract } => {
            w.ledger.contract_lock(ContractId(*contract), &me.address)?;
            PayEvidence::Contract { contract: *contract }
        }
        RailData::Htlc { hashlock, server_pk, .. } => {
            let client_pk = w.ledger.register_key(&me.signing_key);
            let terms = HtlcTerms {
                hashlock: *hashlock,
                server_pk: PublicKeyId(*server_pk),
                client_pk,
                timeout: height + cfg.timeout_blocks,
            };
            let id = w.ledger.htlc_fund(&me.address, payee, cfg.price, terms)?;
            PayEvidence::Htlc { htlc: id.0 }
        }
        RailData::Lightning { hashlock, .. } => {
            let id = me.channel.ok_or_else(|| ExchangeError::Config("no channel to the server".into()))?;
            let ch = w.channel_mut(id).ok_or_else(|| ExchangeError::Ledger(format!("unknown channel {id}")))?;
            if ch.server() != payee || ch.client() != &me.address {
                return Err(ExchangeError::Config("channel is not between the session parties".into()));
            }
            let idx = ch.add_htlc(cfg.price, *hashlock, height + cfg.timeout_blocks)?;
            PayEvidence::Lightning { channel: id, htlc: idx as u64 }
        }
    })
}

/// Key published by the rail for this payment, if any.
pub fn revealed_key(w: &World, payment: &PayEvidence) -> Option<Vec<u8>> {
    match payment {
        PayEvidence::Contract { contract } => {
            let obj = format!("contract/{contract}");
            w.ledger.events().iter().find(|e| e.object == obj && e.action == "claim").map(|e| e.payload.clone())
        }
        PayEvidence::Htlc { htlc } => w.ledger.htlc_revealed_preimage(HtlcId(*htlc)),
        PayEvidence::Lightning { channel, htlc } => w
            .channels
            .iter()
            .find(|c| c.id() == *channel)
            .and_then(|c| c.htlc(*htlc as usize))
            .and_then(|h| h.preimage.clone()),
    }
}

fn deadline(w: &World, payment: &PayEvidence) -> Option<u64> {
    match payment {
        PayEvidence::Contract { contract } => w.ledger.contract(ContractId(*contract)).ok().map(|c| c.timeout),
        PayEvidence::Htlc { htlc } => w.ledger.htlc(HtlcId(*htlc)).ok().map(|o| o.terms.timeout),
        PayEvidence::Lightning { channel, htlc } => w
            .channels
            .iter()
            .find(|c| c.id() == *channel)
            .and_then(|c| c.htlc(*htlc as usize))
            .map(|h| h.expiry),
    }
}

fn refund(w: &mut World, me: &ClientIdentity, payment: &PayEvidence) -> Result<()> {
    let height = w.ledger.height();
    match payment {
        PayEvidence::Contract { contract } => w.ledger.contract_refund(ContractId(*contract), &me.address)?,
        PayEvidence::Htlc { htlc } => {
            let id = HtlcId(*htlc);
            w.ledger.htlc_spend(id, refund_witness(id, &me.signing_key))?;
        }
        PayEvidence::Lightning { channel, htlc } => {
            let ch = w.channel_mut(*channel).ok_or_else(|| ExchangeError::Ledger(format!("unknown channel {channel}")))?;
            ch.expire(*htlc as usize, height)?;
        }
    }
    Ok(())
}

/// Decrypts with a key that passed the key check and decodes the bought
/// data.
fn decrypt(
    ctx: &Context,
    verified: &Verified,
    sk: &blstrs::Scalar,
    ell: u64,
    subset: &[u64],
    rng: &mut impl RngCore,
) -> std::result::Result<(Vec<u8>, DecodePath), ReasonCode> {
    let targets: Vec<u64> = if subset.is_empty() { (0..=ell).collect() } else { subset.to_vec() };
    let recovery = match verified {
        Verified::Plus(b) => plus_dec(&ctx.params, ctx.table(), sk, &b.header, &b.ct, &targets, rng),
        Verified::Star(b) => star_dec(&b.header, sk, &b.masked, &targets, rng),
    }
    .map_err(|_| ReasonCode::RsFail)?;
    let Decoding::Recovered(values) = recovery.decoding else { return Err(ReasonCode::RsFail) };
    let bytes = if subset.is_empty() {
        decode_file(&values)
    } else {
        decode_blocks(subset, &values, ell as usize + 1)
    }
    .map_err(|_| ReasonCode::RsFail)?;
    Ok((bytes, recovery.path))
}

/// Runs one client session to completion.
#[allow(clippy::too_many_arguments)]
pub fn run_client<T: Transport, L: LedgerAccess>(
    ctx: &Context,
    cfg: &SessionConfig,
    me: &ClientIdentity,
    expected_commitment: Option<&G1Affine>,
    ledger: &L,
    transport: &mut T,
    rng: &mut impl RngCore,
) -> Result<ClientReport> {
    cfg.validate()?;
    let mut run = Run { transport, steps: Vec::new(), timings: Timings::default(), received: 0 };

    let request = proposal(cfg, me);
    if run.transport.send(&request.to_message()).is_err() {
        return Ok(run.report(ClientOutcome::Aborted(ReasonCode::Timeout), None, None));
    }
    let echo = match run.recv() {
        Ok(m) if m.kind == MessageType::Abort => {
            let reason = Abort::from_message(&m).map_or(ReasonCode::Negotiation, |a| a.reason);
            run.steps.push(ClientStep::Aborted(reason));
            return Ok(run.report(ClientOutcome::Aborted(reason), None, None));
        }
        Ok(m) => Offer::from_message(&m),
        Err(ExchangeError::Timeout | ExchangeError::Closed) => {
            let o = run.abort(ReasonCode::Timeout, "no offer");
            return Ok(run.report(o, None, None));
        }
        Err(e) => Err(e),
    };
    let (terms, c_phi) = match echo.map_err(|e| e.to_string()).and_then(|e| check_terms(ctx, &request, &e, expected_commitment)) {
        Ok(t) => t,
        Err(detail) => {
            let o = run.abort(ReasonCode::Negotiation, detail);
            return Ok(run.report(o, None, None));
        }
    };
    run.steps.push(ClientStep::OfferAccepted);

    let bundle_msg = match run.recv() {
        Ok(m) if m.kind == MessageType::Abort => {
            let reason = Abort::from_message(&m).map_or(ReasonCode::Timeout, |a| a.reason);
            run.steps.push(ClientStep::Aborted(reason));
            return Ok(run.report(ClientOutcome::Aborted(reason), None, None));
        }
        Ok(m) => BundleMessage::from_message(&m).map_err(|e| e.to_string()),
        Err(ExchangeError::Timeout | ExchangeError::Closed) => {
            let o = run.abort(ReasonCode::Timeout, "no bundle");
            return Ok(run.report(o, None, None));
        }
        Err(ExchangeError::Wire(e)) => Err(e),
        Err(e) => return Err(e),
    };
    let verified = bundle_msg
        .as_ref()
        .map_err(Clone::clone)
        .and_then(|b| verify_bundle(ctx, cfg, &terms, &c_phi, b, rng, &mut run.timings));
    let (bundle_msg, verified) = match (bundle_msg, verified) {
        (Ok(b), Ok(v)) => (b, v),
        (_, Err(detail)) => {
            run.steps.push(ClientStep::BundleVerified { ciphertext: false, key_link: false });
            let o = run.abort(ReasonCode::VerCtFail, detail);
            return Ok(run.report(o, None, None));
        }
        (Err(_), Ok(_)) => unreachable!("verification needs a parsed bundle"),
    };
    if let Err(detail) = verify_rail(ctx, cfg, me, verified.vk(), &bundle_msg.rail, ledger, &mut run.timings) {
        run.steps.push(ClientStep::BundleVerified { ciphertext: true, key_link: false });
        let o = run.abort(ReasonCode::VerKeyFail, detail);
        return Ok(run.report(o, None, None));
    }
    run.steps.push(ClientStep::BundleVerified { ciphertext: true, key_link: true });

    let payee = Address(terms.payee.clone());
    let payment = match ledger.transact(|w| pay(w, cfg, me, &payee, &bundle_msg.rail))? {
        Ok(p) => p,
        Err(e) => {
            let o = run.abort(ReasonCode::Negotiation, format!("payment failed: {e}"));
            return Ok(run.report(o, None, None));
        }
    };
    run.steps.push(ClientStep::Paid);
    let _ = run.transport.send(&payment.to_message());
    let record = SessionRecord {
        scheme: cfg.scheme.to_string(),
        rail: cfg.rail.to_string(),
        ell: terms.ell,
        subset: cfg.subset.clone().unwrap_or_default(),
        lambda: cfg.lambda,
        beta: cfg.beta,
        chunk_bits: cfg.chunk_bits,
        params_seed_hex: hex::encode(ctx.params.seed()),
        bundle_hex: String::new(),
        contract: match payment {
            PayEvidence::Contract { contract } => Some(contract),
            _ => None,
        },
        htlc: match payment {
            PayEvidence::Htlc { htlc } => Some(htlc),
            _ => None,
        },
        channel: match payment {
            PayEvidence::Lightning { channel, htlc } => Some((channel, htlc)),
            _ => None,
        },
    };
    let record = Some(SessionRecord { bundle_hex: hex::encode(&bundle_msg.bundle), ..record });

    // Whatever arrives, the ledger is the source of truth for the key.
    let _ = run.recv();
    let vk = verified.vk().vk;
    let read_key = |w: &World| {
        revealed_key(w, &payment).and_then(|b| parse_secret(&b)).filter(|sk| ver_key(&ctx.params, &vk, sk))
    };
    let mut key = ledger.transact(|w| read_key(w))?;
    if key.is_none() {
        let Some(deadline) = ledger.transact(|w| deadline(w, &payment))? else {
            return Err(ExchangeError::Ledger("payment vanished from the ledger".into()));
        };
        ledger.wait_for_height(deadline + 1)?;
        key = ledger.transact(|w| match read_key(w) {
            Some(k) => Ok(Some(k)),
            None => refund(w, me, &payment).map(|_| None),
        })??;
        if key.is_none() {
            run.steps.push(ClientStep::Refunded);
            return Ok(run.report(ClientOutcome::Refunded(ReasonCode::Timeout), None, record));
        }
    }
    let sk = key.expect("checked above");
    run.steps.push(ClientStep::KeyRecovered);

    let mut dec_ms = 0.0;
    let subset = cfg.subset.clone().unwrap_or_default();
    let decoded = timed(&mut dec_ms, || decrypt(ctx, &verified, &sk, terms.ell, &subset, rng));
    run.timings.dec_ms = dec_ms;
    match decoded {
        Ok((bytes, path)) => {
            run.steps.push(ClientStep::Decoded);
            Ok(run.report(ClientOutcome::Delivered(bytes), Some(path), record))
        }
        Err(reason) => Ok(run.report(ClientOutcome::PaidUndelivered(reason), None, record)),
    }
}

/// Recovers a purchased file from a saved session once its key is on the
/// ledger.
pub fn recover_from_ledger<L: LedgerAccess>(
    ctx: &Context,
    record: &SessionRecord,
    ledger: &L,
    rng: &mut impl RngCore,
) -> Result<Vec<u8>> {
    let payment = record.payment().ok_or_else(|| ExchangeError::Config("session has no payment".into()))?;
    if record.params_seed_hex != hex::encode(ctx.params.seed()) || record.chunk_bits != ctx.params.chunk_bits() {
        return Err(ExchangeError::Config("session used other encryption parameters".into()));
    }
    let raw = hex::decode(&record.bundle_hex).map_err(|e| ExchangeError::Config(e.to_string()))?;
    let scheme: Scheme = record.scheme.parse()?;
    let verified = match scheme {
        Scheme::VeckPlus => Verified::Plus(Box::new(VeckPlusBundle::from_bytes(&raw)?)),
        Scheme::VeckStar => Verified::Star(Box::new(StarBundle::from_bytes(&raw)?)),
    };
    let vk = verified.vk().vk;
    let sk = ledger
        .transact(|w| revealed_key(w, &payment))?
        .and_then(|b| parse_secret(&b))
        .filter(|sk| ver_key(&ctx.params, &vk, sk))
        .ok_or_else(|| ExchangeError::Ledger("no valid key on the ledger for this session".into()))?;
    decrypt(ctx, &verified, &sk, record.ell, &record.subset, rng)
        .map(|(b, _)| b)
        .map_err(|r| ExchangeError::Ledger(format!("decryption failed: {r}")))
}
