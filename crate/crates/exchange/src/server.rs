//! Server state machine: negotiate, encrypt and prove, wait for payment,
//! claim it with the key.

use std::sync::Arc;

use blstrs::Scalar;
use fde_core::veck::{
    plus::{plus_encrypt_full, plus_encrypt_subset},
    star::star_mask,
    BackendId, CommittedFile, Keypair, TransparentBackend,
};
use fde_payments::bridge::{bridge_prove, BridgeStatement};
use fde_payments::htlc::{success_witness, HtlcId};
use fde_payments::sig::SigningKey;
use fde_payments::{hashlock, secret_bytes, Address};
use rand::RngCore;

use crate::config::{RailKind, Scheme, SessionConfig};
use crate::encoding::FileEncoding;
use crate::session::{code_length, plus_config, star_config, timed, Context, Timings};
use crate::transport::Transport;
use crate::wire::{
    Abort, BundleMessage, KeyReveal, MessageType, Offer, OfferTerms, PayEvidence, RailData, ReasonCode,
};
use crate::world::{LedgerAccess, World};
use crate::{ExchangeError, Result};

/// The committed file and its setup, shared read-only across sessions.
pub struct ServerAssets {
    pub ctx: Context,
    pub file: Arc<CommittedFile>,
    /// Time spent interpolating and committing.
    pub commit_ms: f64,
}

impl ServerAssets {
    pub fn new(ctx: Context, encoding: &FileEncoding) -> Result<Self> {
        let mut commit_ms = 0.0;
        let file = timed(&mut commit_ms, || CommittedFile::new(&ctx.crs, encoding.scalars.clone()))?;
        Ok(Self { ctx, file: Arc::new(file), commit_ms })
    }
}

pub struct ServerIdentity {
    pub address: Address,
    pub signing_key: SigningKey,
}

/// Misbehaviour switches for fairness tests.
#[derive(Clone, Copy, Debug, Default)]
pub struct ServerOptions {
    /// Never claim the payment, so the key is never revealed.
    pub withhold_key: bool,
    /// Try claiming with a wrong key before the real one.
    pub wrong_key_first: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ServerOutcome {
    /// Payment claimed; the key is public.
    Paid,
    /// The session ended before payment.
    Unpaid(ReasonCode),
    /// Payment arrived but the server chose not to claim it.
    Withheld,
}

#[derive(Clone, Debug)]
pub struct ServerReport {
    pub outcome: ServerOutcome,
    pub timings: Timings,
    pub bytes_sent: u64,
}

struct Prepared {
    bundle: Vec<u8>,
    keypair: Keypair,
}

fn negotiate(cfg: &SessionConfig, assets: &ServerAssets, offer: &Offer) -> Result<u64, String> {
    let ok = offer.scheme == cfg.scheme
        && offer.rail == cfg.rail
        && offer.beta == cfg.beta
        && offer.lambda as usize == cfg.lambda
        && offer.chunk_bits == cfg.chunk_bits
        && offer.chunk_bits == assets.ctx.params.chunk_bits()
        && offer.mask == cfg.mask
        && offer.price == cfg.price
        && offer.timeout_blocks == cfg.timeout_blocks
        && offer.terms.is_none();
    if !ok {
        return Err("proposal does not match the server's terms".into());
    }
    let ell = assets.file.ell() as u64;
    if !offer.subset.is_empty() {
        if offer.scheme != Scheme::VeckPlus {
            return Err("subset purchases need the plus scheme".into());
        }
        if offer.subset.windows(2).any(|w| w[0] >= w[1]) || offer.subset.iter().any(|i| *i > ell) {
            return Err("subset is not an ascending set of file positions".into());
        }
    }
    code_length(ell, &offer.subset, cfg.beta).map_err(|e| e.to_string())
}

fn prepare(
    cfg: &SessionConfig,
    assets: &ServerAssets,
    subset: &[u64],
    timings: &mut Timings,
    rng: &mut impl RngCore,
) -> Result<Prepared> {
    let ctx = &assets.ctx;
    let file = &*assets.file;
    let (bundle, keypair) = match cfg.scheme {
        Scheme::VeckPlus => {
            let pc = plus_config(cfg);
            let enc = timed(&mut timings.enc_ms, || {
                if subset.is_empty() {
                    plus_encrypt_full(&ctx.params, &pc, file, rng)
                } else {
                    plus_encrypt_subset(&ctx.crs, &ctx.params, &pc, file, subset, rng)
                }
            })?;
            let (b, kp) = timed(&mut timings.prove_ms, || enc.prove(&ctx.crs, &ctx.params, file, !subset.is_empty(), rng))?;
            (b.to_bytes(), kp)
        }
        Scheme::VeckStar => {
            let backend = TransparentBackend::new(cfg.mode);
            let masking = timed(&mut timings.enc_ms, || star_mask(&ctx.params, &star_config(cfg), file, rng))?;
            let (b, kp) = timed(&mut timings.prove_ms, || masking.prove(&ctx.crs, &ctx.params, file, &backend, rng))?;
            (b.to_bytes(), kp)
        }
    };
    Ok(Prepared { bundle, keypair })
}

fn rail_data<L: LedgerAccess>(
    cfg: &SessionConfig,
    assets: &ServerAssets,
    me: &ServerIdentity,
    buyer: &Address,
    keypair: &Keypair,
    ledger: &L,
    timings: &mut Timings,
) -> Result<RailData> {
    let h = assets.ctx.params.h();
    let sk = keypair.sk;
    let link = |timings: &mut Timings| -> Result<(Vec<u8>, [u8; 32])> {
        let t = hashlock(&sk);
        let st = BridgeStatement { h, vk: keypair.public.vk, hashlock: t };
        let backend = TransparentBackend::new(cfg.mode);
        Ok((timed(&mut timings.prove_ms, || bridge_prove(&backend, &st, &sk))?, t))
    };
    Ok(match cfg.rail {
        RailKind::Contract => {
            let vk = keypair.public.vk;
            let id = ledger.transact(|w| {
                let timeout = w.ledger.height() + cfg.timeout_blocks;
                w.ledger.contract_deploy(&me.address, buyer, h, vk, cfg.price, timeout)
            })??;
            RailData::Contract { contract: id.0 }
        }
        RailKind::Htlc => {
            let (bridge_proof, t) = link(timings)?;
            let pk = ledger.transact(|w| w.ledger.register_key(&me.signing_key))?;
            RailData::Htlc { hashlock: t, server_pk: pk.0, bridge_proof }
        }
        RailKind::Lightning => {
            let (bridge_proof, t) = link(timings)?;
            RailData::Lightning { hashlock: t, bridge_proof }
        }
    })
}

/// Attempts to collect the payment with `sk`; `Ok(false)` if no matching
/// payment is on the ledger.
fn claim(
    w: &mut World,
    cfg: &SessionConfig,
    me: &ServerIdentity,
    rail: &RailData,
    hint: Option<PayEvidence>,
    sk: &Scalar,
) -> Result<bool> {
    let height = w.ledger.height();
    match rail {
        RailData::Contract { contract } => {
            let id = fde_payments::contract::ContractId(*contract);
            if w.ledger.contract(id)?.status != fde_payments::contract::ContractStatus::Locked {
                return Ok(false);
            }
            w.ledger.contract_claim(id, &me.address, sk)?;
            Ok(true)
        }
        RailData::Htlc { hashlock: t, server_pk, .. } => {
            let matches = |o: &fde_payments::htlc::HtlcOutput| {
                o.spent.is_none()
                    && o.terms.hashlock == *t
                    && o.terms.server_pk.0 == *server_pk
                    && o.server == me.address
                    && o.amount >= cfg.price
                    && o.terms.timeout >= height
            };
            let hinted = match hint {
                Some(PayEvidence::Htlc { htlc }) => w.ledger.htlc(HtlcId(htlc)).ok().filter(|o| matches(o)).map(|_| htlc),
                _ => None,
            };
            let found = hinted.or_else(|| w.ledger.htlcs().iter().position(matches).map(|i| i as u64));
            let Some(id) = found.map(HtlcId) else { return Ok(false) };
            w.ledger.htlc_spend(id, success_witness(id, &me.signing_key, &secret_bytes(sk)))?;
            Ok(true)
        }
        RailData::Lightning { hashlock: t, .. } => {
            let found = w.channels.iter().enumerate().find_map(|(c, ch)| {
                if ch.is_closed() || *ch.server() != me.address {
                    return None;
                }
                ch.htlcs()
                    .iter()
                    .position(|h| {
                        h.state == fde_payments::channel::HtlcState::Pending
                            && h.hashlock == *t
                            && h.amount >= cfg.price
                            && h.expiry >= height
                    })
                    .map(|i| (c, i))
            });
            let Some((c, i)) = found else { return Ok(false) };
            w.channels[c].fulfill(i, &secret_bytes(sk), height)?;
            Ok(true)
        }
    }
}

fn abort<T: Transport>(t: &mut T, reason: ReasonCode, detail: impl Into<String>) {
    let _ = t.send(&Abort { reason, detail: detail.into() }.to_message());
}

/// Runs one server session to completion.
#[allow(clippy::too_many_arguments)]
pub fn run_server<T: Transport, L: LedgerAccess>(
    cfg: &SessionConfig,
    assets: &ServerAssets,
    me: &ServerIdentity,
    opts: &ServerOptions,
    ledger: &L,
    transport: &mut T,
    rng: &mut impl RngCore,
) -> Result<ServerReport> {
    cfg.validate()?;
    let mut timings = Timings { commit_ms: assets.commit_ms, ..Timings::default() };
    let done = |outcome, timings, t: &T| Ok(ServerReport { outcome, timings, bytes_sent: t.bytes_sent() });

    let offer = match transport.recv() {
        Ok(m) => match Offer::from_message(&m) {
            Ok(o) => o,
            Err(e) => {
                abort(transport, ReasonCode::Negotiation, e.to_string());
                return done(ServerOutcome::Unpaid(ReasonCode::Negotiation), timings, transport);
            }
        },
        Err(ExchangeError::Timeout | ExchangeError::Closed) => {
            return done(ServerOutcome::Unpaid(ReasonCode::Timeout), timings, transport)
        }
        Err(e) => return Err(e),
    };
    let m = match negotiate(cfg, assets, &offer) {
        Ok(m) => m,
        Err(detail) => {
            abort(transport, ReasonCode::Negotiation, detail);
            return done(ServerOutcome::Unpaid(ReasonCode::Negotiation), timings, transport);
        }
    };
    let terms = OfferTerms {
        crs_digest: assets.ctx.crs.digest(),
        params_seed: assets.ctx.params.seed().to_vec(),
        commitment: assets.file.commitment().to_compressed(),
        ell: assets.file.ell() as u64,
        m,
        backend: BackendId::Transparent as u8,
        payee: me.address.0.clone(),
        key_encoding: 0,
    };
    transport.send(&Offer { terms: Some(terms), ..offer.clone() }.to_message())?;

    let prepared = prepare(cfg, assets, &offer.subset, &mut timings, rng)?;
    let buyer = Address(offer.buyer.clone());
    let rail = rail_data(cfg, assets, me, &buyer, &prepared.keypair, ledger, &mut timings)?;
    let bundle = BundleMessage { scheme: cfg.scheme, bundle: prepared.bundle, rail: rail.clone() };
    if transport.send(&bundle.to_message()).is_err() {
        return done(ServerOutcome::Unpaid(ReasonCode::Timeout), timings, transport);
    }

    // Any reply, or silence, sends the server to the ledger: evidence is
    // only a hint.
    let hint = match transport.recv() {
        Ok(msg) if msg.kind == MessageType::Abort => {
            let reason = Abort::from_message(&msg).map_or(ReasonCode::Timeout, |a| a.reason);
            return done(ServerOutcome::Unpaid(reason), timings, transport);
        }
        Ok(msg) => PayEvidence::from_message(&msg).ok(),
        Err(ExchangeError::Timeout | ExchangeError::Closed | ExchangeError::Wire(_)) => None,
        Err(e) => return Err(e),
    };
    if opts.withhold_key {
        let paid = ledger.transact(|w| payment_visible(w, cfg, me, &rail))?;
        let outcome = if paid { ServerOutcome::Withheld } else { ServerOutcome::Unpaid(ReasonCode::Timeout) };
        return done(outcome, timings, transport);
    }
    let sk = prepared.keypair.sk;
    let claimed = ledger.transact(|w| {
        if opts.wrong_key_first {
            let _ = claim(w, cfg, me, &rail, hint, &(sk + Scalar::from(1u64)));
        }
        claim(w, cfg, me, &rail, hint, &sk)
    })?;
    match claimed {
        Ok(true) => {
            let _ = transport.send(&KeyReveal { key: secret_bytes(&sk) }.to_message());
            done(ServerOutcome::Paid, timings, transport)
        }
        Ok(false) | Err(_) => done(ServerOutcome::Unpaid(ReasonCode::Timeout), timings, transport),
    }
}

fn payment_visible(w: &World, cfg: &SessionConfig, me: &ServerIdentity, rail: &RailData) -> bool {
    match rail {
        RailData::Contract { contract } => w
            .ledger
            .contract(fde_payments::contract::ContractId(*contract))
            .is_ok_and(|c| c.status == fde_payments::contract::ContractStatus::Locked),
        RailData::Htlc { hashlock: t, .. } => w
            .ledger
            .htlcs()
            .iter()
            .any(|o| o.terms.hashlock == *t && o.server == me.address && o.amount >= cfg.price),
        RailData::Lightning { hashlock: t, .. } => w
            .channels
            .iter()
            .any(|ch| *ch.server() == me.address && ch.htlcs().iter().any(|h| h.hashlock == *t)),
    }
}
