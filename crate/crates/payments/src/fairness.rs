//! Randomized interleaving checker for the payment rails.
//!
//! Each trace draws a schedule of client, server and clock actions
//! (including tampered claims, replays and idle steps), runs it against a
//! fresh ledger, settles by letting every timeout pass, and then checks:
//!
//! * the server is paid iff a valid key became visible to the client;
//! * no key is revealed in a trace where the client never paid;
//! * balances are conserved after every step;
//! * every funded object reaches exactly one terminal state.

use std::fmt;

use blstrs::{G1Affine, G1Projective, Scalar};
use group::{Curve, Group};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::channel::{HtlcState, LightningChannel};
use crate::contract::{ContractId, ContractStatus};
use crate::htlc::{refund_witness, success_witness, HtlcId, HtlcTerms};
use crate::ledger::{Address, MockLedger};
use crate::sig::SigningKey;
use crate::{hashlock, parse_secret, secret_bytes};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Rail {
    Contract,
    Htlc,
    Lightning,
}

impl Rail {
    pub const ALL: [Rail; 3] = [Rail::Contract, Rail::Htlc, Rail::Lightning];
}

impl fmt::Display for Rail {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Rail::Contract => "contract",
            Rail::Htlc => "htlc",
            Rail::Lightning => "lightning",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Action {
    Pay,
    Claim,
    ClaimWrongKey,
    ClaimWrongParty,
    Refund,
    Tick(u64),
    Idle,
}

const PRICE: u64 = 25;
const CLIENT_FUNDS: u64 = 100;
const TIMEOUT: u64 = 6;

/// Key material shared by all traces.
pub struct Fixture {
    h: G1Affine,
    sk: Scalar,
    wrong_sk: Scalar,
    vk: G1Affine,
}

impl Fixture {
    pub fn new(seed: u64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let h = (G1Projective::generator() * Scalar::from(rng.gen::<u64>() | 1)).to_affine();
        let sk = Scalar::from(rng.gen::<u64>()) + Scalar::from(2u64);
        let wrong_sk = sk + Scalar::from(rng.gen::<u32>() as u64 + 1);
        Self { h, sk, wrong_sk, vk: (h * sk).to_affine() }
    }

    fn valid(&self, sk: &Scalar) -> bool {
        (self.h * sk).to_affine() == self.vk
    }
}

#[derive(Clone, Debug)]
pub struct TraceReport {
    pub rail: Rail,
    pub seed: u64,
    pub steps: usize,
    pub client_paid: bool,
    pub server_paid: bool,
    pub key_revealed: bool,
    pub violations: Vec<String>,
}

#[derive(Clone, Debug, Default)]
pub struct RailSummary {
    pub traces: usize,
    pub paid_traces: usize,
    pub unpaid_traces: usize,
    pub revealed_traces: usize,
    pub violations: Vec<String>,
}

/// Runs `traces` schedules with seeds derived from `seed`.
pub fn check_rail(fixture: &Fixture, rail: Rail, traces: usize, seed: u64) -> RailSummary {
    let mut s = RailSummary { traces, ..Default::default() };
    for i in 0..traces {
        let r = run_trace(fixture, rail, seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(i as u64));
        if r.client_paid {
            s.paid_traces += 1;
        } else {
            s.unpaid_traces += 1;
        }
        s.revealed_traces += r.key_revealed as usize;
        s.violations.extend(r.violations.into_iter().map(|v| format!("{rail} seed {}: {v}", r.seed)));
    }
    s
}

struct World {
    ledger: MockLedger,
    server: Address,
    client: Address,
    contract: Option<ContractId>,
    htlc: Option<HtlcId>,
    terms: Option<HtlcTerms>,
    server_key: SigningKey,
    client_key: SigningKey,
    channel: Option<LightningChannel>,
    channel_htlc: Option<usize>,
    client_paid: bool,
}

pub fn run_trace(fx: &Fixture, rail: Rail, seed: u64) -> TraceReport {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut ledger = MockLedger::new();
    let (server, client) = (Address::from("server"), Address::from("client"));
    ledger.mint(&client, CLIENT_FUNDS);
    let server_key = SigningKey::generate(&mut rng);
    let client_key = SigningKey::generate(&mut rng);
    let mut w = World {
        ledger,
        server,
        client,
        contract: None,
        htlc: None,
        terms: None,
        server_key,
        client_key,
        channel: None,
        channel_htlc: None,
        client_paid: false,
    };
    match rail {
        Rail::Contract => {
            w.contract = w
                .ledger
                .contract_deploy(&w.server, &w.client, fx.h, fx.vk, PRICE, TIMEOUT)
                .ok();
        }
        Rail::Htlc => {
            w.terms = Some(HtlcTerms {
                hashlock: hashlock(&fx.sk),
                server_pk: w.ledger.register_key(&w.server_key),
                client_pk: w.ledger.register_key(&w.client_key),
                timeout: TIMEOUT,
            });
        }
        Rail::Lightning => {
            w.channel = LightningChannel::open(&mut w.ledger, &w.client, &w.server, CLIENT_FUNDS / 2).ok();
        }
    }

    let client_pays = rng.gen_bool(0.75);
    let steps = rng.gen_range(3..=12);
    let mut violations = Vec::new();
    for _ in 0..steps {
        let action = match rng.gen_range(0..8) {
            0 if client_pays => Action::Pay,
            0 => Action::Idle,
            1 | 2 => Action::Claim,
            3 => Action::ClaimWrongKey,
            4 => Action::ClaimWrongParty,
            5 => Action::Refund,
            6 => Action::Tick(rng.gen_range(1..=3)),
            _ => Action::Idle,
        };
        apply(fx, &mut w, rail, action);
        if w.ledger.total_balance() != w.ledger.supply() {
            violations.push(format!("conservation broken after {action:?}"));
        }
        if !w.client_paid && revealed_key(fx, &w, rail) {
            violations.push(format!("key revealed before payment at {action:?}"));
        }
    }

    // Settle: every timeout passes and the client recovers what it can.
    w.ledger.advance_height(TIMEOUT + 1);
    apply(fx, &mut w, rail, Action::Refund);
    if let Some(ch) = w.channel.as_mut() {
        if let Err(e) = ch.close(&mut w.ledger) {
            violations.push(format!("channel failed to close: {e}"));
        }
    }
    if w.ledger.total_balance() != w.ledger.supply() {
        violations.push("conservation broken at settlement".into());
    }

    let server_paid = w.ledger.balance(&w.server) > 0;
    let key_revealed = revealed_key(fx, &w, rail);
    if server_paid && !key_revealed {
        violations.push("server paid without revealing a valid key".into());
    }
    if key_revealed && !server_paid {
        violations.push("key revealed without paying the server".into());
    }
    if key_revealed && !w.client_paid {
        violations.push("key revealed in a trace where the client never paid".into());
    }
    let client_final = w.ledger.balance(&w.client);
    let server_final = w.ledger.balance(&w.server);
    if client_final + server_final != CLIENT_FUNDS {
        violations.push(format!("final balances {client_final}+{server_final} != {CLIENT_FUNDS}"));
    }
    if server_paid && server_final != PRICE {
        violations.push(format!("server received {server_final}, expected {PRICE}"));
    }
    if !server_paid && client_final != CLIENT_FUNDS {
        violations.push(format!("unpaid trace left client with {client_final}"));
    }
    violations.extend(terminal_violations(&w, rail));

    TraceReport {
        rail,
        seed,
        steps,
        client_paid: w.client_paid,
        server_paid,
        key_revealed,
        violations,
    }
}

fn apply(fx: &Fixture, w: &mut World, rail: Rail, action: Action) {
    let height = w.ledger.height();
    match (rail, action) {
        (_, Action::Idle) => {}
        (_, Action::Tick(n)) => w.ledger.advance_height(n),

        (Rail::Contract, Action::Pay) => {
            if let Some(id) = w.contract {
                if w.ledger.contract_lock(id, &w.client).is_ok() {
                    w.client_paid = true;
                }
            }
        }
        (Rail::Contract, Action::Claim) => {
            if let Some(id) = w.contract {
                let _ = w.ledger.contract_claim(id, &w.server, &fx.sk);
            }
        }
        (Rail::Contract, Action::ClaimWrongKey) => {
            if let Some(id) = w.contract {
                let _ = w.ledger.contract_claim(id, &w.server, &fx.wrong_sk);
            }
        }
        (Rail::Contract, Action::ClaimWrongParty) => {
            if let Some(id) = w.contract {
                let _ = w.ledger.contract_claim(id, &w.client, &fx.sk);
            }
        }
        (Rail::Contract, Action::Refund) => {
            if let Some(id) = w.contract {
                let _ = w.ledger.contract_refund(id, &w.client);
            }
        }

        (Rail::Htlc, Action::Pay) => {
            if w.htlc.is_none() {
                let terms = w.terms.expect("terms set at setup");
                let timeout = height + TIMEOUT;
                let terms = HtlcTerms { timeout, ..terms };
                if let Ok(id) = w.ledger.htlc_fund(&w.client, &w.server, PRICE, terms) {
                    w.htlc = Some(id);
                    w.client_paid = true;
                }
            }
        }
        (Rail::Htlc, Action::Claim) | (Rail::Htlc, Action::ClaimWrongKey) | (Rail::Htlc, Action::ClaimWrongParty) => {
            if let Some(id) = w.htlc {
                let (key, sk) = match action {
                    Action::Claim => (&w.server_key, fx.sk),
                    Action::ClaimWrongKey => (&w.server_key, fx.wrong_sk),
                    _ => (&w.client_key, fx.sk),
                };
                let wit = success_witness(id, key, &secret_bytes(&sk));
                let _ = w.ledger.htlc_spend(id, wit);
            }
        }
        (Rail::Htlc, Action::Refund) => {
            if let Some(id) = w.htlc {
                let wit = refund_witness(id, &w.client_key);
                let _ = w.ledger.htlc_spend(id, wit);
            }
        }

        (Rail::Lightning, Action::Pay) => {
            if let (Some(ch), None) = (w.channel.as_mut(), w.channel_htlc) {
                if let Ok(idx) = ch.add_htlc(PRICE, hashlock(&fx.sk), height + TIMEOUT) {
                    w.channel_htlc = Some(idx);
                    w.client_paid = true;
                }
            }
        }
        (Rail::Lightning, Action::Claim) | (Rail::Lightning, Action::ClaimWrongKey) => {
            if let (Some(ch), Some(idx)) = (w.channel.as_mut(), w.channel_htlc) {
                let sk = if action == Action::Claim { fx.sk } else { fx.wrong_sk };
                let _ = ch.fulfill(idx, &secret_bytes(&sk), height);
            }
        }
        (Rail::Lightning, Action::ClaimWrongParty) => {
            // A fulfil for an HTLC that was never offered.
            if let Some(ch) = w.channel.as_mut() {
                let _ = ch.fulfill(w.channel_htlc.map_or(0, |i| i + 1), &secret_bytes(&fx.sk), height);
            }
        }
        (Rail::Lightning, Action::Refund) => {
            if let (Some(ch), Some(idx)) = (w.channel.as_mut(), w.channel_htlc) {
                let _ = ch.expire(idx, height);
            }
        }
    }
}

/// Whether the client can read a key that passes the key check.
fn revealed_key(fx: &Fixture, w: &World, rail: Rail) -> bool {
    let candidates: Vec<Vec<u8>> = match rail {
        Rail::Contract => w
            .ledger
            .events()
            .iter()
            .filter(|e| e.action == "claim")
            .map(|e| e.payload.clone())
            .collect(),
        Rail::Htlc => w.htlc.and_then(|id| w.ledger.htlc_revealed_preimage(id)).into_iter().collect(),
        Rail::Lightning => w
            .channel
            .as_ref()
            .map(|c| c.revealed_preimages().map(<[u8]>::to_vec).collect())
            .unwrap_or_default(),
    };
    candidates
        .iter()
        .filter_map(|b| parse_secret(b))
        .any(|sk| fx.valid(&sk))
}

fn terminal_violations(w: &World, rail: Rail) -> Vec<String> {
    let mut v = Vec::new();
    let terminal = |obj: &str, actions: &[&str]| {
        w.ledger
            .events()
            .iter()
            .filter(|e| e.object == obj && actions.contains(&e.action.as_str()))
            .count()
    };
    match rail {
        Rail::Contract => {
            if let Some(id) = w.contract {
                let n = terminal(&format!("contract/{}", id.0), &["claim", "refund"]);
                let status = w.ledger.contract(id).map(|c| c.status).ok();
                let expected = usize::from(w.client_paid);
                if n != expected {
                    v.push(format!("contract reached {n} terminal states"));
                }
                if w.client_paid && !matches!(status, Some(ContractStatus::Claimed | ContractStatus::Refunded)) {
                    v.push(format!("contract left in {status:?}"));
                }
            }
        }
        Rail::Htlc => {
            if let Some(id) = w.htlc {
                let n = terminal(&format!("htlc/{}", id.0), &["spend-success", "spend-refund"]);
                if n != 1 {
                    v.push(format!("htlc spent {n} times"));
                }
            }
        }
        Rail::Lightning => {
            if let (Some(ch), Some(idx)) = (w.channel.as_ref(), w.channel_htlc) {
                match ch.htlc(idx).map(|h| h.state) {
                    Some(HtlcState::Fulfilled | HtlcState::Expired) => {}
                    s => v.push(format!("channel htlc left in {s:?}")),
                }
            }
            if let Some(ch) = w.channel.as_ref() {
                let n = terminal("channel/0", &["close"]);
                if !ch.is_closed() || n != 1 {
                    v.push(format!("channel closed {n} times"));
                }
            }
        }
    }
    v
}
