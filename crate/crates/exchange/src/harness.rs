//! Runs both parties in one process over an in-memory pipe and a shared
//! ledger, with optional fault injection on either side.

use std::sync::Arc;
use std::time::Duration;

use blstrs::G1Affine;
use fde_core::kzg::Crs;
use fde_core::veck::VeckParams;
use fde_payments::sig::SigningKey;
use fde_payments::Address;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::client::{run_client, ClientIdentity, ClientOutcome, ClientReport};
use crate::config::{RailKind, SessionConfig};
use crate::encoding::{encode_file, FileEncoding};
use crate::server::{run_server, ServerAssets, ServerIdentity, ServerOptions, ServerOutcome, ServerReport};
use crate::session::Context;
use crate::transport::{memory_pair, FaultPlan, FaultyTransport};
use crate::world::{LedgerAccess, MemoryLedger, World};
use crate::{ExchangeError, Result};

pub const CLIENT_FUNDS: u64 = 1_000_000;
pub const CHANNEL_CAPACITY: u64 = 100_000;

/// Deadlock guard only; lost messages surface immediately.
const IDLE: Duration = Duration::from_secs(120);

/// A seller with one committed file, a buyer and a fresh ledger.
pub struct Harness {
    pub plaintext: Vec<u8>,
    pub encoding: FileEncoding,
    pub assets: Arc<ServerAssets>,
    pub ledger: MemoryLedger,
    pub server: ServerIdentity,
    pub client: ClientIdentity,
}

/// Per-run knobs.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub cfg: SessionConfig,
    pub server: ServerOptions,
    /// Fault on messages the server sends.
    pub server_fault: Option<FaultPlan>,
    /// Fault on messages the client sends.
    pub client_fault: Option<FaultPlan>,
    pub seed: u64,
}

impl Scenario {
    pub fn honest(cfg: SessionConfig, seed: u64) -> Self {
        Self { cfg, server: ServerOptions::default(), server_fault: None, client_fault: None, seed }
    }
}

#[derive(Clone, Debug)]
pub struct SessionResult {
    pub client: ClientReport,
    pub server: ServerReport,
    pub client_delta: i128,
    pub server_delta: i128,
    /// Both transports' bytes.
    pub wire_bytes: u64,
}

/// Joint outcome of a session.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Classified {
    /// The client holds the file and the server holds the price.
    DeliveredAndPaid,
    /// No money moved and no key was published.
    UnpaidNoKey,
    /// The client paid, got nothing, and was refunded in full.
    Refunded,
    Unfair(String),
}

impl SessionResult {
    pub fn classify(&self, plaintext: &[u8], price: u64) -> Classified {
        let p = price as i128;
        match (&self.client.outcome, self.server.outcome) {
            (ClientOutcome::Delivered(b), ServerOutcome::Paid) if b.as_slice() == plaintext => {
                if self.client_delta == -p && self.server_delta == p {
                    Classified::DeliveredAndPaid
                } else {
                    Classified::Unfair(format!("balances moved by {} and {}", self.client_delta, self.server_delta))
                }
            }
            (ClientOutcome::Delivered(_), _) => Classified::Unfair("client decoded data that differs from the file".into()),
            (ClientOutcome::Aborted(_), ServerOutcome::Unpaid(_)) if self.client_delta == 0 && self.server_delta == 0 => {
                Classified::UnpaidNoKey
            }
            (ClientOutcome::Refunded(_), ServerOutcome::Withheld | ServerOutcome::Unpaid(_))
                if self.client_delta == 0 && self.server_delta == 0 =>
            {
                Classified::Refunded
            }
            (c, s) => Classified::Unfair(format!(
                "client {c:?} server {s:?} deltas {} {}",
                self.client_delta, self.server_delta
            )),
        }
    }
}

impl Harness {
    /// Sets up a reference string sized for the file and commits to it.
    pub fn new(plaintext: &[u8], chunk_bits: u32, seed: u64) -> Result<Self> {
        let encoding = encode_file(plaintext)?;
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let crs = Crs::setup(encoding.ell() + 1, &mut rng)?;
        let params = VeckParams::new(format!("harness-{seed}").as_bytes(), chunk_bits)?;
        Self::with_context(plaintext, Context::new(Arc::new(crs), params), seed)
    }

    pub fn with_context(plaintext: &[u8], ctx: Context, seed: u64) -> Result<Self> {
        let encoding = encode_file(plaintext)?;
        let assets = Arc::new(ServerAssets::new(ctx, &encoding)?);
        let mut rng = ChaCha20Rng::seed_from_u64(seed ^ 0x5eed);
        let server = ServerIdentity { address: Address::from("server"), signing_key: SigningKey::generate(&mut rng) };
        let mut client = ClientIdentity {
            address: Address::from("client"),
            signing_key: SigningKey::generate(&mut rng),
            channel: None,
        };
        let mut world = World::default();
        world.ledger.mint(&client.address, CLIENT_FUNDS);
        let channel = world.open_channel(&client.address, &server.address, CHANNEL_CAPACITY)?;
        client.channel = Some(channel);
        Ok(Self { plaintext: plaintext.to_vec(), encoding, assets, ledger: MemoryLedger::new(world), server, client })
    }

    pub fn ctx(&self) -> &Context {
        &self.assets.ctx
    }

    pub fn commitment(&self) -> G1Affine {
        self.assets.file.commitment()
    }

    fn funds(&self, rail: RailKind) -> Result<(i128, i128)> {
        let (client, server) = (&self.client, &self.server);
        self.ledger.transact(|w| {
            let mut c = w.ledger.balance(&client.address) as i128;
            let mut s = w.ledger.balance(&server.address) as i128;
            if rail == RailKind::Lightning {
                for ch in w.channels.iter().filter(|ch| ch.client() == &client.address) {
                    c += ch.client_balance() as i128;
                    s += ch.server_balance() as i128;
                }
            }
            (c, s)
        })
    }

    /// Runs one session to completion on both sides.
    pub fn run(&self, sc: &Scenario) -> Result<SessionResult> {
        let (c0, s0) = self.funds(sc.cfg.rail)?;
        let (ct, st) = memory_pair(IDLE);
        let st = FaultyTransport::new(st, sc.server_fault);
        let mut ct = FaultyTransport::new(ct, sc.client_fault);
        let commitment = self.commitment();

        let (server, client) = std::thread::scope(|scope| {
            let srv = scope.spawn(move || {
                let mut st = st;
                let mut rng = ChaCha20Rng::seed_from_u64(sc.seed);
                run_server(&sc.cfg, &self.assets, &self.server, &sc.server, &self.ledger, &mut st, &mut rng)
            });
            let mut rng = ChaCha20Rng::seed_from_u64(sc.seed.wrapping_add(1));
            let client = run_client(self.ctx(), &sc.cfg, &self.client, Some(&commitment), &self.ledger, &mut ct, &mut rng);
            drop(ct);
            (srv.join().expect("server thread panicked"), client)
        });
        let (server, client) = (server?, client?);
        let (c1, s1) = self.funds(sc.cfg.rail)?;
        Ok(SessionResult {
            wire_bytes: server.bytes_sent + client.bytes_sent,
            client,
            server,
            client_delta: c1 - c0,
            server_delta: s1 - s0,
        })
    }

    /// Honest run that must deliver.
    pub fn deliver(&self, cfg: &SessionConfig, seed: u64) -> Result<SessionResult> {
        let r = self.run(&Scenario::honest(cfg.clone(), seed))?;
        match r.classify(&self.plaintext, cfg.price) {
            Classified::DeliveredAndPaid => Ok(r),
            other => Err(ExchangeError::Config(format!("honest session did not deliver: {other:?}"))),
        }
    }
}
