//! Shared ledger state and how a session reaches it.

use std::fs::{self, File, OpenOptions};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use fde_payments::channel::LightningChannel;
use fde_payments::{Address, MockLedger};
use serde::{Deserialize, Serialize};

use crate::{ExchangeError, Result};

/// The ledger plus the off-chain channels between its parties.
#[derive(Debug, Default, Serialize, Deserialize)]
pub struct World {
    pub ledger: MockLedger,
    pub channels: Vec<LightningChannel>,
}

impl World {
    pub fn open_channel(&mut self, client: &Address, server: &Address, capacity: u64) -> Result<u64> {
        let ch = LightningChannel::open(&mut self.ledger, client, server, capacity)?;
        let id = ch.id();
        self.channels.push(ch);
        Ok(id)
    }

    pub fn channel_mut(&mut self, id: u64) -> Option<&mut LightningChannel> {
        self.channels.iter_mut().find(|c| c.id() == id)
    }
}

/// Serialized access to the ledger; every closure runs as one atomic step.
pub trait LedgerAccess: Send + Sync {
    fn transact<R>(&self, f: impl FnOnce(&mut World) -> R) -> Result<R>;

    /// Returns once the chain has reached `height`.
    fn wait_for_height(&self, height: u64) -> Result<()>;
}

/// In-memory ledger. Waiting for a height advances the chain, so test
/// schedules never sleep.
#[derive(Clone, Default)]
pub struct MemoryLedger(Arc<Mutex<World>>);

impl MemoryLedger {
    pub fn new(world: World) -> Self {
        Self(Arc::new(Mutex::new(world)))
    }
}

impl LedgerAccess for MemoryLedger {
    fn transact<R>(&self, f: impl FnOnce(&mut World) -> R) -> Result<R> {
        let mut w = self.0.lock().map_err(|_| ExchangeError::Ledger("ledger lock poisoned".into()))?;
        Ok(f(&mut w))
    }

    fn wait_for_height(&self, height: u64) -> Result<()> {
        self.transact(|w| {
            let now = w.ledger.height();
            if now < height {
                w.ledger.advance_height(height - now);
            }
        })
    }
}

#[derive(Serialize, Deserialize)]
struct FileStore {
    genesis_ms: u64,
    block_ms: u64,
    world: World,
}

fn now_ms() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis() as u64)
}

/// Ledger kept in a JSON file shared by separate processes. Height follows
/// the wall clock at one block per `block_ms`.
#[derive(Clone, Debug)]
pub struct FileLedger {
    path: PathBuf,
}

impl FileLedger {
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        if !path.exists() {
            return Err(ExchangeError::Ledger(format!("no ledger at {}", path.display())));
        }
        Ok(Self { path })
    }

    /// Creates a fresh ledger with the given genesis balances.
    pub fn create(path: impl AsRef<Path>, block_ms: u64, funds: &[(Address, u64)]) -> Result<Self> {
        let mut world = World::default();
        for (who, amount) in funds {
            world.ledger.mint(who, *amount);
        }
        let store = FileStore { genesis_ms: now_ms(), block_ms: block_ms.max(1), world };
        let l = Self { path: path.as_ref().to_path_buf() };
        l.save(&store)?;
        Ok(l)
    }

    fn lock_file(&self) -> Result<File> {
        let mut p = self.path.clone().into_os_string();
        p.push(".lock");
        let f = OpenOptions::new().create(true).truncate(false).write(true).open(PathBuf::from(p))?;
        f.lock()?;
        Ok(f)
    }

    fn load(&self) -> Result<FileStore> {
        let raw = fs::read(&self.path)?;
        serde_json::from_slice(&raw).map_err(|e| ExchangeError::Ledger(format!("corrupt ledger file: {e}")))
    }

    fn save(&self, store: &FileStore) -> Result<()> {
        let mut tmp = self.path.clone().into_os_string();
        tmp.push(".tmp");
        let tmp = PathBuf::from(tmp);
        fs::write(&tmp, serde_json::to_vec(store).map_err(|e| ExchangeError::Ledger(e.to_string()))?)?;
        fs::rename(&tmp, &self.path)?;
        Ok(())
    }

    fn clock_height(store: &FileStore) -> u64 {
        now_ms().saturating_sub(store.genesis_ms) / store.block_ms
    }
}

impl LedgerAccess for FileLedger {
    fn transact<R>(&self, f: impl FnOnce(&mut World) -> R) -> Result<R> {
        let _guard = self.lock_file()?;
        let mut store = self.load()?;
        let target = Self::clock_height(&store);
        let now = store.world.ledger.height();
        if target > now {
            store.world.ledger.advance_height(target - now);
        }
        let out = f(&mut store.world);
        self.save(&store)?;
        Ok(out)
    }

    fn wait_for_height(&self, height: u64) -> Result<()> {
        loop {
            let (now, block_ms) = {
                let _guard = self.lock_file()?;
                let s = self.load()?;
                (Self::clock_height(&s).max(s.world.ledger.height()), s.block_ms)
            };
            if now >= height {
                return Ok(());
            }
            std::thread::sleep(Duration::from_millis(block_ms.min(200)));
        }
    }
}
