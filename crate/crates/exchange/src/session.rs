//! State shared by both sides of a session.

use std::sync::{Arc, OnceLock};
use std::time::Instant;

use fde_core::kzg::Crs;
use fde_core::rscode::CodeParams;
use fde_core::veck::{DlogTable, PlusConfig, StarConfig, VeckParams};

use crate::config::SessionConfig;
use crate::Result;

/// Immutable setup: reference string, encryption parameters and the
/// decryption lookup table (built on first use).
#[derive(Clone)]
pub struct Context {
    pub crs: Arc<Crs>,
    pub params: VeckParams,
    table: Arc<OnceLock<DlogTable>>,
}

impl Context {
    pub fn new(crs: Arc<Crs>, params: VeckParams) -> Self {
        Self { crs, params, table: Arc::default() }
    }

    pub fn table(&self) -> &DlogTable {
        self.table.get_or_init(|| DlogTable::new(self.params.chunk_bits()))
    }
}

/// Wall time per phase in milliseconds; zero for phases a side does not
/// run.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Timings {
    pub commit_ms: f64,
    pub enc_ms: f64,
    pub prove_ms: f64,
    pub verify_ms: f64,
    pub dec_ms: f64,
}

pub(crate) fn timed<R>(slot: &mut f64, f: impl FnOnce() -> R) -> R {
    let start = Instant::now();
    let out = f();
    *slot += start.elapsed().as_secs_f64() * 1e3;
    out
}

pub(crate) fn plus_config(cfg: &SessionConfig) -> PlusConfig {
    PlusConfig { lambda: cfg.lambda, beta: cfg.beta }
}

pub(crate) fn star_config(cfg: &SessionConfig) -> StarConfig {
    StarConfig { lambda: cfg.lambda, beta: cfg.beta, mask: cfg.mask }
}

/// Code length of the encrypted word: the file's for a full purchase,
/// `|S| + 1` symbols for a subset.
pub(crate) fn code_length(ell: u64, subset: &[u64], beta: f64) -> Result<u64> {
    let degree = if subset.is_empty() { ell as usize } else { subset.len() };
    Ok(CodeParams::new(degree, beta)?.m as u64)
}
