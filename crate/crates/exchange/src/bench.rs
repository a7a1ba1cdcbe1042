//! Timing and bandwidth grid over schemes, rails, rates and file sizes.

use std::fmt::Write as _;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::config::{RailKind, Scheme, SessionConfig};
use crate::harness::Harness;
use crate::Result;

pub const CSV_HEADER: &str =
    "scheme,rail,beta,bytes_plain,bytes_wire,t_commit_ms,t_enc_ms,t_prove_ms,t_verify_ms,t_dec_ms";

#[derive(Clone, Debug, PartialEq)]
pub struct BenchRow {
    pub scheme: Scheme,
    pub rail: RailKind,
    pub beta: f64,
    pub bytes_plain: u64,
    pub bytes_wire: u64,
    pub t_commit_ms: f64,
    pub t_enc_ms: f64,
    pub t_prove_ms: f64,
    pub t_verify_ms: f64,
    pub t_dec_ms: f64,
}

impl BenchRow {
    pub fn csv(&self) -> String {
        let mut s = String::new();
        let _ = write!(
            s,
            "{},{},{},{},{},{:.3},{:.3},{:.3},{:.3},{:.3}",
            self.scheme,
            self.rail,
            self.beta,
            self.bytes_plain,
            self.bytes_wire,
            self.t_commit_ms,
            self.t_enc_ms,
            self.t_prove_ms,
            self.t_verify_ms,
            self.t_dec_ms
        );
        s
    }
}

#[derive(Clone, Debug)]
pub struct Grid {
    pub schemes: Vec<Scheme>,
    pub rails: Vec<RailKind>,
    pub betas: Vec<f64>,
    pub sizes: Vec<usize>,
    pub chunk_bits: u32,
    pub seed: u64,
}

impl Default for Grid {
    fn default() -> Self {
        Self {
            schemes: Scheme::ALL.to_vec(),
            rails: RailKind::ALL.to_vec(),
            betas: vec![2.0],
            sizes: vec![1 << 10, 1 << 12],
            chunk_bits: fde_core::veck::DEFAULT_CHUNK_BITS,
            seed: 1,
        }
    }
}

/// Runs every cell once, handing each row to `sink` as it completes.
pub fn run_grid(grid: &Grid, mut sink: impl FnMut(&BenchRow)) -> Result<Vec<BenchRow>> {
    let mut rng = ChaCha20Rng::seed_from_u64(grid.seed);
    let mut rows = Vec::new();
    for &size in &grid.sizes {
        let mut plain = vec![0u8; size];
        rng.fill_bytes(&mut plain);
        let h = Harness::new(&plain, grid.chunk_bits, rng.next_u64())?;
        for &scheme in &grid.schemes {
            for &rail in &grid.rails {
                for &beta in &grid.betas {
                    let cfg = SessionConfig { scheme, rail, beta, chunk_bits: grid.chunk_bits, ..SessionConfig::default() };
                    let r = h.deliver(&cfg, rng.next_u64())?;
                    let (s, c) = (r.server.timings, r.client.timings);
                    let row = BenchRow {
                        scheme,
                        rail,
                        beta,
                        bytes_plain: size as u64,
                        bytes_wire: r.wire_bytes,
                        t_commit_ms: h.assets.commit_ms,
                        t_enc_ms: s.enc_ms,
                        t_prove_ms: s.prove_ms,
                        t_verify_ms: c.verify_ms,
                        t_dec_ms: c.dec_ms,
                    };
                    sink(&row);
                    rows.push(row);
                }
            }
        }
    }
    Ok(rows)
}
