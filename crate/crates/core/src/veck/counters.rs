//! Per-thread counts of public-key operations on ciphertext chunks, so
//! tests can assert which code paths touch the group.

use std::cell::Cell;

thread_local! {
    static CHUNK_OPS: Cell<u64> = const { Cell::new(0) };
}

pub(crate) fn record(n: u64) {
    CHUNK_OPS.with(|c| c.set(c.get() + n));
}

/// Chunk encryptions plus chunk decryptions performed on this thread.
pub fn chunk_ops() -> u64 {
    CHUNK_OPS.with(Cell::get)
}

pub fn reset() {
    CHUNK_OPS.with(|c| c.set(0));
}
