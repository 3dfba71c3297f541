//! Named RNG streams derived from one master seed.
//!
//! Every stochastic subsystem (buildings, fading, starts, exploration,
//! initialization, replay sampling) owns a stream keyed by a label, so that
//! changing how one subsystem consumes randomness never perturbs another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type SimRng = ChaCha8Rng;

pub const BUILDINGS: &str = "buildings";
pub const FADING: &str = "fading";
pub const STARTS: &str = "starts";
pub const EXPLORATION: &str = "exploration";
pub const INIT: &str = "init";
pub const REPLAY: &str = "replay";
pub const TOPMAP: &str = "topmap";
pub const EVAL: &str = "eval";

/// 64-bit seed for `label` under `master`.
pub fn stream_seed(master: u64, label: &str, index: u64) -> u64 {
    let mut h = Sha256::new();
    h.update(master.to_le_bytes());
    h.update((label.len() as u64).to_le_bytes());
    h.update(label.as_bytes());
    h.update(index.to_le_bytes());
    let digest = h.finalize();
    let mut word = [0u8; 8];
    word.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(word)
}

pub fn stream(master: u64, label: &str) -> SimRng {
    SimRng::seed_from_u64(stream_seed(master, label, 0))
}

/// Stream for one parallel work unit, e.g. a TOP-map cell.
pub fn indexed_stream(master: u64, label: &str, index: u64) -> SimRng {
    SimRng::seed_from_u64(stream_seed(master, label, index))
}
