//! Seeded random streams.
//!
//! Every random draw in the crate comes from a generator obtained through
//! [`derive_rng_stream`]. A stream is a pure function of
//! `(master_seed, label, index)`: the triple is hashed with SHA-256 and the
//! digest keys a ChaCha8 generator. Work split across threads uses one
//! stream per unit of work, so results never depend on the thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type StreamRng = ChaCha8Rng;

pub fn derive_rng_stream(master_seed: u64, label: &str, index: u64) -> StreamRng {
    let mut hasher = Sha256::new();
    hasher.update(b"normshift/stream/v1");
    hasher.update(master_seed.to_le_bytes());
    hasher.update((label.len() as u64).to_le_bytes());
    hasher.update(label.as_bytes());
    hasher.update(index.to_le_bytes());
    let digest = hasher.finalize();
    let mut seed = [0u8; 32];
    seed.copy_from_slice(&digest);
    ChaCha8Rng::from_seed(seed)
}
