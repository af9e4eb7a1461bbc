//! Deterministic stream splitting.
//!
//! Every stochastic operation takes an explicit seeded stream. Streams are
//! derived from a master seed by hashing the tuple
//! `(master, source_index, stream_tag, replicate_index)` with SHA-256 and
//! using the digest as a ChaCha8 key. Length-prefixing the tag keeps the
//! encoding injective.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type Stream = ChaCha8Rng;

/// Derive an independent random stream for one (source, tag, replicate) cell.
pub fn derive_stream(master_seed: u64, source_index: u64, tag: &str, replicate: u64) -> Stream {
    let mut hasher = Sha256::new();
    hasher.update(master_seed.to_le_bytes());
    hasher.update(source_index.to_le_bytes());
    hasher.update((tag.len() as u64).to_le_bytes());
    hasher.update(tag.as_bytes());
    hasher.update(replicate.to_le_bytes());
    let digest: [u8; 32] = hasher.finalize().into();
    ChaCha8Rng::from_seed(digest)
}
