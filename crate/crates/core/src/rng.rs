//! Named, order-independent random streams.
//!
//! Every draw in the crate comes from a ChaCha stream keyed by
//! `(seed, label)` and selected by `index`, so the realization of trajectory
//! `i` never depends on how many workers ran or in which order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamKey<'a> {
    pub seed: u64,
    pub label: &'a str,
    pub index: u64,
}

impl<'a> StreamKey<'a> {
    pub fn new(seed: u64, label: &'a str, index: u64) -> Self {
        Self { seed, label, index }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut hasher = Sha256::new();
        hasher.update(self.seed.to_le_bytes());
        hasher.update((self.label.len() as u64).to_le_bytes());
        hasher.update(self.label.as_bytes());
        let key: [u8; 32] = hasher.finalize().into();
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(self.index);
        rng
    }

    /// A 64-bit seed for a nested consumer (e.g. one ensemble realization).
    pub fn derive_seed(&self) -> u64 {
        let mut hasher = Sha256::new();
        hasher.update(b"derive");
        hasher.update(self.seed.to_le_bytes());
        hasher.update(self.label.as_bytes());
        hasher.update(self.index.to_le_bytes());
        let digest = hasher.finalize();
        u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
    }
}
