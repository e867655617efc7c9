//! Seeded substreams. One master seed fans out to independent ChaCha streams
//! named by purpose and an index, so stages can be replayed in isolation.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use sha2::{Digest, Sha256};

pub type StreamRng = ChaCha12Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Users,
    AccessFading,
    BackhaulFading,
    Baselines,
    Misc,
}

impl Stream {
    fn tag(self) -> &'static str {
        match self {
            Stream::Users => "users",
            Stream::AccessFading => "access-fading",
            Stream::BackhaulFading => "backhaul-fading",
            Stream::Baselines => "baselines",
            Stream::Misc => "misc",
        }
    }
}

/// Derives the RNG for `(seed, stream, index)`. Different indices give
/// statistically independent streams (the key is a SHA-256 digest).
pub fn substream(seed: u64, stream: Stream, index: u64) -> StreamRng {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(stream.tag().as_bytes());
    h.update(index.to_le_bytes());
    let digest = h.finalize();
    let mut key = [0u8; 32];
    key.copy_from_slice(&digest);
    ChaCha12Rng::from_seed(key)
}
