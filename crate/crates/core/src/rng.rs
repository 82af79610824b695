//! Seeded random streams.
//!
//! Every stochastic operation takes an [`RngStream`], a `(seed, stream_id)`
//! pair backed by ChaCha8. ChaCha is counter based: `set_stream` selects one
//! of 2^64 non-overlapping keystreams for the same key, so replicate `i`
//! of an experiment gets stream `i` of the experiment seed and the draw
//! sequence does not depend on the platform, the thread count or the order in
//! which replicates are scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        RngStream { seed, stream_id }
    }

    /// Generator positioned at the start of this stream.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }

    /// Stream `index` under a key derived from this stream.
    ///
    /// Used to give sub-tasks (suite sampling, per-run phases, nested
    /// replicates) their own families of streams.
    pub fn child(&self, domain: u64, index: u64) -> RngStream {
        let key = splitmix64(self.seed ^ splitmix64(self.stream_id ^ splitmix64(domain)));
        RngStream::new(key, index)
    }
}

/// SplitMix64 finalizer.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn draws(s: RngStream) -> Vec<u64> {
        let mut r = s.rng();
        (0..8).map(|_| r.random()).collect()
    }

    #[test]
    fn same_stream_same_draws() {
        assert_eq!(draws(RngStream::new(7, 3)), draws(RngStream::new(7, 3)));
    }

    #[test]
    fn streams_and_seeds_differ() {
        let base = draws(RngStream::new(7, 3));
        assert_ne!(base, draws(RngStream::new(7, 4)));
        assert_ne!(base, draws(RngStream::new(8, 3)));
        let s = RngStream::new(7, 3);
        assert_ne!(draws(s.child(1, 0)), draws(s.child(2, 0)));
        assert_ne!(draws(s.child(1, 0)), draws(s.child(1, 1)));
    }

    #[test]
    fn pinned_first_draw() {
        // Guards against silent changes in the generator or its seeding.
        let mut r = RngStream::new(42, 0).rng();
        let first: u64 = r.random();
        assert_eq!(first, 0xAE90_BFB5_395D_5BA1);
        assert_eq!(RngStream::new(42, 5).rng().random::<u64>(), 0x5A4C_B496_8C34_03E3);
        assert_eq!(splitmix64(0), 0xE220_A839_7B1D_CDAF);
    }
}
