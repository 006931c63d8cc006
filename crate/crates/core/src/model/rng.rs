use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Seed for every random draw in the pipeline.
///
/// Independent work items (images, categories, retry passes) get their own
/// ChaCha stream keyed by a 64-bit label, so results never depend on the
/// order in which workers pick items up.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct RngConfig {
    pub seed: u64,
}

impl RngConfig {
    pub fn new(seed: u64) -> Self {
        RngConfig { seed }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }

    pub fn stream(&self, key: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(key);
        rng
    }

    /// Stream keyed by a (domain, item) pair.
    pub fn substream(&self, domain: u32, item: u64) -> ChaCha8Rng {
        let mut rng = self.stream(item);
        rng.set_word_pos((domain as u128) << 64);
        rng
    }
}
