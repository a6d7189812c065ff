use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Counter-based seed derivation: the child seed is a pure function of
/// `(master_seed, stream_id)`. Monte Carlo replicate `r` uses `stream_id = r`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedSpec {
    pub master_seed: u64,
    pub stream_id: u64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl SeedSpec {
    pub fn new(master_seed: u64, stream_id: u64) -> Self {
        Self {
            master_seed,
            stream_id,
        }
    }

    pub fn child_seed(&self) -> u64 {
        splitmix64(
            splitmix64(self.master_seed)
                ^ splitmix64(self.stream_id.wrapping_add(0xD1B5_4A32_D192_ED03)),
        )
    }

    /// A fresh generator for this stream.
    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.child_seed())
    }

    /// Derives an independent sub-stream, e.g. one per replicate of a sweep.
    pub fn substream(&self, id: u64) -> SeedSpec {
        SeedSpec::new(self.child_seed(), id)
    }
}
