//! Named, indexable random substreams.
//!
//! Every random draw in the crate comes from a ChaCha8 generator keyed by a
//! root seed and selected by a stream id derived from a stage name (and an
//! optional chunk index). Adding a new stage never shifts the draws of an
//! existing one, and chunked work produces the same numbers no matter how
//! many threads process the chunks.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Root of a family of deterministic substreams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedTree {
    root: u64,
}

impl SeedTree {
    pub fn new(root: u64) -> Self {
        Self { root }
    }

    pub fn root(&self) -> u64 {
        self.root
    }

    /// Generator for the stage called `name`.
    pub fn stream(&self, name: &str) -> ChaCha8Rng {
        self.indexed(name, 0)
    }

    /// Generator for chunk `index` of stage `name`.
    pub fn indexed(&self, name: &str, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.root);
        rng.set_stream(mix(fnv1a(name.as_bytes()) ^ mix(index)));
        rng
    }

    /// A child seed for stage `name`, for APIs that take a bare `u64` seed.
    pub fn child_seed(&self, name: &str) -> u64 {
        mix(self.root ^ fnv1a(name.as_bytes()))
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0100_0000_01b3);
    }
    hash
}

// splitmix64 finalizer
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
