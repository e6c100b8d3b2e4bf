//! Seeded, counter-based random streams.
//!
//! Every stochastic component takes an explicit [`Stream`]. Sub-streams are
//! derived from a parent seed and a list of integer tags, so a given
//! `(seed, tags)` pair always yields the same sequence irrespective of the
//! order in which other streams were consumed.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

pub type Stream = ChaCha12Rng;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a base seed with a tag path into a new 64-bit seed.
pub fn derive_seed(base: u64, tags: &[u64]) -> u64 {
    let mut h = splitmix(base ^ 0x5EED_0F_A11);
    for &t in tags {
        h = splitmix(h ^ splitmix(t.wrapping_add(0xA5A5_A5A5)));
    }
    h
}

/// A stream keyed by `(base, tags)`.
pub fn stream(base: u64, tags: &[u64]) -> Stream {
    let s = derive_seed(base, tags);
    let mut key = [0u8; 32];
    for (i, chunk) in key.chunks_mut(8).enumerate() {
        chunk.copy_from_slice(&splitmix(s.wrapping_add(i as u64)).to_le_bytes());
    }
    ChaCha12Rng::from_seed(key)
}
