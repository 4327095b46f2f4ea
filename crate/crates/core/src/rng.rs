//! Seed derivation: one master seed fans out into independent named streams.
//!
//! Every consumer of randomness (dataset generation, partitioning, cohort
//! sampling, per-client batch shuffles, probes, trials) asks for a stream
//! keyed by a domain tag plus integer indices such as client id and round.
//! The key is mixed with SplitMix64 into a 256-bit ChaCha8 seed, so streams
//! with different keys are decorrelated and a given key always yields the
//! same sequence, independent of platform and thread schedule.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// FNV-1a 64-bit hash; used for domain separation and config fingerprints.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Deterministic RNG for the stream identified by `(master, domain, indices)`.
pub fn stream(master: u64, domain: &str, indices: &[u64]) -> ChaCha8Rng {
    let mut state = master ^ fnv1a(domain.as_bytes());
    state ^= (indices.len() as u64).wrapping_mul(0xa076_1d64_78bd_642f);
    for &ix in indices {
        splitmix64(&mut state);
        state ^= ix.wrapping_mul(0xd6e8_feb8_6659_fd93);
    }
    let mut seed = [0u8; 32];
    for chunk in seed.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    ChaCha8Rng::from_seed(seed)
}

/// A single derived `u64`, for components that key their own streams.
pub fn sub_seed(master: u64, domain: &str) -> u64 {
    let mut state = master ^ fnv1a(domain.as_bytes());
    splitmix64(&mut state)
}
