//! Reproducible random streams.
//!
//! Every Monte Carlo trial draws from its own ChaCha8 stream, addressed by
//! `(seed, purpose, index)`. Results therefore never depend on how trials are
//! spread across worker threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream purposes. Distinct purposes never share a key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Purpose {
    DualBatch,
    Trials,
    OrderStats,
    Custom(u64),
}

impl Purpose {
    fn tag(self) -> u64 {
        match self {
            Purpose::DualBatch => 0x6475_616c_6261_7463,
            Purpose::Trials => 0x7472_6961_6c73_0000,
            Purpose::OrderStats => 0x6f72_6465_7273_7473,
            Purpose::Custom(t) => t ^ 0xa076_1d64_78bd_642f,
        }
    }
}

#[inline]
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes a base seed with an extra word (e.g. the user count of a sweep point).
pub fn derive_seed(seed: u64, salt: u64) -> u64 {
    let mut s = seed ^ salt.rotate_left(17);
    splitmix64(&mut s) ^ splitmix64(&mut s).rotate_left(29)
}

/// The RNG for trial `index` of the given purpose.
pub fn stream(seed: u64, purpose: Purpose, index: u64) -> ChaCha8Rng {
    let mut state = seed ^ purpose.tag();
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index);
    rng
}
