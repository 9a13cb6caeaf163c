//! Deterministic RNG stream derivation.
//!
//! Every simulation unit (a start node, a tree sample, a dynamic round of a
//! walk) draws from its own PCG stream derived from `(seed, tag, a, b)` by a
//! SplitMix64 hash chain. Results are therefore independent of how work is
//! partitioned over threads: the same `(seed, config)` always produces the
//! same numbers, at any thread count.

use rand_pcg::Pcg64Mcg;

/// Domain separation tags for the derivation below.
pub mod tag {
    pub const WALK: u64 = 0x57414c4b;
    pub const SUBSET: u64 = 0x53554253;
    pub const TREE: u64 = 0x54524545;
    pub const PHI: u64 = 0x50484953;
    pub const DYNAMIC: u64 = 0x44594e41;
    pub const SPECTRAL: u64 = 0x53504543;
    pub const SYNTH: u64 = 0x53594e54;
}

/// SplitMix64 step.
#[inline]
pub fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive an independent 128-bit PCG stream for `(seed, tag, a, b)`.
pub fn stream(seed: u64, tag: u64, a: u64, b: u64) -> Pcg64Mcg {
    let mut s = seed ^ 0xa076_1d64_78bd_642f;
    let mut mix = splitmix64(&mut s) ^ tag;
    let h1 = splitmix64(&mut mix);
    let mut mix2 = h1 ^ a;
    let h2 = splitmix64(&mut mix2);
    let mut mix3 = h2 ^ b;
    let lo = splitmix64(&mut mix3);
    let hi = splitmix64(&mut mix3);
    // MCG state must be odd.
    Pcg64Mcg::new((((hi as u128) << 64) | lo as u128) | 1)
}
