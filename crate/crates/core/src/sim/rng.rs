//! Counter-based random numbers.
//!
//! The `n`-th output of a SplitMix64 generator seeded with `s` is
//! `mix64(s + n * GOLDEN_GAMMA)`, so any element of a stream can be computed
//! directly from `(key, n)`. Each link gets its own key derived from the run
//! seed and the link identity; the counter is the link's occurrence index.
//! Outcomes therefore do not depend on the order the simulator visits links.

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 output finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Random-access SplitMix64 stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CounterRng {
    key: u64,
}

impl CounterRng {
    pub fn new(seed: u64, stream: u64) -> Self {
        CounterRng {
            key: mix64(seed ^ mix64(stream.wrapping_add(GOLDEN_GAMMA))),
        }
    }

    pub fn u64_at(&self, counter: u64) -> u64 {
        mix64(
            self.key
                .wrapping_add(counter.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)),
        )
    }

    /// Uniform in `[0, 1)` with 53 bits of precision; `draw` selects one of
    /// several independent values for the same occurrence.
    pub fn uniform(&self, occurrence: u64, draw: u8) -> f64 {
        let counter = occurrence.wrapping_mul(4).wrapping_add(draw as u64);
        (self.u64_at(counter) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}
