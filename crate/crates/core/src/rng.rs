//! Counter-based random streams.
//!
//! A trial seed and a stream id pick a ChaCha8 keystream; the `n`-th draw on
//! that stream always sits at the same word offset, because every draw
//! consumes exactly [`WORDS_PER_DRAW`] 32-bit words. The draw for
//! `(seed, action, pull index)` therefore never depends on how other
//! streams were consumed or on thread scheduling.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

/// Two `u64` per draw.
pub const WORDS_PER_DRAW: u128 = 4;

/// Stream used by policies for their own randomness (tie breaks, uniform play).
pub const POLICY_STREAM: u64 = 1 << 40;

#[derive(Debug, Clone)]
pub struct CounterRng {
    inner: ChaCha8Rng,
}

impl CounterRng {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self { inner }
    }

    /// Positions the stream at draw `index`.
    pub fn at(seed: u64, stream: u64, index: u64) -> Self {
        let mut rng = Self::new(seed, stream);
        rng.inner.set_word_pos(u128::from(index) * WORDS_PER_DRAW);
        rng
    }

    /// Index of the next draw.
    pub fn draw_index(&self) -> u64 {
        (self.inner.get_word_pos() / WORDS_PER_DRAW) as u64
    }

    /// One draw: two raw words.
    pub fn next_pair(&mut self) -> (u64, u64) {
        (self.inner.next_u64(), self.inner.next_u64())
    }

    /// One draw mapped to two uniforms in `[0, 1)`.
    pub fn uniform_pair(&mut self) -> (f64, f64) {
        let (a, b) = self.next_pair();
        (to_unit(a), to_unit(b))
    }
}

fn to_unit(x: u64) -> f64 {
    (x >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}
