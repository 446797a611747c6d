//! Counter-based random source for reproducible parallel trials.
//!
//! Every trial owns an independent ChaCha8 stream selected by `(seed, trial)`;
//! the word position inside that stream plays the role of the step counter.
//! Two runs that visit the same `(seed, trial, word)` triple therefore see the
//! same bits, regardless of how trials are scheduled across threads.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

const TWO_POW_53_INV: f64 = 1.0 / (1u64 << 53) as f64;

#[derive(Debug, Clone)]
pub struct TrialRng {
    inner: ChaCha8Rng,
    bits: u64,
    bits_left: u32,
    half: u32,
    has_half: bool,
}

impl TrialRng {
    pub fn new(seed: u64, trial: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(trial);
        Self {
            inner,
            bits: 0,
            bits_left: 0,
            half: 0,
            has_half: false,
        }
    }

    /// Positions the generator at an absolute 32-bit word offset of its stream.
    pub fn at_word(seed: u64, trial: u64, word: u128) -> Self {
        let mut rng = Self::new(seed, trial);
        rng.inner.set_word_pos(word);
        rng
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    #[inline]
    pub fn next_u32(&mut self) -> u32 {
        if self.has_half {
            self.has_half = false;
            self.half
        } else {
            let w = self.inner.next_u64();
            self.half = (w >> 32) as u32;
            self.has_half = true;
            w as u32
        }
    }

    /// Uniform on [0, 1) with 53 random bits.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.inner.next_u64() >> 11) as f64 * TWO_POW_53_INV
    }

    /// Uniform on the open interval (0, 1).
    #[inline]
    pub fn next_open01(&mut self) -> f64 {
        ((self.inner.next_u64() >> 11) as f64 + 0.5) * TWO_POW_53_INV
    }

    #[inline]
    pub fn next_bit(&mut self) -> u8 {
        if self.bits_left == 0 {
            self.bits = self.inner.next_u64();
            self.bits_left = 64;
        }
        let b = (self.bits >> 63) as u8;
        self.bits <<= 1;
        self.bits_left -= 1;
        b
    }

    /// Uniform digit in `0..base`. Bias is below `base / 2^32`.
    #[inline]
    pub fn next_below(&mut self, base: u32) -> u32 {
        if base == 2 {
            return self.next_bit() as u32;
        }
        ((self.next_u32() as u64 * base as u64) >> 32) as u32
    }
}
