//! Seeded, reproducible random streams.
//!
//! Every stream is a ChaCha20 generator keyed from a 64-bit seed. ChaCha is
//! counter based, so a stream's output depends only on its seed and on how
//! many words have been drawn from it. Independent sub-streams are derived
//! from the seed rather than from generator state, which keeps any subset of
//! participants or trials reproducible on its own.

use rand::RngCore;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A deterministic random stream identified by its seed.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    inner: ChaCha20Rng,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            inner: ChaCha20Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Number of 32-bit words consumed so far.
    pub fn word_position(&self) -> u128 {
        self.inner.get_word_pos()
    }

    /// Stream for participant `index`: seeded with `seed ^ index`.
    pub fn participant(&self, index: u64) -> RngStream {
        RngStream::new(self.seed ^ index)
    }

    /// Stream for an arbitrary labelled purpose (trial number, table row, ...).
    ///
    /// The label is mixed into the seed so that `fork(t).participant(i)` never
    /// collides with `fork(t').participant(i')` in practice.
    pub fn fork(&self, label: u64) -> RngStream {
        let mixed = mix64(self.seed.wrapping_add(mix64(label.wrapping_add(GOLDEN_GAMMA))));
        RngStream::new(mixed)
    }

    /// Uniform draw from the open interval (0, 1).
    pub fn open01(&mut self) -> f64 {
        let bits = self.inner.next_u64() >> 11;
        (bits as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Fair coin.
    pub fn coin(&mut self) -> bool {
        self.inner.next_u32() & 1 == 1
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}
