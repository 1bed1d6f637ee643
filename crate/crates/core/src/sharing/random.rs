use std::collections::VecDeque;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};

use crate::field::{Fe, Field};

/// Source of the random choices a party makes.
///
/// Implemented for every [`RngCore`], and by [`Scripted`] which replays a
/// fixed list of values so worked examples can be reproduced exactly.
pub trait Randomness {
    fn element(&mut self, field: Field) -> Fe;
    fn nonzero(&mut self, field: Field) -> Fe;
    /// Uniform integer in `[0, bound)`.
    fn below(&mut self, bound: u64) -> u64;

    fn bit(&mut self) -> u8 {
        self.below(2) as u8
    }
}

impl<R: RngCore + ?Sized> Randomness for R {
    fn element(&mut self, field: Field) -> Fe {
        field.random(self)
    }

    fn nonzero(&mut self, field: Field) -> Fe {
        field.random_nonzero(self)
    }

    fn below(&mut self, bound: u64) -> u64 {
        self.gen_range(0..bound)
    }
}

/// Replays predetermined values in order. Panics when exhausted, since a
/// script that runs short means the test drew more randomness than it set
/// up.
#[derive(Debug, Clone, Default)]
pub struct Scripted {
    values: VecDeque<u128>,
}

impl Scripted {
    pub fn new(values: impl IntoIterator<Item = u128>) -> Self {
        Scripted { values: values.into_iter().collect() }
    }

    pub fn remaining(&self) -> usize {
        self.values.len()
    }

    fn next(&mut self) -> u128 {
        self.values.pop_front().expect("scripted randomness exhausted")
    }
}

impl Randomness for Scripted {
    fn element(&mut self, field: Field) -> Fe {
        field.elem(self.next())
    }

    fn nonzero(&mut self, field: Field) -> Fe {
        let v = field.elem(self.next());
        assert!(!v.is_zero(), "scripted nonzero value is zero");
        v
    }

    fn below(&mut self, bound: u64) -> u64 {
        let v = self.next();
        assert!(v < bound as u128, "scripted value {v} not below {bound}");
        v as u64
    }
}

/// Seeded ChaCha20 stream. Identical seeds give identical streams.
#[derive(Debug, Clone)]
pub struct RandomSource {
    seed: [u8; 32],
    rng: ChaCha20Rng,
}

impl RandomSource {
    pub fn from_seed(seed: [u8; 32]) -> Self {
        RandomSource { seed, rng: ChaCha20Rng::from_seed(seed) }
    }

    pub fn from_u64(seed: u64) -> Self {
        let mut s = [0u8; 32];
        s[..8].copy_from_slice(&seed.to_le_bytes());
        Self::from_seed(s)
    }

    /// Fresh seed from the operating system.
    pub fn from_entropy() -> Self {
        let mut s = [0u8; 32];
        rand::rngs::OsRng.fill_bytes(&mut s);
        Self::from_seed(s)
    }

    pub fn seed(&self) -> [u8; 32] {
        self.seed
    }

    /// Number of 32-bit words consumed so far.
    pub fn counter(&self) -> u128 {
        self.rng.get_word_pos()
    }

    /// An independent stream labelled by `label`, e.g. one per party.
    pub fn derive(&self, label: &[u8]) -> RandomSource {
        let mut h = Sha256::new();
        h.update(self.seed);
        h.update(label);
        Self::from_seed(h.finalize().into())
    }

    pub fn for_party(&self, party: u8) -> RandomSource {
        self.derive(&[b'p', party])
    }
}

impl RngCore for RandomSource {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.rng.fill_bytes(dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), rand::Error> {
        self.rng.try_fill_bytes(dest)
    }
}
