//! Bloom filters over a keyed SipHash family.
//!
//! Index `t` of an item is `SipHash-2-4(k_t, item) mod β`, with the per-index
//! key `k_t` derived as the 128-bit SipHash of `t` (8 bytes, little endian)
//! under the master key.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use siphasher::sip::SipHasher24;
use siphasher::sip128::SipHasher24 as SipHasher128;
use thiserror::Error;

pub const MAX_KAPPA: u32 = 64;
const MAGIC: &[u8; 5] = b"OBFW1";
/// False-positive base at the optimal `κ`.
const OPTIMAL_FP_BASE: f64 = 0.6185;

#[derive(Debug, Error)]
pub enum BloomError {
    #[error("bad parameters: {0}")]
    BadParams(String),
    #[error("bad filter file: {0}")]
    BadFormat(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BloomParams {
    /// Filter length in bits.
    pub beta: u64,
    /// Number of hash functions.
    pub kappa: u32,
    /// Expected number of elements.
    pub eta: u64,
    pub target_fp: f64,
}

impl BloomParams {
    /// Explicit parameters; `target_fp` is set to the estimate.
    pub fn new(beta: u64, kappa: u32, eta: u64) -> Result<Self, BloomError> {
        if kappa == 0 || kappa > MAX_KAPPA {
            return Err(BloomError::BadParams(format!("κ = {kappa} outside 1..={MAX_KAPPA}")));
        }
        if beta < kappa as u64 {
            return Err(BloomError::BadParams(format!("β = {beta} below κ = {kappa}")));
        }
        let mut p = BloomParams { beta, kappa, eta, target_fp: 0.0 };
        p.target_fp = p.fp_estimate();
        Ok(p)
    }

    /// Expected fraction of bits still 0 after `η` inserts.
    pub fn zero_fraction(&self) -> f64 {
        (-(self.kappa as f64) * self.eta as f64 / self.beta as f64).exp()
    }

    /// `(1 − e^{−κη/β})^κ`.
    pub fn fp_estimate(&self) -> f64 {
        (1.0 - self.zero_fraction()).powi(self.kappa as i32)
    }
}

/// Size a filter for `eta` elements at false-positive rate `target_fp`.
pub fn derive_params(eta: u64, target_fp: f64) -> Result<BloomParams, BloomError> {
    if eta == 0 {
        return Err(BloomError::BadParams("η must be at least 1".into()));
    }
    if !(target_fp > 0.0 && target_fp < 1.0) {
        return Err(BloomError::BadParams(format!("target false-positive rate {target_fp} outside (0, 1)")));
    }
    let beta = (eta as f64 * target_fp.ln() / OPTIMAL_FP_BASE.ln()).ceil() as u64;
    let kappa = ((beta as f64 / eta as f64) * std::f64::consts::LN_2).round().clamp(1.0, MAX_KAPPA as f64) as u32;
    let beta = beta.max(kappa as u64);
    Ok(BloomParams { beta, kappa, eta, target_fp })
}

/// Maps an item to its `κ` filter positions.
pub trait Indexer {
    fn kappa(&self) -> u32;
    fn indices(&self, item: &[u8], beta: u64) -> Vec<u64>;
}

/// `κ` SipHash-2-4 instances keyed from one master key.
#[derive(Debug, Clone)]
pub struct HashFamily {
    master: [u8; 16],
    hashers: Vec<SipHasher24>,
}

impl HashFamily {
    pub fn new(master: [u8; 16], kappa: u32) -> Self {
        let root = SipHasher128::new_with_key(&master);
        let hashers = (0..kappa as u64)
            .map(|t| SipHasher24::new_with_key(&root.hash(&t.to_le_bytes()).as_bytes()))
            .collect();
        HashFamily { master, hashers }
    }

    pub fn master_key(&self) -> [u8; 16] {
        self.master
    }

    /// The raw 64-bit hash of `item` under key `t`.
    pub fn hash(&self, t: usize, item: &[u8]) -> u64 {
        self.hashers[t].hash(item)
    }
}

impl Indexer for HashFamily {
    fn kappa(&self) -> u32 {
        self.hashers.len() as u32
    }

    fn indices(&self, item: &[u8], beta: u64) -> Vec<u64> {
        self.hashers.iter().map(|h| h.hash(item) % beta).collect()
    }
}

/// Fixed positions per item, for reproducing hand-worked examples.
#[derive(Debug, Clone, Default)]
pub struct TableIndexer {
    pub kappa: u32,
    pub table: Vec<(Vec<u8>, Vec<u64>)>,
}

impl Indexer for TableIndexer {
    fn kappa(&self) -> u32 {
        self.kappa
    }

    fn indices(&self, item: &[u8], beta: u64) -> Vec<u64> {
        let (_, idx) = self.table.iter().find(|(k, _)| k == item).expect("item listed in table");
        idx.iter().map(|i| i % beta).collect()
    }
}

#[derive(Debug, Clone)]
pub struct BloomFilter<I = HashFamily> {
    params: BloomParams,
    indexer: I,
    /// Bit `i` is `bits[i / 8] >> (i % 8) & 1`.
    bits: Vec<u8>,
}

impl BloomFilter<HashFamily> {
    pub fn new(params: BloomParams, master: [u8; 16]) -> Self {
        BloomFilter::with_indexer(params, HashFamily::new(master, params.kappa))
    }

    pub fn master_key(&self) -> [u8; 16] {
        self.indexer.master_key()
    }

    /// Layout: `OBFW1`, β (u64 LE), κ (u16 LE), master key (16 bytes), bits
    /// packed least significant first.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<(), BloomError> {
        w.write_all(MAGIC)?;
        w.write_all(&self.params.beta.to_le_bytes())?;
        w.write_all(&(self.params.kappa as u16).to_le_bytes())?;
        w.write_all(&self.indexer.master_key())?;
        w.write_all(&self.bits)?;
        Ok(())
    }

    /// Reads a filter written by [`BloomFilter::write_to`]. The stored file
    /// carries no `η`, so it is taken from `eta`.
    pub fn read_from<R: Read>(mut r: R, eta: u64) -> Result<Self, BloomError> {
        let mut magic = [0u8; 5];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(BloomError::BadFormat("wrong magic".into()));
        }
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b8)?;
        let beta = u64::from_le_bytes(b8);
        let mut b2 = [0u8; 2];
        r.read_exact(&mut b2)?;
        let kappa = u16::from_le_bytes(b2) as u32;
        let mut key = [0u8; 16];
        r.read_exact(&mut key)?;
        let params = BloomParams::new(beta, kappa, eta).map_err(|e| BloomError::BadFormat(e.to_string()))?;
        let mut bits = Vec::new();
        r.read_to_end(&mut bits)?;
        if bits.len() as u64 != beta.div_ceil(8) {
            return Err(BloomError::BadFormat(format!("{} bytes of bits for β = {beta}", bits.len())));
        }
        Ok(BloomFilter { params, indexer: HashFamily::new(key, kappa), bits })
    }
}

impl<I: Indexer> BloomFilter<I> {
    pub fn with_indexer(params: BloomParams, indexer: I) -> Self {
        assert_eq!(indexer.kappa(), params.kappa, "indexer and parameters disagree on κ");
        BloomFilter { params, indexer, bits: vec![0; params.beta.div_ceil(8) as usize] }
    }

    pub fn params(&self) -> &BloomParams {
        &self.params
    }

    pub fn indexer(&self) -> &I {
        &self.indexer
    }

    pub fn indices(&self, item: &[u8]) -> Vec<u64> {
        self.indexer.indices(item, self.params.beta)
    }

    pub fn bit(&self, i: u64) -> bool {
        self.bits[(i / 8) as usize] >> (i % 8) & 1 == 1
    }

    pub fn set_bit(&mut self, i: u64) {
        self.bits[(i / 8) as usize] |= 1 << (i % 8);
    }

    pub fn insert(&mut self, item: &[u8]) {
        for i in self.indices(item) {
            self.set_bit(i);
        }
    }

    pub fn query(&self, item: &[u8]) -> bool {
        self.indices(item).into_iter().all(|i| self.bit(i))
    }

    /// Every bit, index 0 first.
    pub fn bits(&self) -> Vec<bool> {
        (0..self.params.beta).map(|i| self.bit(i)).collect()
    }

    pub fn count_ones(&self) -> u64 {
        self.bits.iter().map(|b| b.count_ones() as u64).sum()
    }

    pub fn fill_ratio(&self) -> f64 {
        self.count_ones() as f64 / self.params.beta as f64
    }
}
