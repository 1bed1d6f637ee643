//! Secure comparison of `a ≥ b`.
//!
//! Every variant rests on the same reduction: with `α = 2a + 1` and
//! `β = 2b`, let `h` flag the most significant bit where they differ. Then
//! `α` and `α ⊕ h` differ in popcount by exactly one, and the sign of that
//! difference is the comparison result.
//!
//! Bit vectors have `ℓ + 1` entries with index 0 the least significant.

mod malicious;
mod run;
mod shared;
mod taps;
mod two_party;

use thiserror::Error;

use crate::field::{next_prime, Field, FieldError};
use crate::net::{ceil_log2, ProtocolError};
use crate::sharing::SharingError;

pub use malicious::{mult_fanin, sc_malicious, shamir_xor};
pub use run::{run_malicious, run_shared_inputs, run_two_party, share_bits_additive, share_bits_shamir, ComparisonRun};
pub use shared::sc_shared_inputs;
pub use taps::{TapKind, Taps};
pub use two_party::{sc_low_rounds, sc_semi_honest, Role, Variant};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CompareError {
    #[error("{value} does not fit in {ell} bits")]
    DomainOverflow { value: u128, ell: u32 },
    #[error("bad parameters: {0}")]
    BadParams(String),
    #[error("helper found {0} zero entries in the masked vector")]
    NoUniqueZero(usize),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Sharing(#[from] SharingError),
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// Public parameters: bit width `ℓ`, the output field `N` (smallest prime
/// above `2^ℓ`) and the prefix-sum field `N₂`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ComparisonParams {
    pub ell: u32,
    pub n: Field,
    pub n2: Field,
}

impl ComparisonParams {
    pub fn new(ell: u32) -> Result<Self, CompareError> {
        if !(2..=125).contains(&ell) {
            return Err(CompareError::BadParams(format!("ℓ = {ell} outside 2..=125")));
        }
        let n2 = select_n2(ell);
        // γ_i − 1 ranges over [−1, 2ℓ] and must vanish only where it is 0.
        if n2 <= 2 * ell as u128 {
            return Err(CompareError::BadParams(format!("N₂ = {n2} cannot separate values up to {}", 2 * ell)));
        }
        Ok(ComparisonParams { ell, n: Field::new(next_prime(1 << ell))?, n2: Field::new(n2)? })
    }

    /// Vector length `ℓ + 1`.
    pub fn len(&self) -> usize {
        self.ell as usize + 1
    }

    pub fn check_input(&self, x: u128) -> Result<(), CompareError> {
        if x >> self.ell != 0 {
            return Err(CompareError::DomainOverflow { value: x, ell: self.ell });
        }
        Ok(())
    }
}

/// Smallest prime strictly between `2^{⌈log₂ℓ⌉+1}` and `2^{⌈log₂ℓ⌉+2}`.
pub fn select_n2(ell: u32) -> u128 {
    let lo = 1u128 << (ceil_log2(ell as u64) + 1);
    next_prime(lo)
}

/// Little-endian bits `x_0..x_{len-1}`.
pub fn to_bits(x: u128, len: usize) -> Vec<u8> {
    (0..len).map(|i| ((x >> i) & 1) as u8).collect()
}

pub fn from_bits(bits: &[u8]) -> u128 {
    bits.iter().enumerate().fold(0, |acc, (i, &b)| acc | ((b as u128 & 1) << i))
}

/// Intermediate values of the reduction, computed in the clear.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Claim1 {
    pub alpha: Vec<u8>,
    pub beta: Vec<u8>,
    pub h: Vec<u8>,
    pub s_alpha: u32,
    pub s_alpha_prime: u32,
    pub f: bool,
}

/// Plaintext evaluation of the reduction.
pub fn claim1_trace(a: u128, b: u128, ell: u32) -> Result<Claim1, CompareError> {
    for x in [a, b] {
        if ell >= 127 || x >> ell != 0 {
            return Err(CompareError::DomainOverflow { value: x, ell });
        }
    }
    let len = ell as usize + 1;
    let alpha = to_bits(2 * a + 1, len);
    let beta = to_bits(2 * b, len);
    let i = (0..len).rev().find(|&i| alpha[i] != beta[i]).expect("α is odd and β even");
    let mut h = vec![0u8; len];
    h[i] = 1;
    let s_alpha: u32 = alpha.iter().map(|&x| x as u32).sum();
    let s_alpha_prime: u32 = alpha.iter().zip(&h).map(|(&x, &y)| (x ^ y) as u32).sum();
    let f = (s_alpha as i64 - s_alpha_prime as i64 + 1) / 2 == 1;
    Ok(Claim1 { alpha, beta, h, s_alpha, s_alpha_prime, f })
}

pub fn claim1_oracle(a: u128, b: u128, ell: u32) -> Result<bool, CompareError> {
    Ok(claim1_trace(a, b, ell)?.f)
}

/// Right rotation: entry `i` moves to `(i + π) mod len`.
pub fn circular_shift<T: Clone>(v: &[T], pi: usize) -> Vec<T> {
    let mut out = v.to_vec();
    if !v.is_empty() {
        out.rotate_right(pi % v.len());
    }
    out
}

pub fn circular_unshift<T: Clone>(v: &[T], pi: usize) -> Vec<T> {
    let mut out = v.to_vec();
    if !v.is_empty() {
        out.rotate_left(pi % v.len());
    }
    out
}

/// Options shared by the comparison protocols.
#[derive(Clone, Default)]
pub struct ScOptions {
    /// Fix the rotation instead of drawing it.
    pub forced_shift: Option<usize>,
    /// Plaintext taps for tests; recorded only in debug builds.
    pub taps: Option<Taps>,
}

impl ScOptions {
    pub(crate) fn tap(&self, name: &'static str, kind: TapKind, modulus: u128, party: u8, values: Vec<u128>) {
        if let Some(t) = &self.taps {
            t.record(name, kind, modulus, party, values);
        }
    }
}
