//! Arithmetic modulo a prime `p < 2^127`.
//!
//! A [`Field`] is a validated modulus handle; [`Fe`] is a residue that
//! carries its field so mixed-modulus arithmetic is caught early.

mod linalg;
mod poly;

use std::fmt;
use std::ops::{Add, AddAssign, Mul, MulAssign, Neg, Sub, SubAssign};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use linalg::{berlekamp_welch, invert_matrix, vandermonde_reduction_row, Decoding};
pub use poly::{
    detect_degree, interpolate, lagrange_zero_coefficients, DegreeCheck, EvalPoint, Polynomial,
};

const MILLER_RABIN_ROUNDS: usize = 40;
const MAX_MODULUS_BITS: u32 = 127;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FieldError {
    #[error("{0} is not prime")]
    NotPrime(u128),
    #[error("modulus must be below 2^127")]
    ModulusTooLarge,
    #[error("zero has no multiplicative inverse")]
    ZeroInverse,
    #[error("duplicate evaluation index {0}")]
    DuplicateIndex(u128),
    #[error("evaluation index 0 is reserved for the secret")]
    ZeroIndex,
    #[error("need at least {needed} points, got {got}")]
    InsufficientPoints { needed: usize, got: usize },
    #[error("matrix is singular")]
    SingularMatrix,
    #[error("elements belong to different fields ({0} vs {1})")]
    ModulusMismatch(u128, u128),
    #[error("bad parameters: {0}")]
    BadParams(String),
}

/// A prime modulus.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u128", into = "u128")]
pub struct Field {
    p: u128,
}

impl fmt::Debug for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "F{}", self.p)
    }
}

impl TryFrom<u128> for Field {
    type Error = FieldError;
    fn try_from(p: u128) -> Result<Self, FieldError> {
        Field::new(p)
    }
}

impl From<Field> for u128 {
    fn from(f: Field) -> u128 {
        f.p
    }
}

impl Field {
    pub fn new(p: u128) -> Result<Self, FieldError> {
        if p >> MAX_MODULUS_BITS != 0 {
            return Err(FieldError::ModulusTooLarge);
        }
        if !is_prime(p) {
            return Err(FieldError::NotPrime(p));
        }
        Ok(Field { p })
    }

    pub fn modulus(&self) -> u128 {
        self.p
    }

    /// Number of bits needed to write any residue.
    pub fn bits(&self) -> u32 {
        bit_length(self.p - 1)
    }

    pub fn elem(&self, v: u128) -> Fe {
        Fe { v: v % self.p, f: *self }
    }

    pub fn from_i128(&self, v: i128) -> Fe {
        let r = v.rem_euclid(self.p as i128) as u128;
        Fe { v: r, f: *self }
    }

    pub fn zero(&self) -> Fe {
        Fe { v: 0, f: *self }
    }

    pub fn one(&self) -> Fe {
        self.elem(1)
    }

    pub fn elems(&self, vs: &[u128]) -> Vec<Fe> {
        vs.iter().map(|&v| self.elem(v)).collect()
    }

    /// Uniform residue.
    pub fn random<R: Rng + ?Sized>(&self, rng: &mut R) -> Fe {
        Fe { v: rng.gen_range(0..self.p), f: *self }
    }

    /// Uniform nonzero residue.
    pub fn random_nonzero<R: Rng + ?Sized>(&self, rng: &mut R) -> Fe {
        Fe { v: rng.gen_range(1..self.p), f: *self }
    }

    fn add_raw(&self, a: u128, b: u128) -> u128 {
        // a, b < p < 2^127, so the sum cannot overflow.
        let s = a + b;
        if s >= self.p {
            s - self.p
        } else {
            s
        }
    }

    fn sub_raw(&self, a: u128, b: u128) -> u128 {
        if a >= b {
            a - b
        } else {
            self.p - (b - a)
        }
    }

    fn mul_raw(&self, a: u128, b: u128) -> u128 {
        mul_mod(a, b, self.p)
    }
}

/// A residue together with its field.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Fe {
    v: u128,
    f: Field,
}

impl fmt::Debug for Fe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.v)
    }
}

impl fmt::Display for Fe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.v)
    }
}

impl Fe {
    pub fn value(&self) -> u128 {
        self.v
    }

    pub fn field(&self) -> Field {
        self.f
    }

    pub fn is_zero(&self) -> bool {
        self.v == 0
    }

    pub fn pow(&self, mut e: u128) -> Fe {
        let mut base = self.v;
        let mut acc = 1 % self.f.p;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.f.mul_raw(acc, base);
            }
            base = self.f.mul_raw(base, base);
            e >>= 1;
        }
        Fe { v: acc, f: self.f }
    }

    pub fn inv(&self) -> Result<Fe, FieldError> {
        mod_inverse(*self)
    }

    fn check(&self, other: &Fe) {
        assert!(
            self.f == other.f,
            "field mismatch: {} vs {}",
            self.f.p,
            other.f.p
        );
    }
}

/// Multiplicative inverse by the extended Euclidean algorithm.
pub fn mod_inverse(a: Fe) -> Result<Fe, FieldError> {
    if a.v == 0 {
        return Err(FieldError::ZeroInverse);
    }
    let p = a.f.p as i128;
    let (mut r0, mut r1) = (p, a.v as i128);
    let (mut s0, mut s1) = (0i128, 1i128);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (s0, s1) = (s1, s0 - q * s1);
    }
    Ok(a.f.from_i128(s0))
}

impl Add for Fe {
    type Output = Fe;
    fn add(self, rhs: Fe) -> Fe {
        self.check(&rhs);
        Fe { v: self.f.add_raw(self.v, rhs.v), f: self.f }
    }
}

impl Sub for Fe {
    type Output = Fe;
    fn sub(self, rhs: Fe) -> Fe {
        self.check(&rhs);
        Fe { v: self.f.sub_raw(self.v, rhs.v), f: self.f }
    }
}

impl Mul for Fe {
    type Output = Fe;
    fn mul(self, rhs: Fe) -> Fe {
        self.check(&rhs);
        Fe { v: self.f.mul_raw(self.v, rhs.v), f: self.f }
    }
}

impl Neg for Fe {
    type Output = Fe;
    fn neg(self) -> Fe {
        Fe { v: self.f.sub_raw(0, self.v), f: self.f }
    }
}

impl AddAssign for Fe {
    fn add_assign(&mut self, rhs: Fe) {
        *self = *self + rhs;
    }
}

impl SubAssign for Fe {
    fn sub_assign(&mut self, rhs: Fe) {
        *self = *self - rhs;
    }
}

impl MulAssign for Fe {
    fn mul_assign(&mut self, rhs: Fe) {
        *self = *self * rhs;
    }
}

impl std::iter::Sum for Fe {
    fn sum<I: Iterator<Item = Fe>>(mut iter: I) -> Fe {
        let first = iter.next().expect("sum of an empty iterator has no field");
        iter.fold(first, |a, b| a + b)
    }
}

pub(crate) fn bit_length(v: u128) -> u32 {
    128 - v.leading_zeros()
}

fn mul_mod(a: u128, b: u128, p: u128) -> u128 {
    if p <= 1 << 64 {
        return (a * b) % p;
    }
    // Double-and-add keeps every intermediate below 2p < 2^128.
    let (mut acc, mut a, mut b) = (0u128, a % p, b);
    while b > 0 {
        if b & 1 == 1 {
            acc += a;
            if acc >= p {
                acc -= p;
            }
        }
        a += a;
        if a >= p {
            a -= p;
        }
        b >>= 1;
    }
    acc
}

fn pow_mod(mut base: u128, mut e: u128, p: u128) -> u128 {
    let mut acc = 1 % p;
    base %= p;
    while e > 0 {
        if e & 1 == 1 {
            acc = mul_mod(acc, base, p);
        }
        base = mul_mod(base, base, p);
        e >>= 1;
    }
    acc
}

/// Miller–Rabin with the first twelve primes as fixed witnesses plus random
/// witnesses from a fixed-seed stream, 40 rounds in total.
pub fn is_prime(n: u128) -> bool {
    const SMALL: [u128; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    if n < 2 {
        return false;
    }
    for &q in &SMALL {
        if n == q {
            return true;
        }
        if n % q == 0 {
            return false;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    let witness = |a: u128| -> bool {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            return true;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                return true;
            }
        }
        false
    };
    if !SMALL.iter().all(|&a| witness(a)) {
        return false;
    }
    let mut rng = ChaCha20Rng::seed_from_u64(0x6d69_6c6c_6572);
    (SMALL.len()..MILLER_RABIN_ROUNDS).all(|_| witness(rng.gen_range(2..n - 1)))
}

/// Smallest prime strictly greater than `n`.
pub fn next_prime(n: u128) -> u128 {
    let mut c = n + 1;
    while !is_prime(c) {
        c += 1;
    }
    c
}
