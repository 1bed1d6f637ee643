use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::{Randomness, SharingError};
use crate::field::{lagrange_zero_coefficients, Fe, Field, Polynomial};

/// `(p, t, n)`: degree-`t` polynomials evaluated at `1..=n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShamirParams {
    pub field: Field,
    pub t: usize,
    pub n: usize,
}

impl ShamirParams {
    pub fn new(field: Field, t: usize, n: usize) -> Result<Self, SharingError> {
        if n < t + 1 {
            return Err(SharingError::BadParams(format!("n = {n} must be at least t + 1 = {}", t + 1)));
        }
        if n as u128 >= field.modulus() {
            return Err(SharingError::BadParams(format!("n = {n} must be below p = {}", field.modulus())));
        }
        Ok(ShamirParams { field, t, n })
    }

    /// Whether products can be reduced back to degree `t`.
    pub fn supports_mult(&self) -> bool {
        self.n > 2 * self.t
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ShamirShare {
    pub index: usize,
    pub value: Fe,
    pub params: ShamirParams,
}

impl ShamirShare {
    pub fn new(index: usize, value: Fe, params: ShamirParams) -> Self {
        ShamirShare { index, value, params }
    }

    /// This party's share of a public constant (the constant polynomial).
    pub fn constant(index: usize, c: Fe, params: ShamirParams) -> Self {
        ShamirShare { index, value: c, params }
    }

    pub fn x(&self) -> Fe {
        self.params.field.elem(self.index as u128)
    }
}

/// Evaluate `poly` at `1..=n`.
pub fn shamir_share_poly(poly: &Polynomial, params: ShamirParams) -> Vec<ShamirShare> {
    (1..=params.n)
        .map(|i| ShamirShare { index: i, value: poly.eval(params.field.elem(i as u128)), params })
        .collect()
}

/// Share with explicit higher coefficients `c_1, …, c_t` (lowest degree first).
pub fn shamir_share_with(secret: Fe, coeffs: &[Fe], params: ShamirParams) -> Result<Vec<ShamirShare>, SharingError> {
    if coeffs.len() != params.t {
        return Err(SharingError::BadParams(format!("expected {} coefficients, got {}", params.t, coeffs.len())));
    }
    let mut c = vec![secret];
    c.extend_from_slice(coeffs);
    Ok(shamir_share_poly(&Polynomial::new(params.field, c), params))
}

pub fn shamir_share<R: Randomness + ?Sized>(secret: Fe, params: ShamirParams, rng: &mut R) -> Result<Vec<ShamirShare>, SharingError> {
    let coeffs: Vec<Fe> = (0..params.t).map(|_| rng.element(params.field)).collect();
    shamir_share_with(secret, &coeffs, params)
}

/// Lagrange evaluation at zero over all given shares.
pub fn shamir_reveal(shares: &[ShamirShare]) -> Result<Fe, SharingError> {
    let params = shares.first().ok_or(SharingError::InsufficientShares { needed: 1, got: 0 })?.params;
    if shares.len() < params.t + 1 {
        return Err(SharingError::InsufficientShares { needed: params.t + 1, got: shares.len() });
    }
    let mut seen = HashSet::new();
    for s in shares {
        if s.params != params {
            return Err(SharingError::ParamMismatch);
        }
        if !seen.insert(s.index) {
            return Err(SharingError::DuplicateIndex(s.index));
        }
    }
    let xs: Vec<Fe> = shares.iter().map(ShamirShare::x).collect();
    let l = lagrange_zero_coefficients(&xs)?;
    Ok(l.iter().zip(shares).map(|(&li, s)| li * s.value).sum())
}

fn same(a: &ShamirShare, b: &ShamirShare) -> Result<(), SharingError> {
    if a.params != b.params || a.index != b.index {
        return Err(SharingError::ParamMismatch);
    }
    Ok(())
}

pub fn shamir_add(a: &ShamirShare, b: &ShamirShare) -> Result<ShamirShare, SharingError> {
    same(a, b)?;
    Ok(ShamirShare { value: a.value + b.value, ..*a })
}

pub fn shamir_sub(a: &ShamirShare, b: &ShamirShare) -> Result<ShamirShare, SharingError> {
    same(a, b)?;
    Ok(ShamirShare { value: a.value - b.value, ..*a })
}

pub fn shamir_add_const(a: &ShamirShare, c: Fe) -> ShamirShare {
    ShamirShare { value: a.value + c, ..*a }
}

pub fn shamir_cmul(a: &ShamirShare, c: Fe) -> ShamirShare {
    ShamirShare { value: a.value * c, ..*a }
}
