use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::{Randomness, SharingError};
use crate::field::{Fe, Field};

/// `(N, m)`: `m` shares summing to the secret mod `N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdditiveParams {
    pub field: Field,
    pub m: usize,
}

impl AdditiveParams {
    pub fn new(field: Field, m: usize) -> Result<Self, SharingError> {
        if m < 2 {
            return Err(SharingError::BadParams(format!("additive sharing needs m >= 2, got {m}")));
        }
        Ok(AdditiveParams { field, m })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AdditiveShare {
    pub index: usize,
    pub value: Fe,
    pub params: AdditiveParams,
}

impl AdditiveShare {
    pub fn new(index: usize, value: Fe, params: AdditiveParams) -> Self {
        AdditiveShare { index, value, params }
    }
}

/// Share with the first `m − 1` shares given explicitly.
pub fn additive_share_with(secret: Fe, randoms: &[Fe], params: AdditiveParams) -> Result<Vec<AdditiveShare>, SharingError> {
    if randoms.len() != params.m - 1 {
        return Err(SharingError::BadParams(format!("expected {} random shares, got {}", params.m - 1, randoms.len())));
    }
    let last = randoms.iter().fold(secret, |acc, &r| acc - r);
    Ok(randoms
        .iter()
        .chain(std::iter::once(&last))
        .enumerate()
        .map(|(i, &v)| AdditiveShare { index: i + 1, value: v, params })
        .collect())
}

pub fn additive_share<R: Randomness + ?Sized>(secret: Fe, params: AdditiveParams, rng: &mut R) -> Result<Vec<AdditiveShare>, SharingError> {
    let randoms: Vec<Fe> = (1..params.m).map(|_| rng.element(params.field)).collect();
    additive_share_with(secret, &randoms, params)
}

/// Sum of all `m` shares.
pub fn additive_reveal(shares: &[AdditiveShare]) -> Result<Fe, SharingError> {
    let params = shares.first().ok_or(SharingError::InsufficientShares { needed: 1, got: 0 })?.params;
    if shares.len() != params.m {
        return Err(SharingError::InsufficientShares { needed: params.m, got: shares.len() });
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
    Ok(shares.iter().map(|s| s.value).sum())
}

fn same(a: &AdditiveShare, b: &AdditiveShare) -> Result<(), SharingError> {
    if a.params != b.params || a.index != b.index {
        return Err(SharingError::ParamMismatch);
    }
    Ok(())
}

pub fn additive_add(a: &AdditiveShare, b: &AdditiveShare) -> Result<AdditiveShare, SharingError> {
    same(a, b)?;
    Ok(AdditiveShare { value: a.value + b.value, ..*a })
}

pub fn additive_sub(a: &AdditiveShare, b: &AdditiveShare) -> Result<AdditiveShare, SharingError> {
    same(a, b)?;
    Ok(AdditiveShare { value: a.value - b.value, ..*a })
}

/// Only party 1 adds the constant; everyone else keeps their share.
pub fn additive_add_const(a: &AdditiveShare, c: Fe) -> AdditiveShare {
    if a.index == 1 {
        AdditiveShare { value: a.value + c, ..*a }
    } else {
        *a
    }
}

pub fn additive_cmul(a: &AdditiveShare, c: Fe) -> AdditiveShare {
    AdditiveShare { value: a.value * c, ..*a }
}

/// Fold the shares of parties `3..=m` into party 2, leaving a two-party
/// sharing. Returns party 2's residual share.
pub fn additive_collapse(p2: &AdditiveShare, others: &[AdditiveShare]) -> Result<AdditiveShare, SharingError> {
    if p2.index != 2 || p2.params.m < 3 || others.len() != p2.params.m - 2 {
        return Err(SharingError::ParamMismatch);
    }
    let mut value = p2.value;
    for s in others {
        if s.params != p2.params || s.index < 3 {
            return Err(SharingError::ParamMismatch);
        }
        value += s.value;
    }
    let params = AdditiveParams { field: p2.params.field, m: 2 };
    Ok(AdditiveShare { index: 2, value, params })
}

/// Party 1's share relabelled as part of the two-party residual sharing.
pub fn additive_residual(p1: &AdditiveShare) -> AdditiveShare {
    AdditiveShare { index: p1.index, value: p1.value, params: AdditiveParams { field: p1.params.field, m: 2 } }
}

/// Split a residual share (held by party 1 or 2) back over `m` parties:
/// returns the part this party keeps and one part for each of `3..=m`.
pub fn additive_expand<R: Randomness + ?Sized>(
    share: &AdditiveShare,
    m: usize,
    rng: &mut R,
) -> Result<(AdditiveShare, Vec<(usize, Fe)>), SharingError> {
    if share.params.m != 2 || m < 3 {
        return Err(SharingError::ParamMismatch);
    }
    let params = AdditiveParams { field: share.params.field, m };
    let parts: Vec<(usize, Fe)> = (3..=m).map(|k| (k, rng.element(params.field))).collect();
    let kept = parts.iter().fold(share.value, |acc, (_, v)| acc - *v);
    Ok((AdditiveShare { index: share.index, value: kept, params }, parts))
}

/// Share of party `k ≥ 3` from the parts it received during expansion.
pub fn additive_absorb(k: usize, parts: &[Fe], params: AdditiveParams) -> AdditiveShare {
    let value = parts.iter().fold(params.field.zero(), |acc, &v| acc + v);
    AdditiveShare { index: k, value, params }
}
