//! Reveal-subset analysis, majority voting and the query-deduction model
//! used to compare what sum and product evaluation leak.

use std::collections::BTreeMap;

use itertools::Itertools;

use super::FirewallError;
use crate::field::{lagrange_zero_coefficients, Fe};
use crate::net::PartyId;

/// The value reconstructed from one subset of result shares.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reveal {
    pub subset: Vec<PartyId>,
    pub value: u128,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Analysis {
    Agree(u128),
    /// A strict majority of subsets agreed on `value`; `suspects` are the
    /// parties present in every disagreeing subset.
    MajorityWithSuspects { value: u128, suspects: Vec<PartyId> },
    NoMajority,
}

impl Analysis {
    pub fn value(&self) -> Option<u128> {
        match self {
            Analysis::Agree(v) | Analysis::MajorityWithSuspects { value: v, .. } => Some(*v),
            Analysis::NoMajority => None,
        }
    }
}

/// Interpolate at zero from every `size`-subset of `(party, share)` pairs,
/// parties taken as evaluation points.
pub fn reveal_combinations(shares: &[(PartyId, Fe)], size: usize) -> Result<Vec<Reveal>, FirewallError> {
    if size == 0 || size > shares.len() {
        return Err(FirewallError::BadParams(format!("cannot reveal from {size} of {} shares", shares.len())));
    }
    let mut sorted = shares.to_vec();
    sorted.sort_by_key(|(p, _)| *p);
    sorted
        .iter()
        .combinations(size)
        .map(|subset| {
            let field = subset[0].1.field();
            let xs: Vec<Fe> = subset.iter().map(|(p, _)| field.elem(*p as u128)).collect();
            let l = lagrange_zero_coefficients(&xs)?;
            let value: Fe = l.iter().zip(&subset).map(|(&li, (_, y))| li * *y).sum();
            Ok(Reveal { subset: subset.iter().map(|(p, _)| *p).collect(), value: value.value() })
        })
        .collect()
}

pub fn combinational_analysis(reveals: &[Reveal]) -> Analysis {
    let mut counts: BTreeMap<u128, usize> = BTreeMap::new();
    for r in reveals {
        *counts.entry(r.value).or_default() += 1;
    }
    if counts.len() == 1 {
        return Analysis::Agree(reveals[0].value);
    }
    let Some((&value, &count)) = counts.iter().max_by_key(|(_, c)| **c) else {
        return Analysis::NoMajority;
    };
    if 2 * count <= reveals.len() {
        return Analysis::NoMajority;
    }
    let mut minority = reveals.iter().filter(|r| r.value != value);
    let mut suspects = minority.next().map(|r| r.subset.clone()).unwrap_or_default();
    for r in minority {
        suspects.retain(|p| r.subset.contains(p));
    }
    Analysis::MajorityWithSuspects { value, suspects }
}

pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InfluenceBound {
    /// Subsets containing at least one of the `x` cheaters.
    pub influenced: u128,
    /// All `C(m, t)` subsets.
    pub total: u128,
    /// Whether the untouched subsets form a strict majority.
    pub safe: bool,
}

/// How many `t`-subsets of `m` shares `x` cheaters can reach:
/// `Σ_{i=1}^{min(x,t)} C(x,i)·C(m−x,t−i)`.
pub fn influence_bound(m: u64, t: u64, x: u64) -> InfluenceBound {
    let influenced = (1..=x.min(t)).map(|i| binomial(x, i) * binomial(m.saturating_sub(x), t - i)).sum();
    let total = binomial(m, t);
    InfluenceBound { influenced, total, safe: total > 2 * influenced && x < m }
}

/// Strict-majority vote.
pub fn majority_vote<T: Eq + Clone>(votes: &[T]) -> Result<T, FirewallError> {
    for v in votes {
        let count = votes.iter().filter(|w| *w == v).count();
        if 2 * count > votes.len() {
            return Ok(v.clone());
        }
    }
    Err(FirewallError::NoMajority)
}

/// What the gateway learns per query.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Observation {
    Sum,
    Product,
}

/// Largest filter [`deduce_bits`] will enumerate.
pub const MAX_DEDUCE_BITS: u64 = 24;

/// Filter bits fixed by a list of `(indices, revealed value)` observations:
/// `Some(b)` when every filter consistent with them has bit `b` there.
pub fn deduce_bits(beta: u64, observations: &[(Vec<u64>, u128)], mode: Observation) -> Result<Vec<Option<bool>>, FirewallError> {
    if beta == 0 || beta > MAX_DEDUCE_BITS {
        return Err(FirewallError::BadParams(format!("β = {beta} outside 1..={MAX_DEDUCE_BITS}")));
    }
    if observations.iter().flat_map(|(idx, _)| idx).any(|&i| i >= beta) {
        return Err(FirewallError::BadParams("observation index beyond β".into()));
    }
    let mut always_one = (1u64 << beta) - 1;
    let mut always_zero = (1u64 << beta) - 1;
    let mut any = false;
    for filter in 0u64..1 << beta {
        let bit = |i: &u64| (filter >> i & 1) as u128;
        let consistent = observations.iter().all(|(idx, seen)| {
            let v: u128 = match mode {
                Observation::Sum => idx.iter().map(bit).sum(),
                Observation::Product => idx.iter().map(bit).product(),
            };
            v == *seen
        });
        if consistent {
            any = true;
            always_one &= filter;
            always_zero &= !filter;
        }
    }
    if !any {
        return Err(FirewallError::BadParams("observations are inconsistent".into()));
    }
    Ok((0..beta)
        .map(|i| match (always_one >> i & 1, always_zero >> i & 1) {
            (1, _) => Some(true),
            (_, 1) => Some(false),
            _ => None,
        })
        .collect())
}
