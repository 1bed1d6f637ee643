//! Dual sharing compiler: every wire is held under Shamir and additive
//! sharing at once, and the output check reveals the result while detecting
//! parties whose two shares disagree.
//!
//! Revealing works in two phases. First every party subtracts its additive
//! share from its Shamir share (scaled by the inverse Lagrange weight) and
//! broadcasts the result, which must reconstruct zero. Then additive shares
//! are broadcast, the shift is undone, and the recovered Shamir shares must
//! lie on a polynomial of degree at most `t`.

mod circuit;
mod output;

use thiserror::Error;

use crate::field::{lagrange_zero_coefficients, Fe, Field, FieldError};
use crate::net::ProtocolError;
use crate::sharing::{
    additive_share, additive_share_with, shamir_share, shamir_share_with, AdditiveParams, AdditiveShare, Randomness,
    ShamirParams, ShamirShare, SharingError,
};

pub use circuit::{beaver_dealer, dual_eval, BeaverTriple, Circuit, Gate, MulMode};
pub use output::{output_check, phase2_lie_hook, OutputVerdict, VerdictStatus};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DualError {
    #[error("bad parameters: {0}")]
    BadParams(String),
    #[error("malformed circuit: {0}")]
    CircuitMalformed(String),
    #[error("party {party} has no input for gate {gate}")]
    MissingInput { party: usize, gate: usize },
    #[error("ran out of multiplication triples")]
    MissingTriple,
    #[error(transparent)]
    Sharing(#[from] SharingError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
}

/// `(p, t, n)` shared by both components; the additive side has `m = n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DualParams {
    pub shamir: ShamirParams,
    pub additive: AdditiveParams,
}

impl DualParams {
    pub fn new(field: Field, t: usize, n: usize) -> Result<Self, DualError> {
        if n < 2 * t + 1 {
            return Err(DualError::BadParams(format!("dual sharing needs n >= 2t+1, got t={t}, n={n}")));
        }
        Ok(DualParams { shamir: ShamirParams::new(field, t, n)?, additive: AdditiveParams::new(field, n)? })
    }

    pub fn field(&self) -> Field {
        self.shamir.field
    }

    pub fn t(&self) -> usize {
        self.shamir.t
    }

    pub fn n(&self) -> usize {
        self.shamir.n
    }
}

/// One party's Shamir and additive shares of the same value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DualShare {
    pub shamir: ShamirShare,
    pub additive: AdditiveShare,
}

impl DualShare {
    pub fn index(&self) -> usize {
        self.shamir.index
    }

    pub fn params(&self) -> DualParams {
        DualParams { shamir: self.shamir.params, additive: self.additive.params }
    }

    /// Both components of the public constant `c`.
    pub fn constant(index: usize, c: Fe, params: DualParams) -> Self {
        let add = if index == 1 { c } else { params.field().zero() };
        DualShare {
            shamir: ShamirShare::constant(index, c, params.shamir),
            additive: AdditiveShare::new(index, add, params.additive),
        }
    }
}

fn zip_dual(shamir: Vec<ShamirShare>, additive: Vec<AdditiveShare>) -> Vec<DualShare> {
    shamir.into_iter().zip(additive).map(|(shamir, additive)| DualShare { shamir, additive }).collect()
}

/// Independent Shamir and additive sharings of `secret`.
pub fn dual_share<R: Randomness + ?Sized>(secret: Fe, params: DualParams, rng: &mut R) -> Vec<DualShare> {
    let s = shamir_share(secret, params.shamir, rng).expect("params validated");
    let a = additive_share(secret, params.additive, rng).expect("params validated");
    zip_dual(s, a)
}

/// Dual sharing with every random choice given: Shamir coefficients
/// `c_1..c_t` and the first `n − 1` additive shares.
pub fn dual_share_with(secret: Fe, coeffs: &[Fe], additive: &[Fe], params: DualParams) -> Result<Vec<DualShare>, DualError> {
    let s = shamir_share_with(secret, coeffs, params.shamir)?;
    let a = additive_share_with(secret, additive, params.additive)?;
    Ok(zip_dual(s, a))
}

fn lagrange_at(party: usize, indices: &[usize], field: Field) -> Result<Fe, FieldError> {
    let xs: Vec<Fe> = indices.iter().map(|&i| field.elem(i as u128)).collect();
    let pos = indices.iter().position(|&i| i == party).ok_or_else(|| FieldError::BadParams(format!("party {party} not among the indices")))?;
    Ok(lagrange_zero_coefficients(&xs)?[pos])
}

/// `δ·L_j⁻¹`: the amount party `j` adds to its Shamir share to move the
/// secret reconstructed from `all_indices` by `δ`.
pub fn delta_prime(delta: Fe, party: usize, all_indices: &[usize]) -> Result<Fe, FieldError> {
    let l = lagrange_at(party, all_indices, delta.field())?;
    Ok(delta * l.inv()?)
}

/// Reinterpret a full additive sharing as points `(j, a_j·L_j⁻¹)` of a
/// polynomial of degree `≤ n − 1` whose constant term is the additive secret.
pub fn additive_to_shamir_lift(shares: &[AdditiveShare]) -> Result<Vec<ShamirShare>, DualError> {
    let first = shares.first().ok_or(SharingError::InsufficientShares { needed: 1, got: 0 })?;
    let field = first.params.field;
    let n = shares.len();
    let indices: Vec<usize> = shares.iter().map(|s| s.index).collect();
    let params = ShamirParams::new(field, n - 1, n)?;
    shares
        .iter()
        .map(|s| Ok(ShamirShare::new(s.index, delta_prime(s.value, s.index, &indices)?, params)))
        .collect()
}

/// A single party's deviation from the protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Corruption {
    /// Move the Shamir secret by `δ`, leaving the additive share alone.
    ShiftShamir(Fe),
    /// Move the additive secret by `δ`.
    ShiftAdditive(Fe),
    /// Move both secrets by `δ` so the zero check still passes.
    ShiftBoth(Fe),
    /// Behave honestly, then broadcast `a_j + δ` in phase two.
    LiePhase2(Fe),
}

impl Corruption {
    pub const ALL: [fn(Fe) -> Corruption; 4] =
        [Corruption::ShiftShamir, Corruption::ShiftAdditive, Corruption::ShiftBoth, Corruption::LiePhase2];

    /// Apply the share-level part of the deviation for a party holding
    /// `share` among `n` parties.
    pub fn apply(&self, share: &DualShare) -> DualShare {
        let n = share.shamir.params.n;
        let indices: Vec<usize> = (1..=n).collect();
        let shift = |d: Fe| delta_prime(d, share.index(), &indices).expect("index in range");
        let mut out = *share;
        match *self {
            Corruption::ShiftShamir(d) => out.shamir.value += shift(d),
            Corruption::ShiftAdditive(d) => out.additive.value += d,
            Corruption::ShiftBoth(d) => {
                out.shamir.value += shift(d);
                out.additive.value += d;
            }
            Corruption::LiePhase2(_) => {}
        }
        out
    }

    /// The phase-two offset, if this deviation lies during the broadcast.
    pub fn phase2_offset(&self) -> Option<Fe> {
        match *self {
            Corruption::LiePhase2(d) => Some(d),
            _ => None,
        }
    }
}
