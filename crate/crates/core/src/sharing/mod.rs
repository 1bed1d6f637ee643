//! Shamir `(t, n)` threshold sharing and `m`-of-`m` additive sharing, their
//! local linear operations, and the interactive multiplication protocols.

mod additive;
mod mult;
mod random;
mod shamir;

use thiserror::Error;

use crate::field::FieldError;
use crate::net::ProtocolError;

pub use additive::{
    additive_absorb, additive_add, additive_add_const, additive_cmul, additive_collapse, additive_expand,
    additive_residual, additive_reveal, additive_share, additive_share_with, additive_sub, AdditiveParams,
    AdditiveShare,
};
pub use mult::{additive_mult3, shamir_mult};
pub use random::{RandomSource, Randomness, Scripted};
pub use shamir::{
    shamir_add, shamir_add_const, shamir_cmul, shamir_reveal, shamir_share, shamir_share_poly, shamir_share_with,
    shamir_sub, ShamirParams, ShamirShare,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SharingError {
    #[error("bad parameters: {0}")]
    BadParams(String),
    #[error("need {needed} shares, got {got}")]
    InsufficientShares { needed: usize, got: usize },
    #[error("duplicate share index {0}")]
    DuplicateIndex(usize),
    #[error("shares belong to different schemes or parties")]
    ParamMismatch,
    #[error("three-party multiplication cannot run with {0} parties")]
    BadPartyCount(usize),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
}
