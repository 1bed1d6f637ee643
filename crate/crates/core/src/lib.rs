//! Multi-party computation toolkit: prime-field arithmetic, Shamir and
//! additive secret sharing, a dual-sharing compiler with cheater detection,
//! three-party secure comparison, and an oblivious Bloom filter firewall
//! evaluated over secret shares.

pub mod bloom;
pub mod compare;
pub mod dual;
pub mod field;
pub mod firewall;
pub mod net;
pub mod sharing;

pub use field::{Fe, Field, FieldError, Polynomial};
