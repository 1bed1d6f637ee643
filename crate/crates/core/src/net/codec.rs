//! Bit-exact payload codec.
//!
//! A payload is a concatenation of segments, each a run of residues from one
//! group written at the group's raw width, least significant bit first, and
//! packed into bytes LSB-first. Pad bits in the final byte are zero.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::{bit_length, Field};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodecError {
    #[error("value {value} out of range for modulus {modulus}")]
    OutOfRange { value: u128, modulus: u128 },
    #[error("payload ends before the declared element list")]
    TruncatedPayload,
    #[error("payload has nonzero padding or extra bytes")]
    TrailingData,
}

/// Label of a group, used for per-group element counts in transcripts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GroupKind {
    Z2,
    ZN2,
    ZN,
    Shift,
    Field,
    Ipv4,
}

/// Value range plus the two widths tracked for every element: the raw
/// serialized width and the width charged by the complexity accounting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Group {
    pub kind: GroupKind,
    pub modulus: u128,
    pub raw_bits: u32,
    pub accounting_bits: u32,
}

/// `⌈log₂ x⌉` for `x ≥ 1`.
pub fn ceil_log2(x: u64) -> u32 {
    if x <= 1 {
        0
    } else {
        64 - (x - 1).leading_zeros()
    }
}

impl Group {
    pub fn z2() -> Self {
        Group { kind: GroupKind::Z2, modulus: 2, raw_bits: 1, accounting_bits: 1 }
    }

    /// The small prime field used for prefix sums.
    pub fn zn2(n2: Field) -> Self {
        let bits = n2.bits();
        Group { kind: GroupKind::ZN2, modulus: n2.modulus(), raw_bits: bits, accounting_bits: bits }
    }

    /// The output field of the comparison protocols, charged `ℓ` bits per
    /// element although `N > 2^ℓ` needs `ℓ + 1` on the wire.
    pub fn zn(n: Field, ell: u32) -> Self {
        Group { kind: GroupKind::ZN, modulus: n.modulus(), raw_bits: n.bits(), accounting_bits: ell }
    }

    /// A rotation amount in `[0, ℓ + 1)`, written in `1 + ⌈log₂ℓ⌉` bits.
    pub fn shift(ell: u32) -> Self {
        let bits = 1 + ceil_log2(ell as u64);
        Group { kind: GroupKind::Shift, modulus: ell as u128 + 1, raw_bits: bits, accounting_bits: bits }
    }

    /// Residues of a sharing field at their natural width.
    pub fn field(f: Field) -> Self {
        let bits = f.bits();
        Group { kind: GroupKind::Field, modulus: f.modulus(), raw_bits: bits, accounting_bits: bits }
    }

    pub fn ipv4() -> Self {
        Group { kind: GroupKind::Ipv4, modulus: 1 << 32, raw_bits: 32, accounting_bits: 32 }
    }
}

/// A run of values from one group.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segment {
    pub group: Group,
    pub values: Vec<u128>,
}

impl Segment {
    pub fn new(group: Group, values: Vec<u128>) -> Self {
        Segment { group, values }
    }

    pub fn accounting_bits(&self) -> u64 {
        self.group.accounting_bits as u64 * self.values.len() as u64
    }

    pub fn raw_bits(&self) -> u64 {
        self.group.raw_bits as u64 * self.values.len() as u64
    }
}

/// Expected layout of a payload: `(group, element count)` per segment.
pub type Schema = Vec<(Group, usize)>;

struct BitWriter {
    bytes: Vec<u8>,
    used: u64,
}

impl BitWriter {
    fn write(&mut self, v: u128, width: u32) {
        for i in 0..width {
            if self.used % 8 == 0 {
                self.bytes.push(0);
            }
            if (v >> i) & 1 == 1 {
                let last = self.bytes.len() - 1;
                self.bytes[last] |= 1 << (self.used % 8);
            }
            self.used += 1;
        }
    }
}

pub fn encode_elements(segments: &[Segment]) -> Result<Vec<u8>, CodecError> {
    let mut w = BitWriter { bytes: Vec::new(), used: 0 };
    for seg in segments {
        for &v in &seg.values {
            if v >= seg.group.modulus || bit_length(v) > seg.group.raw_bits {
                return Err(CodecError::OutOfRange { value: v, modulus: seg.group.modulus });
            }
            w.write(v, seg.group.raw_bits);
        }
    }
    Ok(w.bytes)
}

pub fn decode_elements(payload: &[u8], schema: &[(Group, usize)]) -> Result<Vec<Vec<u128>>, CodecError> {
    let total: u64 = schema.iter().map(|(g, n)| g.raw_bits as u64 * *n as u64).sum();
    if (payload.len() as u64) * 8 < total {
        return Err(CodecError::TruncatedPayload);
    }
    if payload.len() as u64 != total.div_ceil(8) {
        return Err(CodecError::TrailingData);
    }
    let bit = |i: u64| (payload[(i / 8) as usize] >> (i % 8)) & 1;
    let mut pos = 0u64;
    let mut out = Vec::with_capacity(schema.len());
    for &(group, count) in schema {
        let mut vals = Vec::with_capacity(count);
        for _ in 0..count {
            let mut v = 0u128;
            for i in 0..group.raw_bits {
                v |= (bit(pos) as u128) << i;
                pos += 1;
            }
            if v >= group.modulus {
                return Err(CodecError::OutOfRange { value: v, modulus: group.modulus });
            }
            vals.push(v);
        }
        out.push(vals);
    }
    if (pos..payload.len() as u64 * 8).any(|i| bit(i) != 0) {
        return Err(CodecError::TrailingData);
    }
    Ok(out)
}
