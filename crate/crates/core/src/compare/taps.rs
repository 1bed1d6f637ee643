use std::cell::RefCell;
use std::collections::BTreeMap;
use std::rc::Rc;

use crate::field::{lagrange_zero_coefficients, Field};

/// How the recorded per-party vectors combine into a plaintext.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TapKind {
    /// A value one party sees in the clear.
    Plain,
    /// Additive shares modulo the recorded modulus (xor when it is 2).
    Additive,
    /// Shamir shares at `x = party`.
    Shamir,
}

#[derive(Debug, Clone)]
struct Entry {
    kind: TapKind,
    modulus: u128,
    shares: BTreeMap<u8, Vec<u128>>,
}

/// Debug-build recorder of intermediate protocol values, shared by all
/// parties of one simulated run. Recording is a no-op in release builds.
#[derive(Debug, Clone, Default)]
pub struct Taps(Rc<RefCell<BTreeMap<&'static str, Entry>>>);

impl Taps {
    pub fn new() -> Self {
        Taps::default()
    }

    #[allow(unused_variables)]
    pub fn record(&self, name: &'static str, kind: TapKind, modulus: u128, party: u8, values: Vec<u128>) {
        #[cfg(debug_assertions)]
        {
            let mut map = self.0.borrow_mut();
            let e = map.entry(name).or_insert_with(|| Entry { kind, modulus, shares: BTreeMap::new() });
            e.shares.insert(party, values);
        }
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.0.borrow().keys().copied().collect()
    }

    /// Plaintext of a tapped value.
    pub fn reveal(&self, name: &str) -> Option<Vec<u128>> {
        let map = self.0.borrow();
        let e = map.get(name)?;
        let len = e.shares.values().next()?.len();
        match e.kind {
            TapKind::Plain => e.shares.values().next().cloned(),
            TapKind::Additive => Some(
                (0..len)
                    .map(|i| e.shares.values().fold(0u128, |acc, v| (acc + v[i] % e.modulus) % e.modulus))
                    .collect(),
            ),
            TapKind::Shamir => {
                let f = Field::new(e.modulus).ok()?;
                let xs: Vec<_> = e.shares.keys().map(|&p| f.elem(p as u128)).collect();
                let l = lagrange_zero_coefficients(&xs).ok()?;
                Some(
                    (0..len)
                        .map(|i| l.iter().zip(e.shares.values()).map(|(&li, v)| li * f.elem(v[i])).sum::<crate::Fe>().value())
                        .collect(),
                )
            }
        }
    }

    /// A revealed value interpreted as a signed residue in `(−m/2, m/2]`.
    pub fn reveal_signed(&self, name: &str) -> Option<Vec<i128>> {
        let m = self.0.borrow().get(name)?.modulus;
        Some(self.reveal(name)?.into_iter().map(|v| if v > m / 2 { v as i128 - m as i128 } else { v as i128 }).collect())
    }
}
