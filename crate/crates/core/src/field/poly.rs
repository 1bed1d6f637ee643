use std::collections::HashSet;
use std::fmt;

use super::{Fe, Field, FieldError};

/// Coefficient vector over a prime field; `coeffs[i]` multiplies `x^i`.
/// Trailing zero coefficients are always trimmed.
#[derive(Clone, PartialEq, Eq)]
pub struct Polynomial {
    field: Field,
    coeffs: Vec<Fe>,
}

/// A share viewed as a point `(x, y)` on the sharing polynomial.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EvalPoint {
    pub x: Fe,
    pub y: Fe,
}

impl EvalPoint {
    pub fn new(x: Fe, y: Fe) -> Self {
        EvalPoint { x, y }
    }
}

impl Field {
    pub fn point(&self, x: u128, y: u128) -> EvalPoint {
        EvalPoint { x: self.elem(x), y: self.elem(y) }
    }

    /// Points `(1, ys[0]), (2, ys[1]), …`.
    pub fn points(&self, ys: &[u128]) -> Vec<EvalPoint> {
        ys.iter()
            .enumerate()
            .map(|(i, &y)| self.point(i as u128 + 1, y))
            .collect()
    }
}

impl Polynomial {
    pub fn new(field: Field, mut coeffs: Vec<Fe>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        Polynomial { field, coeffs }
    }

    pub fn from_values(field: Field, coeffs: &[u128]) -> Self {
        Self::new(field, field.elems(coeffs))
    }

    pub fn zero(field: Field) -> Self {
        Polynomial { field, coeffs: Vec::new() }
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn coeffs(&self) -> &[Fe] {
        &self.coeffs
    }

    pub fn coeff(&self, i: usize) -> Fe {
        self.coeffs.get(i).copied().unwrap_or(self.field.zero())
    }

    pub fn constant(&self) -> Fe {
        self.coeff(0)
    }

    /// Highest index with a nonzero coefficient; `-1` for the zero polynomial.
    pub fn degree(&self) -> isize {
        self.coeffs.len() as isize - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn eval(&self, x: Fe) -> Fe {
        self.coeffs
            .iter()
            .rev()
            .fold(self.field.zero(), |acc, &c| acc * x + c)
    }

    pub fn add(&self, other: &Polynomial) -> Polynomial {
        let n = self.coeffs.len().max(other.coeffs.len());
        let c = (0..n).map(|i| self.coeff(i) + other.coeff(i)).collect();
        Polynomial::new(self.field, c)
    }

    pub fn sub(&self, other: &Polynomial) -> Polynomial {
        let n = self.coeffs.len().max(other.coeffs.len());
        let c = (0..n).map(|i| self.coeff(i) - other.coeff(i)).collect();
        Polynomial::new(self.field, c)
    }

    pub fn scale(&self, k: Fe) -> Polynomial {
        Polynomial::new(self.field, self.coeffs.iter().map(|&c| c * k).collect())
    }

    pub fn mul(&self, other: &Polynomial) -> Polynomial {
        if self.is_zero() || other.is_zero() {
            return Polynomial::zero(self.field);
        }
        let mut c = vec![self.field.zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in other.coeffs.iter().enumerate() {
                c[i + j] += a * b;
            }
        }
        Polynomial::new(self.field, c)
    }

    /// Euclidean division; returns `(quotient, remainder)`.
    pub fn div_rem(&self, divisor: &Polynomial) -> Result<(Polynomial, Polynomial), FieldError> {
        let lead = divisor.coeffs.last().ok_or(FieldError::ZeroInverse)?.inv()?;
        let dd = divisor.coeffs.len();
        let mut rem = self.coeffs.clone();
        if rem.len() < dd {
            return Ok((Polynomial::zero(self.field), self.clone()));
        }
        let mut quot = vec![self.field.zero(); rem.len() - dd + 1];
        for k in (0..quot.len()).rev() {
            let q = rem[k + dd - 1] * lead;
            quot[k] = q;
            for (j, &d) in divisor.coeffs.iter().enumerate() {
                rem[k + j] -= q * d;
            }
        }
        Ok((Polynomial::new(self.field, quot), Polynomial::new(self.field, rem)))
    }
}

impl fmt::Debug for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self} (mod {})", self.field.modulus())
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match i {
                0 => write!(f, "{c}")?,
                1 => write!(f, "{c}x")?,
                _ => write!(f, "{c}x^{i}")?,
            }
        }
        Ok(())
    }
}

fn check_indices(xs: &[Fe]) -> Result<(), FieldError> {
    let mut seen = HashSet::new();
    for x in xs {
        if x.is_zero() {
            return Err(FieldError::ZeroIndex);
        }
        if !seen.insert(x.value()) {
            return Err(FieldError::DuplicateIndex(x.value()));
        }
    }
    Ok(())
}

/// Weights `L_j = Π_{k≠j} (−x_k)/(x_j − x_k)` so that `Σ L_j·f(x_j) = f(0)`.
pub fn lagrange_zero_coefficients(indices: &[Fe]) -> Result<Vec<Fe>, FieldError> {
    check_indices(indices)?;
    indices
        .iter()
        .enumerate()
        .map(|(j, &xj)| {
            let field = xj.field();
            let (num, den) = indices.iter().enumerate().filter(|&(k, _)| k != j).fold(
                (field.one(), field.one()),
                |(n, d), (_, &xk)| (n * -xk, d * (xj - xk)),
            );
            Ok(num * den.inv()?)
        })
        .collect()
}

/// The unique polynomial of degree `< points.len()` through every point.
pub fn interpolate(points: &[EvalPoint]) -> Result<Polynomial, FieldError> {
    let field = match points.first() {
        Some(p) => p.x.field(),
        None => return Err(FieldError::InsufficientPoints { needed: 1, got: 0 }),
    };
    let xs: Vec<Fe> = points.iter().map(|p| p.x).collect();
    check_indices(&xs)?;

    // master(x) = Π (x − x_i); each basis numerator is master / (x − x_i).
    let mut master = vec![field.one()];
    for &xi in &xs {
        let mut next = vec![field.zero(); master.len() + 1];
        for (k, &c) in master.iter().enumerate() {
            next[k + 1] += c;
            next[k] -= c * xi;
        }
        master = next;
    }

    let n = points.len();
    let mut acc = vec![field.zero(); n];
    for (i, pt) in points.iter().enumerate() {
        // Synthetic division of master by (x − x_i).
        let mut basis = vec![field.zero(); n];
        let mut carry = field.zero();
        for k in (0..n).rev() {
            carry = master[k + 1] + carry * pt.x;
            basis[k] = carry;
        }
        let denom = xs
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != i)
            .fold(field.one(), |d, (_, &xk)| d * (pt.x - xk));
        let w = pt.y * denom.inv()?;
        for (a, b) in acc.iter_mut().zip(basis) {
            *a += w * b;
        }
    }
    Ok(Polynomial::new(field, acc))
}

/// Result of checking a sharing against its degree threshold.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DegreeCheck {
    Clean(Polynomial),
    DegreeViolation(Polynomial),
}

impl DegreeCheck {
    pub fn polynomial(&self) -> &Polynomial {
        match self {
            DegreeCheck::Clean(p) | DegreeCheck::DegreeViolation(p) => p,
        }
    }

    pub fn is_clean(&self) -> bool {
        matches!(self, DegreeCheck::Clean(_))
    }
}

pub fn detect_degree(points: &[EvalPoint], t: usize) -> Result<DegreeCheck, FieldError> {
    if points.len() < 2 * t + 1 {
        return Err(FieldError::InsufficientPoints { needed: 2 * t + 1, got: points.len() });
    }
    let poly = interpolate(points)?;
    Ok(if poly.degree() <= t as isize {
        DegreeCheck::Clean(poly)
    } else {
        DegreeCheck::DegreeViolation(poly)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn display_matches_textbook_form() {
        let f = Field::new(101).unwrap();
        let p = Polynomial::from_values(f, &[10, 3, 49]);
        assert_eq!(p.to_string(), "49x^2 + 3x + 10");
        assert_eq!(Polynomial::zero(f).degree(), -1);
    }

    #[test]
    fn div_rem_round_trip() {
        let f = Field::new(101).unwrap();
        let a = Polynomial::from_values(f, &[5, 0, 7, 1]);
        let b = Polynomial::from_values(f, &[3, 1]);
        let (q, r) = a.div_rem(&b).unwrap();
        assert_eq!(q.mul(&b).add(&r), a);
        assert!(r.degree() < 1);
    }
}
