use super::{poly::interpolate, EvalPoint, Fe, Field, FieldError, Polynomial};

/// Gauss–Jordan inversion of a square matrix over the field.
pub fn invert_matrix(m: &[Vec<Fe>]) -> Result<Vec<Vec<Fe>>, FieldError> {
    let n = m.len();
    let field = m
        .first()
        .and_then(|r| r.first())
        .map(|e| e.field())
        .ok_or(FieldError::SingularMatrix)?;
    let mut a: Vec<Vec<Fe>> = m
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { field.one() } else { field.zero() }));
            r
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n)
            .find(|&r| !a[r][col].is_zero())
            .ok_or(FieldError::SingularMatrix)?;
        a.swap(col, pivot);
        let inv = a[col][col].inv()?;
        for v in a[col].iter_mut() {
            *v *= inv;
        }
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let k = a[r][col];
                for c in 0..2 * n {
                    let d = a[col][c] * k;
                    a[r][c] -= d;
                }
            }
        }
    }
    Ok(a.into_iter().map(|r| r[n..].to_vec()).collect())
}

/// First row of the inverse of the Vandermonde matrix with rows
/// `(1, i, i², …, i^{n−1})` for `i = 1..n`. Dotting it with the values of a
/// degree-`<n` polynomial at `1..n` yields the constant term.
pub fn vandermonde_reduction_row(field: Field, n: usize) -> Result<Vec<Fe>, FieldError> {
    if n == 0 || n as u128 >= field.modulus() {
        return Err(FieldError::BadParams(format!(
            "Vandermonde size {n} out of range for modulus {}",
            field.modulus()
        )));
    }
    let v: Vec<Vec<Fe>> = (1..=n)
        .map(|i| (0..n).map(|j| field.elem(i as u128).pow(j as u128)).collect())
        .collect();
    let inv = invert_matrix(&v)?;
    Ok(inv[0].clone())
}

/// Solve `A·z = b`, returning one solution (free variables set to zero) or
/// `None` if the system is inconsistent.
fn solve(mut a: Vec<Vec<Fe>>, mut b: Vec<Fe>, field: Field) -> Option<Vec<Fe>> {
    let rows = a.len();
    let cols = a.first().map_or(0, |r| r.len());
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..rows).find(|&i| !a[i][c].is_zero()) else {
            continue;
        };
        a.swap(r, p);
        b.swap(r, p);
        let inv = a[r][c].inv().ok()?;
        for v in a[r].iter_mut() {
            *v *= inv;
        }
        b[r] *= inv;
        for i in 0..rows {
            if i != r && !a[i][c].is_zero() {
                let k = a[i][c];
                for j in 0..cols {
                    let d = a[r][j] * k;
                    a[i][j] -= d;
                }
                let d = b[r] * k;
                b[i] -= d;
            }
        }
        pivots.push(c);
        r += 1;
        if r == rows {
            break;
        }
    }
    if b[r..].iter().any(|v| !v.is_zero()) {
        return None;
    }
    let mut z = vec![field.zero(); cols];
    for (i, &c) in pivots.iter().enumerate() {
        z[c] = b[i];
    }
    Some(z)
}

/// Outcome of Reed–Solomon decoding.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Decoding {
    /// The degree-`≤ t` polynomial and the x-coordinates it disagrees with.
    Recovered { poly: Polynomial, bad: Vec<u128> },
    Failed,
}

/// Berlekamp–Welch: find `P` of degree `≤ t` agreeing with all but at most
/// `e` of the points.
pub fn berlekamp_welch(points: &[EvalPoint], t: usize, e: usize) -> Result<Decoding, FieldError> {
    let needed = t + 1 + 2 * e;
    if points.len() < needed {
        return Err(FieldError::InsufficientPoints { needed, got: points.len() });
    }
    let field = points[0].x.field();
    if e == 0 {
        let poly = interpolate(points)?;
        return Ok(if poly.degree() <= t as isize {
            Decoding::Recovered { poly, bad: Vec::new() }
        } else {
            Decoding::Failed
        });
    }
    // Unknowns: Q_0..Q_{t+e}, then E_0..E_{e-1} (E is monic of degree e).
    // Q(x_i) − y_i·(E_0 + … + E_{e−1}x^{e−1}) = y_i·x_i^e.
    let nq = t + e + 1;
    let mut a = Vec::with_capacity(points.len());
    let mut b = Vec::with_capacity(points.len());
    for pt in points {
        let mut row = Vec::with_capacity(nq + e);
        row.extend((0..nq).map(|j| pt.x.pow(j as u128)));
        row.extend((0..e).map(|j| -(pt.y * pt.x.pow(j as u128))));
        a.push(row);
        b.push(pt.y * pt.x.pow(e as u128));
    }
    let Some(z) = solve(a, b, field) else {
        return Ok(Decoding::Failed);
    };
    let q = Polynomial::new(field, z[..nq].to_vec());
    let mut ec = z[nq..].to_vec();
    ec.push(field.one());
    let err_loc = Polynomial::new(field, ec);
    let (poly, rem) = q.div_rem(&err_loc)?;
    if !rem.is_zero() || poly.degree() > t as isize {
        return Ok(Decoding::Failed);
    }
    let bad: Vec<u128> = points
        .iter()
        .filter(|pt| poly.eval(pt.x) != pt.y)
        .map(|pt| pt.x.value())
        .collect();
    if bad.len() > e {
        return Ok(Decoding::Failed);
    }
    Ok(Decoding::Recovered { poly, bad })
}
