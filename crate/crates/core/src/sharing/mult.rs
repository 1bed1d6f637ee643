//! Interactive multiplication for both schemes, batched: every call
//! multiplies element-wise vectors in a single exchange.

use super::{AdditiveShare, Randomness, ShamirShare, SharingError};
use crate::field::{vandermonde_reduction_row, Fe, Polynomial};
use crate::net::{Group, PartyCtx, PartyId, Segment, Tag};

fn check_party(ctx: &PartyCtx, index: usize) -> Result<(), SharingError> {
    if ctx.me() as usize != index {
        return Err(SharingError::ParamMismatch);
    }
    Ok(())
}

/// Degree-reduction multiplication. Each party reshares its local product
/// `q_i = a_i·b_i` with a fresh degree-`t` polynomial `h_i`, sends `h_i(j)`
/// to party `j`, and recombines the received values with the first row of
/// the inverse Vandermonde matrix.
pub async fn shamir_mult<R: Randomness + ?Sized>(
    ctx: &PartyCtx,
    tag: Tag,
    a: &[ShamirShare],
    b: &[ShamirShare],
    rng: &mut R,
) -> Result<Vec<ShamirShare>, SharingError> {
    if a.len() != b.len() {
        return Err(SharingError::ParamMismatch);
    }
    let Some(first) = a.first() else {
        return Ok(Vec::new());
    };
    let params = first.params;
    if !params.supports_mult() {
        return Err(SharingError::BadParams(format!("multiplication needs n >= 2t+1, got t={}, n={}", params.t, params.n)));
    }
    let me = first.index;
    check_party(ctx, me)?;
    for (x, y) in a.iter().zip(b) {
        if x.params != params || y.params != params || x.index != me || y.index != me {
            return Err(SharingError::ParamMismatch);
        }
    }
    let field = params.field;
    let n = params.n;

    let reshares: Vec<Polynomial> = a
        .iter()
        .zip(b)
        .map(|(x, y)| {
            let mut c = vec![x.value * y.value];
            c.extend((0..params.t).map(|_| rng.element(field)));
            Polynomial::new(field, c)
        })
        .collect();
    let at = |j: usize| -> Vec<Fe> { reshares.iter().map(|h| h.eval(field.elem(j as u128))).collect() };

    let group = Group::field(field);
    for j in (1..=n).filter(|&j| j != me) {
        let vals = at(j).iter().map(Fe::value).collect();
        ctx.send(j as PartyId, tag, &[Segment::new(group, vals)])?;
    }
    // received[i-1][k] = h_i(me) for the k-th product.
    let mut received = Vec::with_capacity(n);
    for i in 1..=n {
        if i == me {
            received.push(at(me));
        } else {
            let v = ctx.recv_vec(i as PartyId, tag, group, a.len()).await?;
            received.push(field.elems(&v));
        }
    }
    let row = vandermonde_reduction_row(field, n)?;
    Ok((0..a.len())
        .map(|k| {
            let value = row.iter().zip(&received).map(|(&l, r)| l * r[k]).sum();
            ShamirShare { index: me, value, params }
        })
        .collect())
}

/// Randomness one party contributes to a three-party product.
struct Blinding {
    /// `r_{i,j}` for the other two parties in ascending order.
    r: [Fe; 2],
    s: [Fe; 2],
    /// `t_{i,next}`.
    t: Fe,
}

fn others(i: usize) -> [usize; 2] {
    match i {
        1 => [2, 3],
        2 => [1, 3],
        _ => [1, 2],
    }
}

fn next(i: usize) -> usize {
    i % 3 + 1
}

fn prev(i: usize) -> usize {
    (i + 1) % 3 + 1
}

fn third(i: usize, j: usize) -> usize {
    6 - i - j
}

fn slot(i: usize, j: usize) -> usize {
    others(i).iter().position(|&o| o == j).expect("distinct parties")
}

/// Three-party additive multiplication with `r/s/t` blinding. Party `i`
/// draws `r_{i,j}`, `s_{i,j}` for both peers and `t_{i,i+1}`; then
///
/// ```text
/// â_{i,j} = u_i + r_{k,i},   b̂_{i,j} = v_i + s_{k,i}        (k the third party)
/// c_i = u_i(b̂_{j,i} + b̂_{k,i}) + v_i(â_{j,i} + â_{k,i}) − â_{i,j}b̂_{j,i} − b̂_{i,j}â_{j,i}
///       + r_{i,j}s_{i,k} + s_{i,j}r_{i,k} − t_{i,j} + t_{k,i}     (j = i+1, k = i−1)
/// ```
///
/// and the output share is `c_i + u_i·v_i`.
pub async fn additive_mult3<R: Randomness + ?Sized>(
    ctx: &PartyCtx,
    tags: (Tag, Tag),
    u: &[AdditiveShare],
    v: &[AdditiveShare],
    rng: &mut R,
) -> Result<Vec<AdditiveShare>, SharingError> {
    if u.len() != v.len() {
        return Err(SharingError::ParamMismatch);
    }
    let Some(first) = u.first() else {
        return Ok(Vec::new());
    };
    let params = first.params;
    if params.m != 3 {
        return Err(SharingError::BadPartyCount(params.m));
    }
    let i = first.index;
    check_party(ctx, i)?;
    for (x, y) in u.iter().zip(v) {
        if x.params != params || y.params != params || x.index != i || y.index != i {
            return Err(SharingError::ParamMismatch);
        }
    }
    let field = params.field;
    let group = Group::field(field);
    let len = u.len();

    let mine: Vec<Blinding> = (0..len)
        .map(|_| {
            let r = [rng.element(field), rng.element(field)];
            let s = [rng.element(field), rng.element(field)];
            let t = rng.element(field);
            Blinding { r, s, t }
        })
        .collect();

    // Exchange 1: r_{i,j}, s_{i,j} to j, plus t_{i,j} when j = next(i).
    for j in others(i) {
        let sl = slot(i, j);
        let mut segs = vec![
            Segment::new(group, mine.iter().map(|b| b.r[sl].value()).collect()),
            Segment::new(group, mine.iter().map(|b| b.s[sl].value()).collect()),
        ];
        if j == next(i) {
            segs.push(Segment::new(group, mine.iter().map(|b| b.t.value()).collect()));
        }
        ctx.send(j as PartyId, tags.0, &segs)?;
    }
    // From j we get r_{j,i}, s_{j,i} (and t_{j,i} when i = next(j)).
    let mut r_in = [vec![], vec![]];
    let mut s_in = [vec![], vec![]];
    let mut t_prev = vec![];
    for j in others(i) {
        let sl = slot(i, j);
        let with_t = i == next(j);
        let schema = vec![(group, len); if with_t { 3 } else { 2 }];
        let mut segs = ctx.recv(j as PartyId, tags.0, &schema).await?;
        if with_t {
            t_prev = field.elems(&segs.pop().unwrap());
        }
        s_in[sl] = field.elems(&segs.pop().unwrap());
        r_in[sl] = field.elems(&segs.pop().unwrap());
    }

    // Exchange 2: masked inputs â_{i,j}, b̂_{i,j} to j.
    let mut hat_a_out = [vec![], vec![]];
    let mut hat_b_out = [vec![], vec![]];
    for j in others(i) {
        let sl = slot(i, j);
        let k = third(i, j);
        let ks = slot(i, k);
        hat_a_out[sl] = (0..len).map(|e| u[e].value + r_in[ks][e]).collect::<Vec<Fe>>();
        hat_b_out[sl] = (0..len).map(|e| v[e].value + s_in[ks][e]).collect::<Vec<Fe>>();
        let segs = [
            Segment::new(group, hat_a_out[sl].iter().map(Fe::value).collect()),
            Segment::new(group, hat_b_out[sl].iter().map(Fe::value).collect()),
        ];
        ctx.send(j as PartyId, tags.1, &segs)?;
    }
    let mut hat_a_in = [vec![], vec![]];
    let mut hat_b_in = [vec![], vec![]];
    for j in others(i) {
        let sl = slot(i, j);
        let mut segs = ctx.recv(j as PartyId, tags.1, &[(group, len), (group, len)]).await?;
        hat_b_in[sl] = field.elems(&segs.pop().unwrap());
        hat_a_in[sl] = field.elems(&segs.pop().unwrap());
    }

    let j = next(i);
    let k = prev(i);
    let (js, ks) = (slot(i, j), slot(i, k));
    Ok((0..len)
        .map(|e| {
            let (ui, vi) = (u[e].value, v[e].value);
            let b = &mine[e];
            let c = ui * (hat_b_in[js][e] + hat_b_in[ks][e]) + vi * (hat_a_in[js][e] + hat_a_in[ks][e])
                - hat_a_out[js][e] * hat_b_in[js][e]
                - hat_b_out[js][e] * hat_a_in[js][e]
                + b.r[js] * b.s[ks]
                + b.s[js] * b.r[ks]
                - b.t
                + t_prev[e];
            AdditiveShare { index: i, value: c + ui * vi, params }
        })
        .collect())
}
