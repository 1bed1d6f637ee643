//! Comparison of values already held as `ℤ₂` bitwise additive shares by
//! `m ≥ 3` parties. Parties `3..m` fold their shares into `P₂`, the
//! three-party core runs, and the result is split back out to everyone.

use super::two_party::{
    bits_u128, bits_u8, draw_masks, finish, gather, helper_tail, locate, random_bits, split, unflip, vals, xor, Masks,
    Variant, P1, P2, P3,
};
use super::{CompareError, ComparisonParams, ScOptions, TapKind};
use crate::field::Fe;
use crate::net::{proto, Group, PartyCtx, PartyId, Segment, Tag};
use crate::sharing::Randomness;

fn tag(step: u8) -> Tag {
    Tag::new(proto::SC_SHARED_INPUTS, step)
}

/// `x_{i+1} ← x_i`, with `x_0` set to `low`.
fn shift_up(bits: &[u8], low: u8) -> Vec<u8> {
    let mut out = Vec::with_capacity(bits.len() + 1);
    out.push(low);
    out.extend_from_slice(bits);
    out
}

/// Compare `a ≥ b` where party `k` holds `a_share[i]`, `b_share[i]` for the
/// `ℓ` bits (least significant first). Every party, `P₃` included, ends
/// with an additive `ℤ_N` share of the result.
pub async fn sc_shared_inputs<R: Randomness + ?Sized>(
    ctx: &PartyCtx,
    params: &ComparisonParams,
    m: usize,
    a_share: &[u8],
    b_share: &[u8],
    opts: &ScOptions,
    rng: &mut R,
) -> Result<Fe, CompareError> {
    let ell = params.ell as usize;
    let len = params.len();
    if !(3..=255).contains(&m) {
        return Err(CompareError::BadParams(format!("need 3..=255 parties, got {m}")));
    }
    if a_share.len() != ell || b_share.len() != ell {
        return Err(CompareError::BadParams(format!("bit shares must have {ell} entries")));
    }
    let me = ctx.me();
    if me == 0 || me as usize > m {
        return Err(CompareError::BadParams(format!("party {me} outside 1..={m}")));
    }
    let (z2, zn2, shift) = (Group::z2(), Group::zn2(params.n2), Group::shift(params.ell));
    let zn = Group::zn(params.n, params.ell);
    let helpers: Vec<PartyId> = (3..=m as PartyId).collect();

    if me >= P3 {
        ctx.send(P2, tag(1), &[Segment::new(z2, bits_u128(a_share)), Segment::new(z2, bits_u128(b_share))])?;
        if me == P3 {
            let a1 = ctx.recv_vec(P1, tag(1), z2, len).await?;
            let a2 = ctx.recv_vec(P2, tag(2), z2, len).await?;
            let [e1, e2] = gather(ctx, tag(3), z2, len).await?;
            let e: Vec<u128> = e1.iter().zip(&e2).map(|(x, y)| x ^ y).collect();
            let a: Vec<u128> = a1.iter().zip(&a2).map(|(x, y)| x ^ y).collect();
            opts.tap("helper_e", TapKind::Plain, 2, P3, e.clone());
            opts.tap("helper_a_prime", TapKind::Plain, 2, P3, a.clone());
            let (e1, e2) = split(&params.n2.elems(&e), params.n2, rng);
            let (a1, a2) = split(&params.n2.elems(&a), params.n2, rng);
            ctx.send(P1, tag(4), &[Segment::new(zn2, vals(&e1)), Segment::new(zn2, vals(&a1))])?;
            ctx.send(P2, tag(4), &[Segment::new(zn2, vals(&e2)), Segment::new(zn2, vals(&a2))])?;
            helper_tail(ctx, params, Variant::SemiHonest, proto::SC_SHARED_INPUTS, opts, rng).await?;
        }
        let f1 = ctx.recv_vec(P1, tag(11), zn, 1).await?[0];
        let f2 = ctx.recv_vec(P2, tag(11), zn, 1).await?[0];
        let f = params.n.elem(f1) + params.n.elem(f2);
        opts.tap("f_final", TapKind::Additive, params.n.modulus(), me, vec![f.value()]);
        return Ok(f);
    }

    let first = me == P1;
    let (masks, q) = if first {
        let a = shift_up(a_share, 0);
        let b = shift_up(b_share, 0);
        let q = random_bits(len, rng);
        let (r, r1, r2, tau, pi) = draw_masks(params, opts, rng);
        let a_masked = xor(&a, &q);
        ctx.send(
            P2,
            tag(1),
            &[
                Segment::new(z2, bits_u128(&q)),
                Segment::new(z2, bits_u128(&r)),
                Segment::new(z2, bits_u128(&r1)),
                Segment::new(z2, vec![r2 as u128]),
                Segment::new(zn2, vals(&tau)),
                Segment::new(shift, vec![pi as u128]),
            ],
        )?;
        ctx.send(P3, tag(1), &[Segment::new(z2, bits_u128(&a_masked))])?;
        let e = xor(&a, &b);
        opts.tap("e", TapKind::Additive, 2, me, bits_u128(&e));
        ctx.send(P3, tag(3), &[Segment::new(z2, bits_u128(&xor(&e, &r)))])?;
        (Masks { first, me, a, r, r1, r2, tau, pi }, q)
    } else {
        let mut a = a_share.to_vec();
        let mut b = b_share.to_vec();
        for &k in &helpers {
            let got = ctx.recv(k, tag(1), &[(z2, ell), (z2, ell)]).await?;
            a = xor(&a, &bits_u8(&got[0]));
            b = xor(&b, &bits_u8(&got[1]));
        }
        let a = shift_up(&a, 1);
        let b = shift_up(&b, 0);
        ctx.send(P3, tag(2), &[Segment::new(z2, bits_u128(&a))])?;
        let e = xor(&a, &b);
        opts.tap("e", TapKind::Additive, 2, me, bits_u128(&e));
        ctx.send(P3, tag(3), &[Segment::new(z2, bits_u128(&e))])?;
        let schema = [(z2, len), (z2, len), (z2, len), (z2, 1), (zn2, len), (shift, 1)];
        let mut v = ctx.recv(P1, tag(1), &schema).await?.into_iter();
        let mut next = || v.next().expect("schema length");
        let q = bits_u8(&next());
        let r = bits_u8(&next());
        let r1 = bits_u8(&next());
        let r2 = next()[0] as u8;
        let tau = params.n2.elems(&next());
        let pi = next()[0] as usize;
        (Masks { first, me, a, r, r1, r2, tau, pi }, q)
    };

    let got = ctx.recv(P3, tag(4), &[(zn2, len), (zn2, len)]).await?;
    let e: Vec<Fe> = params.n2.elems(&got[0]).into_iter().zip(&masks.r).map(|(x, &b)| unflip(x, b, first)).collect();
    let alpha: Vec<Fe> = params.n2.elems(&got[1]).into_iter().zip(&q).map(|(x, &b)| unflip(x, b, first)).collect();
    let s_a: Fe = alpha.iter().copied().sum();
    let h = locate(ctx, params, proto::SC_SHARED_INPUTS, &masks, &e, opts).await?;
    let f = finish(ctx, params, Variant::SemiHonest, proto::SC_SHARED_INPUTS, &masks, &h, s_a, opts).await?;

    let parts: Vec<Fe> = helpers.iter().map(|_| rng.element(params.n)).collect();
    let mine = parts.iter().fold(f, |acc, &p| acc - p);
    for (&k, p) in helpers.iter().zip(&parts) {
        ctx.send(k, tag(11), &[Segment::new(zn, vec![p.value()])])?;
    }
    opts.tap("f_final", TapKind::Additive, params.n.modulus(), me, vec![mine.value()]);
    Ok(mine)
}
