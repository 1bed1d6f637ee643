//! The three-party protocol with private inputs at `P₁` and `P₂` and `P₃`
//! as a blind helper, plus its four-round variant.

use super::{circular_shift, circular_unshift, to_bits, CompareError, ComparisonParams, ScOptions, TapKind};
use crate::field::{Fe, Field};
use crate::net::{proto, Group, PartyCtx, PartyId, Segment, Tag};
use crate::sharing::Randomness;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    /// Five rounds; the result is mapped into `ℤ_N` at the end.
    SemiHonest,
    /// Four rounds; `h'` and `s_a` are shared directly in `ℤ_N`.
    LowRounds,
}

impl Variant {
    pub(super) fn proto(self) -> u8 {
        match self {
            Variant::SemiHonest => proto::SC_SEMI_HONEST,
            Variant::LowRounds => proto::SC_LOW_ROUNDS,
        }
    }
}

/// A party's part in a two-input comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    /// `P₁` holding `a`.
    First(u128),
    /// `P₂` holding `b`.
    Second(u128),
    /// `P₃`, no input and no output.
    Helper,
}

pub(super) const P1: PartyId = 1;
pub(super) const P2: PartyId = 2;
pub(super) const P3: PartyId = 3;

pub(super) fn vals(v: &[Fe]) -> Vec<u128> {
    v.iter().map(Fe::value).collect()
}

pub(super) fn bits_u128(v: &[u8]) -> Vec<u128> {
    v.iter().map(|&b| b as u128).collect()
}

pub(super) fn bits_u8(v: &[u128]) -> Vec<u8> {
    v.iter().map(|&b| b as u8).collect()
}

pub(super) fn random_bits<R: Randomness + ?Sized>(len: usize, rng: &mut R) -> Vec<u8> {
    (0..len).map(|_| rng.bit()).collect()
}

pub(super) fn xor(a: &[u8], b: &[u8]) -> Vec<u8> {
    a.iter().zip(b).map(|(x, y)| x ^ y).collect()
}

/// Two additive shares of each value; the first is returned to the caller's
/// side and the second is random.
pub(super) fn split<R: Randomness + ?Sized>(values: &[Fe], field: Field, rng: &mut R) -> (Vec<Fe>, Vec<Fe>) {
    let other: Vec<Fe> = values.iter().map(|_| rng.element(field)).collect();
    let mine = values.iter().zip(&other).map(|(&v, &o)| v - o).collect();
    (mine, other)
}

/// Undo a helper-side bit flip: when `bit` is set the shared value `x`
/// becomes `1 − x`, with `P₁` computing `1 − s` and `P₂` negating.
pub(super) fn unflip(share: Fe, bit: u8, first: bool) -> Fe {
    match (bit, first) {
        (0, _) => share,
        (_, true) => share.field().one() - share,
        (_, false) => -share,
    }
}

/// Values `P₁` and `P₂` both hold after the setup exchange.
pub(super) struct Masks {
    pub first: bool,
    pub me: PartyId,
    /// This party's `ℤ₂` share of `α` (P₁) or of `β`'s partner vector.
    pub a: Vec<u8>,
    pub r: Vec<u8>,
    pub r1: Vec<u8>,
    pub r2: u8,
    pub tau: Vec<Fe>,
    pub pi: usize,
}

/// Setup values drawn by `P₁`.
pub(super) fn draw_masks<R: Randomness + ?Sized>(
    params: &ComparisonParams,
    opts: &ScOptions,
    rng: &mut R,
) -> (Vec<u8>, Vec<u8>, u8, Vec<Fe>, usize) {
    let len = params.len();
    let r = random_bits(len, rng);
    let r1 = random_bits(len, rng);
    let r2 = rng.bit();
    let tau = (0..len).map(|_| rng.nonzero(params.n2)).collect();
    let pi = match opts.forced_shift {
        Some(p) => p % len,
        None => rng.below(len as u64) as usize,
    };
    (r, r1, r2, tau, pi)
}

fn tap_fe(opts: &ScOptions, name: &'static str, party: PartyId, v: &[Fe]) {
    if let Some(f) = v.first() {
        opts.tap(name, TapKind::Additive, f.field().modulus(), party, vals(v));
    }
}

/// Steps 5–6 at `P_j`: from `ℤ_{N₂}` shares of `e` (randomisation already
/// removed), build the masked rotated vector, send it to `P₃`, and return
/// this party's `ℤ₂` share of `h` rotated back into place.
pub(super) async fn locate(
    ctx: &PartyCtx,
    params: &ComparisonParams,
    proto: u8,
    m: &Masks,
    e: &[Fe],
    opts: &ScOptions,
) -> Result<Vec<u8>, CompareError> {
    let len = params.len();
    let ell = params.ell as usize;
    let mut gp = vec![params.n2.zero(); len];
    gp[ell] = e[ell];
    for i in (0..ell).rev() {
        gp[i] = gp[i + 1] + e[i];
    }
    let mut g = vec![params.n2.zero(); len];
    g[ell] = gp[ell];
    for i in (0..ell).rev() {
        g[i] = gp[i + 1] + gp[i];
    }
    tap_fe(opts, "gamma_prime", m.me, &gp);
    tap_fe(opts, "gamma", m.me, &g);
    if m.first {
        for x in g.iter_mut() {
            *x -= params.n2.one();
        }
    }
    tap_fe(opts, "gamma_minus_one", m.me, &g);
    let u: Vec<Fe> = g.iter().zip(&m.tau).map(|(&x, &t)| x * t).collect();
    tap_fe(opts, "u", m.me, &u);
    let v = circular_shift(&u, m.pi);
    tap_fe(opts, "v", m.me, &v);

    let zn2 = Group::zn2(params.n2);
    ctx.send(P3, Tag::new(proto, 5), &[Segment::new(zn2, vals(&v))])?;
    let h = bits_u8(&ctx.recv_vec(P3, Tag::new(proto, 6), Group::z2(), len).await?);
    let h = circular_unshift(&h, m.pi);
    opts.tap("h", TapKind::Additive, 2, m.me, bits_u128(&h));
    Ok(h)
}

/// Steps 7–11 at `P_j`, ending with this party's `ℤ_N` share of `f`.
pub(super) async fn finish(
    ctx: &PartyCtx,
    params: &ComparisonParams,
    variant: Variant,
    proto: u8,
    m: &Masks,
    h: &[u8],
    s_a: Fe,
    opts: &ScOptions,
) -> Result<Fe, CompareError> {
    let len = params.len();
    let hp = xor(h, &m.a);
    opts.tap("h_prime", TapKind::Additive, 2, m.me, bits_u128(&hp));
    let sent = if m.first { xor(&hp, &m.r1) } else { hp };
    ctx.send(P3, Tag::new(proto, 7), &[Segment::new(Group::z2(), bits_u128(&sent))])?;

    let field = match variant {
        Variant::SemiHonest => params.n2,
        Variant::LowRounds => params.n,
    };
    let group = match variant {
        Variant::SemiHonest => Group::zn2(params.n2),
        Variant::LowRounds => Group::zn(params.n, params.ell),
    };
    let got = field.elems(&ctx.recv_vec(P3, Tag::new(proto, 8), group, len).await?);
    let hp: Vec<Fe> = got.iter().zip(&m.r1).map(|(&x, &b)| unflip(x, b, m.first)).collect();
    let s_ap: Fe = hp.iter().copied().sum();
    opts.tap("s_a", TapKind::Additive, field.modulus(), m.me, vec![s_a.value()]);
    opts.tap("s_a_prime", TapKind::Additive, field.modulus(), m.me, vec![s_ap.value()]);
    let mut f = s_a - s_ap;
    opts.tap("f_signed", TapKind::Additive, field.modulus(), m.me, vec![f.value()]);
    if m.first {
        f += field.one();
    }
    f *= field.elem(2).inv()?;
    if variant == Variant::LowRounds {
        opts.tap("f", TapKind::Additive, field.modulus(), m.me, vec![f.value()]);
        return Ok(f);
    }

    let f = unflip(f, m.r2, m.first);
    ctx.send(P3, Tag::new(proto, 9), &[Segment::new(Group::zn2(params.n2), vec![f.value()])])?;
    let zn = Group::zn(params.n, params.ell);
    let f = params.n.elem(ctx.recv_vec(P3, Tag::new(proto, 10), zn, 1).await?[0]);
    let f = unflip(f, m.r2, m.first);
    opts.tap("f", TapKind::Additive, params.n.modulus(), m.me, vec![f.value()]);
    Ok(f)
}

/// Reconstruct what `P₁` and `P₂` sent under `tag`.
pub(super) async fn gather(ctx: &PartyCtx, tag: Tag, group: Group, len: usize) -> Result<[Vec<u128>; 2], CompareError> {
    let x1 = ctx.recv_vec(P1, tag, group, len).await?;
    let x2 = ctx.recv_vec(P2, tag, group, len).await?;
    Ok([x1, x2])
}

fn add_mod(a: &[u128], b: &[u128], m: u128) -> Vec<u128> {
    a.iter().zip(b).map(|(x, y)| (x + y) % m).collect()
}

/// Send fresh two-party shares of `values` in `field` to `P₁` and `P₂`.
pub(super) fn reshare<R: Randomness + ?Sized>(
    ctx: &PartyCtx,
    tag: Tag,
    group: Group,
    field: Field,
    values: &[u128],
    rng: &mut R,
) -> Result<(), CompareError> {
    let (s1, s2) = split(&field.elems(values), field, rng);
    ctx.send(P1, tag, &[Segment::new(group, vals(&s1))])?;
    ctx.send(P2, tag, &[Segment::new(group, vals(&s2))])?;
    Ok(())
}

/// `P₃` from step 5 onwards.
pub(super) async fn helper_tail<R: Randomness + ?Sized>(
    ctx: &PartyCtx,
    params: &ComparisonParams,
    variant: Variant,
    proto: u8,
    opts: &ScOptions,
    rng: &mut R,
) -> Result<(), CompareError> {
    let len = params.len();
    let zn2 = Group::zn2(params.n2);
    let [v1, v2] = gather(ctx, Tag::new(proto, 5), zn2, len).await?;
    let v = add_mod(&v1, &v2, params.n2.modulus());
    opts.tap("helper_v", TapKind::Plain, params.n2.modulus(), P3, v.clone());
    let zeros: Vec<usize> = (0..len).filter(|&i| v[i] == 0).collect();
    let [k] = zeros[..] else {
        return Err(CompareError::NoUniqueZero(zeros.len()));
    };
    opts.tap("helper_k", TapKind::Plain, len as u128, P3, vec![k as u128]);
    let mut h = vec![0u8; len];
    h[k] = 1;
    opts.tap("helper_h", TapKind::Plain, 2, P3, bits_u128(&h));
    let h2 = random_bits(len, rng);
    let h1 = xor(&h, &h2);
    ctx.send(P1, Tag::new(proto, 6), &[Segment::new(Group::z2(), bits_u128(&h1))])?;
    ctx.send(P2, Tag::new(proto, 6), &[Segment::new(Group::z2(), bits_u128(&h2))])?;

    let [x1, x2] = gather(ctx, Tag::new(proto, 7), Group::z2(), len).await?;
    let hp = add_mod(&x1, &x2, 2);
    opts.tap("helper_h_prime", TapKind::Plain, 2, P3, hp.clone());
    match variant {
        Variant::SemiHonest => reshare(ctx, Tag::new(proto, 8), zn2, params.n2, &hp, rng)?,
        Variant::LowRounds => {
            reshare(ctx, Tag::new(proto, 8), Group::zn(params.n, params.ell), params.n, &hp, rng)?;
            return Ok(());
        }
    }

    let [f1, f2] = gather(ctx, Tag::new(proto, 9), zn2, 1).await?;
    let f = add_mod(&f1, &f2, params.n2.modulus());
    opts.tap("helper_f", TapKind::Plain, params.n2.modulus(), P3, f.clone());
    reshare(ctx, Tag::new(proto, 10), Group::zn(params.n, params.ell), params.n, &f, rng)
}

fn check_role(ctx: &PartyCtx, role: Role) -> Result<(), CompareError> {
    let want = match role {
        Role::First(_) => P1,
        Role::Second(_) => P2,
        Role::Helper => P3,
    };
    if ctx.me() != want {
        return Err(CompareError::BadParams(format!("role {role:?} belongs to party {want}, not {}", ctx.me())));
    }
    Ok(())
}

async fn two_party<R: Randomness + ?Sized>(
    ctx: &PartyCtx,
    params: &ComparisonParams,
    variant: Variant,
    role: Role,
    opts: &ScOptions,
    rng: &mut R,
) -> Result<Option<Fe>, CompareError> {
    check_role(ctx, role)?;
    let proto = variant.proto();
    let len = params.len();
    let (z2, zn2, shift) = (Group::z2(), Group::zn2(params.n2), Group::shift(params.ell));
    let (sa_field, sa_group) = match variant {
        Variant::SemiHonest => (params.n2, zn2),
        Variant::LowRounds => (params.n, Group::zn(params.n, params.ell)),
    };
    let tag = |s| Tag::new(proto, s);

    let (m, s_a) = match role {
        Role::Helper => {
            let [e1, e2] = gather(ctx, tag(3), z2, len).await?;
            let e = add_mod(&e1, &e2, 2);
            opts.tap("helper_e", TapKind::Plain, 2, P3, e.clone());
            reshare(ctx, tag(4), zn2, params.n2, &e, rng)?;
            helper_tail(ctx, params, variant, proto, opts, rng).await?;
            return Ok(None);
        }
        Role::First(a) => {
            params.check_input(a)?;
            let alpha = to_bits(2 * a + 1, len);
            let s_a = sa_field.elem(alpha.iter().map(|&b| b as u128).sum());
            let (r, r1, r2, tau, pi) = draw_masks(params, opts, rng);
            let a2 = random_bits(len, rng);
            let a1 = xor(&alpha, &a2);
            let (sa1, sa2) = split(&[s_a], sa_field, rng);
            ctx.send(
                P2,
                tag(1),
                &[
                    Segment::new(z2, bits_u128(&a2)),
                    Segment::new(sa_group, vals(&sa2)),
                    Segment::new(z2, bits_u128(&r)),
                    Segment::new(z2, bits_u128(&r1)),
                    Segment::new(z2, vec![r2 as u128]),
                    Segment::new(zn2, vals(&tau)),
                    Segment::new(shift, vec![pi as u128]),
                ],
            )?;
            let b1 = bits_u8(&ctx.recv_vec(P2, tag(2), z2, len).await?);
            let e = xor(&a1, &b1);
            (Masks { first: true, me: P1, a: a1, r, r1, r2, tau, pi }, (sa1[0], e))
        }
        Role::Second(b) => {
            params.check_input(b)?;
            let beta = to_bits(2 * b, len);
            let b1 = random_bits(len, rng);
            let b2 = xor(&beta, &b1);
            ctx.send(P1, tag(2), &[Segment::new(z2, bits_u128(&b1))])?;
            let schema = [(z2, len), (sa_group, 1), (z2, len), (z2, len), (z2, 1), (zn2, len), (shift, 1)];
            let mut v = ctx.recv(P1, tag(1), &schema).await?.into_iter();
            let mut next = || v.next().expect("schema length");
            let a2 = bits_u8(&next());
            let sa2 = sa_field.elem(next()[0]);
            let r = bits_u8(&next());
            let r1 = bits_u8(&next());
            let r2 = next()[0] as u8;
            let tau = params.n2.elems(&next());
            let pi = next()[0] as usize;
            let e = xor(&a2, &b2);
            (Masks { first: false, me: P2, a: a2, r, r1, r2, tau, pi }, (sa2, e))
        }
    };
    let (s_a, e) = s_a;
    opts.tap("e", TapKind::Additive, 2, m.me, bits_u128(&e));
    let sent = if m.first { xor(&e, &m.r) } else { e };
    ctx.send(P3, tag(3), &[Segment::new(z2, bits_u128(&sent))])?;
    let got = params.n2.elems(&ctx.recv_vec(P3, tag(4), zn2, len).await?);
    let e: Vec<Fe> = got.iter().zip(&m.r).map(|(&x, &b)| unflip(x, b, m.first)).collect();
    let h = locate(ctx, params, proto, &m, &e, opts).await?;
    Ok(Some(finish(ctx, params, variant, proto, &m, &h, s_a, opts).await?))
}

/// Five-round comparison. `P₁` and `P₂` end with additive `ℤ_N` shares of
/// `[a ≥ b]`; the helper returns `None`.
pub async fn sc_semi_honest<R: Randomness + ?Sized>(
    ctx: &PartyCtx,
    params: &ComparisonParams,
    role: Role,
    opts: &ScOptions,
    rng: &mut R,
) -> Result<Option<Fe>, CompareError> {
    two_party(ctx, params, Variant::SemiHonest, role, opts, rng).await
}

/// Four-round comparison trading one round for `ℤ_N`-sized `h'` shares.
pub async fn sc_low_rounds<R: Randomness + ?Sized>(
    ctx: &PartyCtx,
    params: &ComparisonParams,
    role: Role,
    opts: &ScOptions,
    rng: &mut R,
) -> Result<Option<Fe>, CompareError> {
    two_party(ctx, params, Variant::LowRounds, role, opts, rng).await
}
