//! Symmetric comparison over Shamir shares in `ℤ_N`, using only local
//! linear steps and degree-reduction multiplication.

use super::{CompareError, ComparisonParams, ScOptions, TapKind};
use crate::field::Fe;
use crate::net::{ceil_log2, proto, PartyCtx, Tag};
use crate::sharing::{shamir_mult, Randomness, ShamirShare};

fn tap(opts: &ScOptions, name: &'static str, shares: &[ShamirShare]) {
    if let Some(s) = shares.first() {
        let values = shares.iter().map(|x| x.value.value()).collect();
        opts.tap(name, TapKind::Shamir, s.params.field.modulus(), s.index as u8, values);
    }
}

/// `x ⊕ y = x + y − 2xy` for shared bits, element-wise in one exchange.
pub async fn shamir_xor<R: Randomness + ?Sized>(
    ctx: &PartyCtx,
    tag: Tag,
    x: &[ShamirShare],
    y: &[ShamirShare],
    rng: &mut R,
) -> Result<Vec<ShamirShare>, CompareError> {
    let xy = shamir_mult(ctx, tag, x, y, rng).await?;
    Ok(x.iter()
        .zip(y)
        .zip(xy)
        .map(|((a, b), p)| {
            let two = a.params.field.elem(2);
            ShamirShare { value: a.value + b.value - two * p.value, ..*a }
        })
        .collect())
}

/// Products of several lists of shared values, computed as a balanced
/// pairwise tree. All lists advance together, so the call takes
/// `⌈log₂ k⌉` exchanges for the longest list length `k`, the `d`-th using
/// step `tag.step + d`.
pub async fn mult_fanin<R: Randomness + ?Sized>(
    ctx: &PartyCtx,
    tag: Tag,
    mut lists: Vec<Vec<ShamirShare>>,
    rng: &mut R,
) -> Result<Vec<ShamirShare>, CompareError> {
    if lists.iter().any(Vec::is_empty) {
        return Err(CompareError::BadParams("empty product".into()));
    }
    let mut level = 0u8;
    while lists.iter().any(|l| l.len() > 1) {
        let mut left = Vec::new();
        let mut right = Vec::new();
        for l in &lists {
            for pair in l.chunks_exact(2) {
                left.push(pair[0]);
                right.push(pair[1]);
            }
        }
        let step = Tag::new(tag.protocol, tag.step + level);
        let mut prods = shamir_mult(ctx, step, &left, &right, rng).await?.into_iter();
        for l in lists.iter_mut() {
            let odd = (l.len() % 2 == 1).then(|| l[l.len() - 1]);
            let next: Vec<ShamirShare> = (0..l.len() / 2).map(|_| prods.next().expect("one product per pair")).collect();
            *l = next.into_iter().chain(odd).collect();
        }
        level += 1;
    }
    Ok(lists.into_iter().map(|l| l[0]).collect())
}

/// Exchanges used by [`sc_malicious`] for bit width `ℓ`.
pub(crate) fn fanin_levels(ell: u32) -> u8 {
    ceil_log2(ell as u64 + 1) as u8
}

/// Compare `a ≥ b` from Shamir shares of their `ℓ` bits (least significant
/// first) over the output field. Every party ends with a Shamir share of
/// the result.
pub async fn sc_malicious<R: Randomness + ?Sized>(
    ctx: &PartyCtx,
    params: &ComparisonParams,
    a: &[ShamirShare],
    b: &[ShamirShare],
    opts: &ScOptions,
    rng: &mut R,
) -> Result<ShamirShare, CompareError> {
    let ell = params.ell as usize;
    if a.len() != ell || b.len() != ell {
        return Err(CompareError::BadParams(format!("bit shares must have {ell} entries")));
    }
    let sp = a[0].params;
    if sp.field != params.n {
        return Err(CompareError::BadParams("bit shares must live in the output field".into()));
    }
    let field = sp.field;
    let me = a[0].index;
    let konst = |c: u128| ShamirShare::constant(me, field.elem(c), sp);
    let tag = |s| Tag::new(proto::SC_MALICIOUS, s);

    let alpha: Vec<ShamirShare> = std::iter::once(konst(1)).chain(a.iter().copied()).collect();
    let beta: Vec<ShamirShare> = std::iter::once(konst(0)).chain(b.iter().copied()).collect();
    let s_a: Fe = alpha.iter().map(|x| x.value).sum();
    let e = shamir_xor(ctx, tag(1), &alpha, &beta, rng).await?;
    tap(opts, "e", &e);

    // E[i][k] = e_i ⊕ e_k for k < i, flattened row by row.
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for i in 1..=ell {
        for k in 0..i {
            xs.push(e[i]);
            ys.push(e[k]);
        }
    }
    let flat = shamir_xor(ctx, tag(2), &xs, &ys, rng).await?;
    tap(opts, "E", &flat);
    let row = |i: usize| i * (i - 1) / 2;

    // v_k is 1 exactly when e_k = 1 and every higher e_i = 0.
    let lists: Vec<Vec<ShamirShare>> =
        (0..ell).map(|k| std::iter::once(e[k]).chain((k + 1..=ell).map(|i| flat[row(i) + k])).collect()).collect();
    let mut v = mult_fanin(ctx, tag(3), lists, rng).await?;
    v.push(e[ell]);
    tap(opts, "v", &v);

    let h = shamir_xor(ctx, tag(3 + fanin_levels(params.ell)), &alpha, &v, rng).await?;
    tap(opts, "h", &h);
    let s_ap: Fe = h.iter().map(|x| x.value).sum();
    tap(opts, "s_a_prime", &[ShamirShare { value: s_ap, ..konst(0) }]);
    let f = (s_a - s_ap + field.one()) * field.elem(2).inv()?;
    let f = ShamirShare { value: f, ..konst(0) };
    tap(opts, "f", &[f]);
    Ok(f)
}
