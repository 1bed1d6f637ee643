use super::{delta_prime, DualError, DualShare};
use crate::field::{berlekamp_welch, interpolate, Decoding, EvalPoint, Fe, Field, Polynomial};
use crate::net::{decode_elements, encode_elements, proto, Envelope, Group, HookAction, PartyCtx, PartyId, Segment, Tag};

pub const PHASE1: Tag = Tag::new(proto::DUAL_OUTPUT_CHECK, 1);
pub const PHASE2: Tag = Tag::new(proto::DUAL_OUTPUT_CHECK, 2);

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum VerdictStatus {
    Honest(Fe),
    /// The phase-one shares did not reconstruct zero; phase two never ran.
    ZeroCheckFailed,
    /// The recovered Shamir shares need a polynomial of degree above `t`.
    DegreeViolation { polynomial: Polynomial, suspects: Vec<usize> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutputVerdict {
    pub status: VerdictStatus,
    /// Sum of the broadcast additive shares, when phase two ran.
    pub reconstructed_secret: Option<Fe>,
    /// Phase-one broadcasts of parties `1..=n`.
    pub zero_shares: Vec<Fe>,
    pub zero_polynomial: Polynomial,
    /// Interpolation of the Shamir shares recovered in phase two.
    pub restored_polynomial: Option<Polynomial>,
}

impl OutputVerdict {
    pub fn is_honest(&self) -> bool {
        matches!(self.status, VerdictStatus::Honest(_))
    }
}

async fn broadcast_one(ctx: &PartyCtx, tag: Tag, n: usize, mine: Fe) -> Result<Vec<Fe>, DualError> {
    let field = mine.field();
    let group = Group::field(field);
    let everyone = 1..=n as PartyId;
    ctx.send_all(everyone.clone(), tag, &[Segment::new(group, vec![mine.value()])])?;
    let mut out = Vec::with_capacity(n);
    for p in everyone {
        if p == ctx.me() {
            out.push(mine);
        } else {
            out.push(field.elem(ctx.recv_vec(p, tag, group, 1).await?[0]));
        }
    }
    Ok(out)
}

fn points(field: Field, ys: &[Fe]) -> Vec<EvalPoint> {
    ys.iter().enumerate().map(|(i, &y)| EvalPoint::new(field.elem(i as u128 + 1), y)).collect()
}

/// Suspects behind a degree violation. With `n ≥ 3t + 1` Reed–Solomon
/// decoding locates the bad points; otherwise a party is named only if it
/// is the unique one whose exclusion leaves a degree-`≤ t` fit.
fn suspects(pts: &[EvalPoint], t: usize) -> Vec<usize> {
    let n = pts.len();
    if n >= 3 * t + 1 {
        let e = (n - t - 1) / 2;
        if let Ok(Decoding::Recovered { bad, .. }) = berlekamp_welch(pts, t, e) {
            return bad.into_iter().map(|x| x as usize).collect();
        }
        return Vec::new();
    }
    let fits: Vec<usize> = (0..n)
        .filter(|&j| {
            let rest: Vec<EvalPoint> = pts.iter().enumerate().filter(|&(k, _)| k != j).map(|(_, p)| *p).collect();
            interpolate(&rest).map(|p| p.degree() <= t as isize).unwrap_or(false)
        })
        .collect();
    match fits.as_slice() {
        [j] => vec![j + 1],
        _ => Vec::new(),
    }
}

/// Reveal a dual-shared value, checking both sharings against each other.
pub async fn output_check(ctx: &PartyCtx, share: &DualShare) -> Result<OutputVerdict, DualError> {
    let params = share.params();
    let (field, t, n) = (params.field(), params.t(), params.n());
    let me = share.index();
    if ctx.me() as usize != me {
        return Err(DualError::BadParams(format!("share {me} held by party {}", ctx.me())));
    }
    let indices: Vec<usize> = (1..=n).collect();
    let shift = |j: usize, a: Fe| delta_prime(a, j, &indices);

    let zero_share = share.shamir.value - shift(me, share.additive.value)?;
    let zero_shares = broadcast_one(ctx, PHASE1, n, zero_share).await?;
    let zero_polynomial = interpolate(&points(field, &zero_shares))?;
    if !zero_polynomial.constant().is_zero() {
        return Ok(OutputVerdict {
            status: VerdictStatus::ZeroCheckFailed,
            reconstructed_secret: None,
            zero_shares,
            zero_polynomial,
            restored_polynomial: None,
        });
    }

    let additive = broadcast_one(ctx, PHASE2, n, share.additive.value).await?;
    let secret: Fe = additive.iter().copied().sum();
    let restored: Vec<Fe> = zero_shares
        .iter()
        .zip(&additive)
        .enumerate()
        .map(|(i, (&z, &a))| Ok(z + shift(i + 1, a)?))
        .collect::<Result<_, DualError>>()?;
    let pts = points(field, &restored);
    let polynomial = interpolate(&pts)?;
    let status = if polynomial.degree() <= t as isize && polynomial.constant() == secret {
        VerdictStatus::Honest(secret)
    } else {
        VerdictStatus::DegreeViolation { suspects: suspects(&pts, t), polynomial: polynomial.clone() }
    };
    Ok(OutputVerdict {
        status,
        reconstructed_secret: Some(secret),
        zero_shares,
        zero_polynomial,
        restored_polynomial: Some(polynomial),
    })
}

/// Adversary hook making `party` broadcast its additive share plus `delta`
/// during phase two, after an honest phase one.
pub fn phase2_lie_hook(party: PartyId, delta: Fe) -> impl FnMut(&Envelope, PartyId) -> HookAction {
    let group = Group::field(delta.field());
    move |env, _to| {
        if env.sender != party || env.tag != PHASE2 {
            return HookAction::Pass;
        }
        let Ok(v) = decode_elements(&env.payload, &[(group, 1)]) else {
            return HookAction::Pass;
        };
        let lied = (delta.field().elem(v[0][0]) + delta).value();
        HookAction::Replace(encode_elements(&[Segment::new(group, vec![lied])]).expect("value in range"))
    }
}
