//! One-call simulated runs of each comparison protocol.

use super::{
    sc_low_rounds, sc_malicious, sc_semi_honest, sc_shared_inputs, to_bits, CompareError, ComparisonParams, Role,
    ScOptions, Taps, Variant,
};
use crate::field::Fe;
use crate::net::{PartyId, ProtocolError, Simulation, Transcript};
use crate::sharing::{shamir_reveal, shamir_share, RandomSource, Randomness, ShamirParams, ShamirShare};

/// Outcome of a simulated comparison.
#[derive(Debug, Clone)]
pub struct ComparisonRun {
    /// The revealed result, 1 when `a ≥ b`.
    pub f: u128,
    /// Each output party's share.
    pub shares: Vec<(PartyId, Fe)>,
    pub transcript: Transcript,
    pub taps: Taps,
}

fn options(forced_shift: Option<usize>) -> (ScOptions, Taps) {
    let taps = Taps::new();
    (ScOptions { forced_shift, taps: Some(taps.clone()) }, taps)
}

fn net(e: crate::net::NetError) -> CompareError {
    CompareError::Protocol(ProtocolError::Net(e))
}

/// `P₁` holds `a`, `P₂` holds `b`, `P₃` helps. Party `i` draws from
/// `RandomSource::from_u64(seed).for_party(i)`.
pub fn run_two_party(
    variant: Variant,
    params: &ComparisonParams,
    a: u128,
    b: u128,
    seed: u64,
    forced_shift: Option<usize>,
) -> Result<ComparisonRun, CompareError> {
    params.check_input(a)?;
    params.check_input(b)?;
    let (opts, taps) = options(forced_shift);
    let src = RandomSource::from_u64(seed);
    let params = *params;
    let mut sim = Simulation::new(seed);
    for (id, role) in [(1, Role::First(a)), (2, Role::Second(b)), (3, Role::Helper)] {
        let mut rng = src.for_party(id);
        let opts = opts.clone();
        sim.add_party(id, move |ctx| async move {
            match variant {
                Variant::SemiHonest => sc_semi_honest(&ctx, &params, role, &opts, &mut rng).await,
                Variant::LowRounds => sc_low_rounds(&ctx, &params, role, &opts, &mut rng).await,
            }
        });
    }
    let report = sim.run().map_err(net)?;
    let mut shares = Vec::new();
    for (id, out) in report.outputs {
        if let Some(s) = out? {
            shares.push((id, s));
        }
    }
    let f = shares.iter().map(|(_, s)| *s).sum::<Fe>().value();
    Ok(ComparisonRun { f, shares, transcript: report.transcript, taps })
}

/// `ℤ₂` shares of the low `ℓ` bits of `x` for `m` parties.
pub fn share_bits_additive<R: Randomness + ?Sized>(x: u128, ell: u32, m: usize, rng: &mut R) -> Vec<Vec<u8>> {
    let bits = to_bits(x, ell as usize);
    let mut out: Vec<Vec<u8>> = (1..m).map(|_| (0..ell).map(|_| rng.bit()).collect()).collect();
    let last = (0..ell as usize).map(|i| out.iter().fold(bits[i], |acc, s| acc ^ s[i])).collect();
    out.push(last);
    out
}

/// Shamir shares of the low `ℓ` bits of `x`; entry `j` is party `j + 1`'s
/// vector.
pub fn share_bits_shamir<R: Randomness + ?Sized>(
    x: u128,
    ell: u32,
    params: ShamirParams,
    rng: &mut R,
) -> Result<Vec<Vec<ShamirShare>>, CompareError> {
    let mut out = vec![Vec::new(); params.n];
    for bit in to_bits(x, ell as usize) {
        for (j, s) in shamir_share(params.field.elem(bit as u128), params, rng)?.into_iter().enumerate() {
            out[j].push(s);
        }
    }
    Ok(out)
}

/// `m` parties holding `ℤ₂` bit shares of `a` and `b`, dealt from
/// `RandomSource::from_u64(seed).derive(b"deal")`.
pub fn run_shared_inputs(params: &ComparisonParams, m: usize, a: u128, b: u128, seed: u64) -> Result<ComparisonRun, CompareError> {
    params.check_input(a)?;
    params.check_input(b)?;
    let src = RandomSource::from_u64(seed);
    let mut deal = src.derive(b"deal");
    let sa = share_bits_additive(a, params.ell, m, &mut deal);
    let sb = share_bits_additive(b, params.ell, m, &mut deal);
    let (opts, taps) = options(None);
    let params = *params;
    let mut sim = Simulation::new(seed);
    for (j, (x, y)) in sa.into_iter().zip(sb).enumerate() {
        let id = j as PartyId + 1;
        let mut rng = src.for_party(id);
        let opts = opts.clone();
        sim.add_party(id, move |ctx| async move { sc_shared_inputs(&ctx, &params, m, &x, &y, &opts, &mut rng).await });
    }
    let report = sim.run().map_err(net)?;
    let mut shares = Vec::new();
    for (id, out) in report.outputs {
        shares.push((id, out?));
    }
    let f = shares.iter().map(|(_, s)| *s).sum::<Fe>().value();
    Ok(ComparisonRun { f, shares, transcript: report.transcript, taps })
}

/// `2t + 1` parties holding Shamir bit shares of `a` and `b` over `ℤ_N`.
pub fn run_malicious(params: &ComparisonParams, t: usize, a: u128, b: u128, seed: u64) -> Result<ComparisonRun, CompareError> {
    params.check_input(a)?;
    params.check_input(b)?;
    let sp = ShamirParams::new(params.n, t, 2 * t + 1)?;
    let src = RandomSource::from_u64(seed);
    let mut deal = src.derive(b"deal");
    let sa = share_bits_shamir(a, params.ell, sp, &mut deal)?;
    let sb = share_bits_shamir(b, params.ell, sp, &mut deal)?;
    let (opts, taps) = options(None);
    let params = *params;
    let mut sim = Simulation::new(seed);
    for (j, (x, y)) in sa.into_iter().zip(sb).enumerate() {
        let id = j as PartyId + 1;
        let mut rng = src.for_party(id);
        let opts = opts.clone();
        sim.add_party(id, move |ctx| async move { sc_malicious(&ctx, &params, &x, &y, &opts, &mut rng).await });
    }
    let report = sim.run().map_err(net)?;
    let mut out = Vec::new();
    for (_, s) in report.outputs {
        out.push(s?);
    }
    let f = shamir_reveal(&out)?.value();
    let shares = out.iter().map(|s| (s.index as PartyId, s.value)).collect();
    Ok(ComparisonRun { f, shares, transcript: report.transcript, taps })
}
