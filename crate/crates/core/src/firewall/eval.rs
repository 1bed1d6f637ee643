//! Server and gateway sides of an evaluation, plus a simulated run.
//!
//! Step 1 carries the address from the gateway to every server, step 2 the
//! result shares back. Product evaluation multiplies in between (steps 3
//! onward). Agreement additionally has the servers exchange result shares
//! and send the gateway a vote.

use std::net::Ipv4Addr;

use super::analysis::{combinational_analysis, majority_vote, reveal_combinations, Analysis, Reveal};
use super::{FirewallConfig, FirewallError, Scheme, ServerShares};
use crate::compare::{mult_fanin, CompareError};
use crate::field::{berlekamp_welch, Decoding, EvalPoint, Fe, Field};
use crate::net::{proto, Group, PartyCtx, PartyId, ProtocolError, Segment, Simulation, Tag, Transcript};
use crate::sharing::{additive_mult3, AdditiveShare, RandomSource, Randomness, ShamirShare};

/// Party id of the gateway; servers are `1..=m`.
pub const GATEWAY: PartyId = 0;

/// Votes travel as `ℤ₃` elements.
const VOTE_FORWARD: u128 = 0;
const VOTE_BLOCK: u128 = 1;
const VOTE_UNDECIDED: u128 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalMode {
    /// Sum of the indexed shares; block iff it reveals `κ`.
    Sum,
    /// Product of the indexed shares; block iff it reveals 1. Shamir results
    /// are checked across every reveal subset.
    Product,
    /// Product, decoded with Berlekamp–Welch instead of subset reveals.
    BerlekampWelch,
    /// Product, with every server also reconstructing and voting.
    Agreement,
}

impl EvalMode {
    /// Protocol id of the messages the gateway opens a session with.
    pub fn protocol(self) -> u8 {
        match self {
            EvalMode::Sum => proto::FW_EVAL_SUM,
            _ => proto::FW_EVAL_PRODUCT,
        }
    }

    fn multiplies(self) -> bool {
        self != EvalMode::Sum
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Decision {
    Block,
    Forward,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvalVerdict {
    pub decision: Decision,
    /// The result shares were inconsistent.
    pub alert: bool,
    /// Servers blamed for the inconsistency.
    pub suspects: Vec<PartyId>,
    /// The value the gateway reconstructed, if it could decide one.
    pub value: Option<u128>,
    /// One entry per reveal subset (Shamir sum/product/agreement).
    pub reveals: Vec<Reveal>,
    pub responders: Vec<PartyId>,
    /// `(party, vote)` in agreement mode, gateway first; 2 is undecided.
    pub votes: Vec<(PartyId, u128)>,
}

impl EvalVerdict {
    /// Reply line of the gateway protocol, without the newline.
    pub fn line(&self) -> String {
        if self.alert {
            let s: Vec<String> = self.suspects.iter().map(|p| p.to_string()).collect();
            format!("ALERT {}", if s.is_empty() { "unknown".to_string() } else { s.join(",") })
        } else {
            match self.decision {
                Decision::Block => "BLOCK".into(),
                Decision::Forward => "FORWARD".into(),
            }
        }
    }
}

/// Deviations a server can be told to make, for exercising detection.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ServeOptions {
    /// Added to the result share before it is sent anywhere.
    pub result_offset: u128,
    /// Send the opposite vote in agreement mode.
    pub flip_vote: bool,
}

fn compare_err(e: CompareError) -> FirewallError {
    match e {
        CompareError::Protocol(p) => FirewallError::Protocol(p),
        CompareError::Sharing(s) => FirewallError::Sharing(s),
        CompareError::Field(f) => FirewallError::Field(f),
        other => FirewallError::BadParams(other.to_string()),
    }
}

fn check_mode(config: &FirewallConfig, mode: EvalMode) -> Result<(), FirewallError> {
    config.validate()?;
    if mode.multiplies() && !config.supports_product() {
        return Err(FirewallError::Unsupported(format!("{mode:?} evaluation with {:?} and m = {}", config.scheme, config.m)));
    }
    if matches!(mode, EvalMode::BerlekampWelch | EvalMode::Agreement) && config.scheme == Scheme::Additive {
        return Err(FirewallError::Unsupported(format!("{mode:?} evaluation over additive shares")));
    }
    Ok(())
}

fn target(config: &FirewallConfig, mode: EvalMode) -> u128 {
    match mode {
        EvalMode::Sum => config.bloom.kappa as u128,
        _ => 1,
    }
}

fn decide(value: u128, target: u128) -> Decision {
    if value == target {
        Decision::Block
    } else {
        Decision::Forward
    }
}

/// Whether a receive failure means "this sender did not deliver".
fn missing(e: &ProtocolError) -> bool {
    matches!(e, ProtocolError::PartyTimeout { .. } | ProtocolError::Codec(_))
}

async fn product<R: Randomness + ?Sized>(
    ctx: &PartyCtx,
    shares: &ServerShares,
    values: Vec<Fe>,
    rng: &mut R,
) -> Result<Fe, FirewallError> {
    let c = &shares.config;
    let p = proto::FW_EVAL_PRODUCT;
    match c.scheme {
        Scheme::Shamir { .. } => {
            let sp = c.shamir_params().unwrap();
            let list = values.into_iter().map(|v| ShamirShare::new(shares.index, v, sp)).collect();
            let out = mult_fanin(ctx, Tag::new(p, 3), vec![list], rng).await.map_err(compare_err)?;
            Ok(out[0].value)
        }
        Scheme::Additive => {
            let ap = c.additive_params().unwrap();
            let mut level: Vec<AdditiveShare> =
                values.into_iter().map(|v| AdditiveShare::new(shares.index, v, ap)).collect();
            let mut d = 0u8;
            while level.len() > 1 {
                let odd = (level.len() % 2 == 1).then(|| level[level.len() - 1]);
                let (u, v): (Vec<_>, Vec<_>) = level.chunks_exact(2).map(|w| (w[0], w[1])).unzip();
                let tags = (Tag::new(p, 3 + 2 * d), Tag::new(p, 4 + 2 * d));
                level = additive_mult3(ctx, tags, &u, &v, rng).await?;
                level.extend(odd);
                d += 1;
            }
            Ok(level[0].value)
        }
    }
}

/// Reconstruct from `(party, share)` pairs by subset analysis.
fn analyse(config: &FirewallConfig, shares: &[(PartyId, Fe)]) -> Result<(Analysis, Vec<Reveal>), FirewallError> {
    match config.scheme {
        Scheme::Additive => {
            let v: Fe = shares.iter().map(|(_, s)| *s).sum();
            Ok((Analysis::Agree(v.value()), Vec::new()))
        }
        Scheme::Shamir { reveal_size } => {
            let reveals = reveal_combinations(shares, reveal_size)?;
            Ok((combinational_analysis(&reveals), reveals))
        }
    }
}

/// One server's side of an evaluation.
pub async fn serve<R: Randomness + ?Sized>(
    ctx: &PartyCtx,
    shares: &ServerShares,
    mode: EvalMode,
    opts: &ServeOptions,
    rng: &mut R,
) -> Result<(), FirewallError> {
    let c = &shares.config;
    check_mode(c, mode)?;
    if ctx.me() != shares.party() {
        return Err(FirewallError::BadParams(format!("server {} running as party {}", shares.index, ctx.me())));
    }
    let p = mode.protocol();
    let addr = ctx.recv_vec(GATEWAY, Tag::new(p, 1), Group::ipv4(), 1).await?[0];
    let addr = Ipv4Addr::from(addr as u32);
    let values: Vec<Fe> = shares
        .indexer
        .indices(&addr.octets(), c.bloom.beta)
        .into_iter()
        .map(|i| shares.shares[i as usize])
        .collect();
    let mut result = if mode.multiplies() { product(ctx, shares, values, rng).await? } else { values.into_iter().sum() };
    result = result + c.field.elem(opts.result_offset);

    let group = Group::field(c.field);
    ctx.send(GATEWAY, Tag::new(p, 2), &[Segment::new(group, vec![result.value()])])?;
    if mode != EvalMode::Agreement {
        return Ok(());
    }

    let bcast = Tag::new(proto::MAJORITY_VOTE, 1);
    let servers = 1..=c.m as PartyId;
    ctx.send_all(servers.clone(), bcast, &[Segment::new(group, vec![result.value()])])?;
    let mut seen = vec![(ctx.me(), result)];
    for q in servers.filter(|&q| q != ctx.me()) {
        match ctx.recv_vec(q, bcast, group, 1).await {
            Ok(v) => seen.push((q, c.field.elem(v[0]))),
            Err(e) if missing(&e) => {}
            Err(e) => return Err(e.into()),
        }
    }
    let mut vote = match analyse(c, &seen) {
        Ok((a, _)) => a.value().map_or(VOTE_UNDECIDED, |v| if v == 1 { VOTE_BLOCK } else { VOTE_FORWARD }),
        Err(_) => VOTE_UNDECIDED,
    };
    if opts.flip_vote && vote != VOTE_UNDECIDED {
        vote = 1 - vote;
    }
    let ballot = Group::field(Field::new(3)?);
    ctx.send(GATEWAY, Tag::new(proto::MAJORITY_VOTE, 2), &[Segment::new(ballot, vec![vote])])?;
    Ok(())
}

/// The gateway's side: send `addr`, collect result shares, decide.
///
/// Additive shares need every server. Shamir shares tolerate silent
/// servers as long as `reveal_size` answer.
pub async fn gateway_eval(
    ctx: &PartyCtx,
    config: &FirewallConfig,
    addr: Ipv4Addr,
    mode: EvalMode,
) -> Result<EvalVerdict, FirewallError> {
    check_mode(config, mode)?;
    let p = mode.protocol();
    let servers = 1..=config.m as PartyId;
    ctx.send_all(servers.clone(), Tag::new(p, 1), &[Segment::new(Group::ipv4(), vec![u32::from(addr) as u128])])?;

    let group = Group::field(config.field);
    let mut shares = Vec::new();
    let mut absent = Vec::new();
    for q in servers.clone() {
        match ctx.recv_vec(q, Tag::new(p, 2), group, 1).await {
            Ok(v) => shares.push((q, config.field.elem(v[0]))),
            Err(e) if missing(&e) => absent.push(q),
            Err(e) => return Err(e.into()),
        }
    }
    let needed = match config.scheme {
        Scheme::Additive => config.m,
        Scheme::Shamir { reveal_size } => reveal_size,
    };
    if shares.len() < needed {
        return Err(FirewallError::ServerTimeout(absent[0]));
    }
    let responders: Vec<PartyId> = shares.iter().map(|(q, _)| *q).collect();
    let target = target(config, mode);

    let mut verdict = EvalVerdict {
        decision: Decision::Forward,
        alert: false,
        suspects: Vec::new(),
        value: None,
        reveals: Vec::new(),
        responders,
        votes: Vec::new(),
    };
    if mode == EvalMode::BerlekampWelch {
        let Scheme::Shamir { reveal_size } = config.scheme else { unreachable!("checked above") };
        let points: Vec<EvalPoint> = shares.iter().map(|(q, y)| EvalPoint::new(config.field.elem(*q as u128), *y)).collect();
        let e = (points.len() - reveal_size) / 2;
        match berlekamp_welch(&points, reveal_size - 1, e)? {
            Decoding::Recovered { poly, bad } => {
                let v = poly.constant().value();
                verdict.value = Some(v);
                verdict.decision = decide(v, target);
                verdict.alert = !bad.is_empty();
                verdict.suspects = bad.into_iter().map(|x| x as PartyId).collect();
                return Ok(verdict);
            }
            Decoding::Failed => return Err(FirewallError::DecodeFail),
        }
    }

    let (analysis, reveals) = analyse(config, &shares)?;
    verdict.reveals = reveals;
    verdict.value = analysis.value();
    match &analysis {
        Analysis::Agree(_) => {}
        Analysis::MajorityWithSuspects { suspects, .. } => {
            verdict.alert = true;
            verdict.suspects = suspects.clone();
        }
        Analysis::NoMajority => verdict.alert = true,
    }
    if mode != EvalMode::Agreement {
        let v = verdict.value.ok_or(FirewallError::NoMajority)?;
        verdict.decision = decide(v, target);
        return Ok(verdict);
    }

    let mine = verdict.value.map_or(VOTE_UNDECIDED, |v| if v == target { VOTE_BLOCK } else { VOTE_FORWARD });
    verdict.votes.push((GATEWAY, mine));
    let ballot = Group::field(Field::new(3)?);
    for q in servers {
        match ctx.recv_vec(q, Tag::new(proto::MAJORITY_VOTE, 2), ballot, 1).await {
            Ok(v) => verdict.votes.push((q, v[0])),
            Err(e) if missing(&e) => {}
            Err(e) => return Err(e.into()),
        }
    }
    let ballots: Vec<u128> = verdict.votes.iter().map(|(_, v)| *v).collect();
    verdict.decision = match majority_vote(&ballots)? {
        VOTE_BLOCK => Decision::Block,
        VOTE_FORWARD => Decision::Forward,
        _ => return Err(FirewallError::NoMajority),
    };
    Ok(verdict)
}

enum Outcome {
    Gateway(Result<EvalVerdict, FirewallError>),
    Server(Result<(), FirewallError>),
}

/// A simulated evaluation.
#[derive(Debug)]
pub struct EvalReport {
    pub verdict: Result<EvalVerdict, FirewallError>,
    pub servers: Vec<(PartyId, Result<(), FirewallError>)>,
    pub transcript: Transcript,
}

/// Run the gateway and every server not listed in `offline` in the
/// simulator. Server `i` draws from `RandomSource::from_u64(seed).for_party(i)`
/// and follows `behaviour` if listed there.
pub fn simulate_eval(
    servers: &[ServerShares],
    addr: Ipv4Addr,
    mode: EvalMode,
    seed: u64,
    behaviour: &[(PartyId, ServeOptions)],
    offline: &[PartyId],
) -> Result<EvalReport, FirewallError> {
    let config = servers.first().ok_or_else(|| FirewallError::BadParams("no servers".into()))?.config;
    let src = RandomSource::from_u64(seed);
    let mut sim = Simulation::new(seed);
    sim.add_party(GATEWAY, move |ctx| async move { Outcome::Gateway(gateway_eval(&ctx, &config, addr, mode).await) });
    for s in servers.iter().filter(|s| !offline.contains(&s.party())) {
        let opts = behaviour.iter().find(|(q, _)| *q == s.party()).map(|(_, o)| *o).unwrap_or_default();
        let mut rng = src.for_party(s.party());
        sim.add_party(s.party(), move |ctx| async move { Outcome::Server(serve(&ctx, s, mode, &opts, &mut rng).await) });
    }
    let report = sim.run().map_err(|e| FirewallError::Protocol(ProtocolError::Net(e)))?;
    let mut verdict = None;
    let mut results = Vec::new();
    for (q, out) in report.outputs {
        match out {
            Outcome::Gateway(v) => verdict = Some(v),
            Outcome::Server(r) => results.push((q, r)),
        }
    }
    Ok(EvalReport { verdict: verdict.expect("gateway registered"), servers: results, transcript: report.transcript })
}
