use std::collections::VecDeque;

use super::{dual_share, DualError, DualParams, DualShare};
use crate::field::{Fe, Field};
use crate::net::{proto, Group, PartyCtx, PartyId, Segment, Tag};
use crate::sharing::{
    additive_add, additive_add_const, additive_cmul, additive_mult3, additive_sub, shamir_add, shamir_add_const,
    shamir_cmul, shamir_mult, shamir_reveal, shamir_sub, AdditiveShare, Randomness, ShamirShare,
};

const INPUT: Tag = Tag::new(proto::DUAL_EVAL, 1);
const SHAMIR_MUL: Tag = Tag::new(proto::DUAL_EVAL, 2);
const ADDITIVE_MUL: (Tag, Tag) = (Tag::new(proto::DUAL_EVAL, 3), Tag::new(proto::DUAL_EVAL, 4));
const BEAVER_OPEN: Tag = Tag::new(proto::DUAL_EVAL, 5);

/// Gates refer to earlier gates by index. Constants are reduced into the
/// field at evaluation time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gate {
    /// Next input of the given party (1-based).
    Input(usize),
    AddConst(usize, u128),
    Add(usize, usize),
    MulConst(usize, u128),
    Mul(usize, usize),
    Output(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Circuit {
    gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(gates: Vec<Gate>) -> Result<Self, DualError> {
        for (i, g) in gates.iter().enumerate() {
            let operands: &[usize] = match g {
                Gate::Input(p) => {
                    if *p == 0 {
                        return Err(DualError::CircuitMalformed(format!("gate {i}: parties are numbered from 1")));
                    }
                    &[]
                }
                Gate::AddConst(a, _) | Gate::MulConst(a, _) | Gate::Output(a) => std::slice::from_ref(a),
                Gate::Add(a, b) | Gate::Mul(a, b) => &[*a, *b],
            };
            if let Some(bad) = operands.iter().find(|&&o| o >= i) {
                return Err(DualError::CircuitMalformed(format!("gate {i} reads gate {bad}, which does not precede it")));
            }
        }
        Ok(Circuit { gates })
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn mul_count(&self) -> usize {
        self.gates.iter().filter(|g| matches!(g, Gate::Mul(..))).count()
    }

    /// Plaintext evaluation; `inputs[p - 1]` lists party `p`'s inputs in
    /// gate order.
    pub fn eval_plain(&self, field: Field, inputs: &[Vec<Fe>]) -> Result<Vec<Fe>, DualError> {
        let mut next = vec![0usize; inputs.len()];
        let mut wires: Vec<Fe> = Vec::with_capacity(self.gates.len());
        let mut outputs = Vec::new();
        for (i, g) in self.gates.iter().enumerate() {
            let v = match *g {
                Gate::Input(p) => {
                    let v = inputs
                        .get(p - 1)
                        .and_then(|xs| xs.get(next[p - 1]))
                        .ok_or(DualError::MissingInput { party: p, gate: i })?;
                    next[p - 1] += 1;
                    *v
                }
                Gate::AddConst(a, c) => wires[a] + field.elem(c),
                Gate::Add(a, b) => wires[a] + wires[b],
                Gate::MulConst(a, c) => wires[a] * field.elem(c),
                Gate::Mul(a, b) => wires[a] * wires[b],
                Gate::Output(a) => {
                    outputs.push(wires[a]);
                    wires[a]
                }
            };
            wires.push(v);
        }
        Ok(outputs)
    }
}

/// Dual sharings of a random `a`, `b` and `c = a·b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BeaverTriple {
    pub a: DualShare,
    pub b: DualShare,
    pub c: DualShare,
}

/// Trusted dealer: `count` triples for every party, indexed
/// `[party − 1][k]`. A stand-in for an offline phase.
pub fn beaver_dealer<R: Randomness + ?Sized>(params: DualParams, count: usize, rng: &mut R) -> Vec<Vec<BeaverTriple>> {
    let field = params.field();
    let mut out = vec![Vec::with_capacity(count); params.n()];
    for _ in 0..count {
        let (a, b) = (rng.element(field), rng.element(field));
        let sa = dual_share(a, params, rng);
        let sb = dual_share(b, params, rng);
        let sc = dual_share(a * b, params, rng);
        for (i, party) in out.iter_mut().enumerate() {
            party.push(BeaverTriple { a: sa[i], b: sb[i], c: sc[i] });
        }
    }
    out
}

/// How `Mul` gates are evaluated.
#[derive(Debug, Clone)]
pub enum MulMode {
    /// Interactive multiplication under both schemes; needs `n = 3`.
    Native,
    /// Consume this party's dealer triples in order.
    Beaver(VecDeque<BeaverTriple>),
}

fn dual_add(x: &DualShare, y: &DualShare) -> Result<DualShare, DualError> {
    Ok(DualShare { shamir: shamir_add(&x.shamir, &y.shamir)?, additive: additive_add(&x.additive, &y.additive)? })
}

fn dual_sub(x: &DualShare, y: &DualShare) -> Result<DualShare, DualError> {
    Ok(DualShare { shamir: shamir_sub(&x.shamir, &y.shamir)?, additive: additive_sub(&x.additive, &y.additive)? })
}

fn dual_cmul(x: &DualShare, c: Fe) -> DualShare {
    DualShare { shamir: shamir_cmul(&x.shamir, c), additive: additive_cmul(&x.additive, c) }
}

fn dual_add_const(x: &DualShare, c: Fe) -> DualShare {
    DualShare { shamir: shamir_add_const(&x.shamir, c), additive: additive_add_const(&x.additive, c) }
}

async fn native_mul<R: Randomness + ?Sized>(
    ctx: &PartyCtx,
    x: &DualShare,
    y: &DualShare,
    rng: &mut R,
) -> Result<DualShare, DualError> {
    let s = shamir_mult(ctx, SHAMIR_MUL, &[x.shamir], &[y.shamir], rng).await?;
    let a = additive_mult3(ctx, ADDITIVE_MUL, &[x.additive], &[y.additive], rng).await?;
    Ok(DualShare { shamir: s[0], additive: a[0] })
}

/// Open `x − a` and `y − b` under each scheme separately, so each component
/// is computed only from its own sharing.
async fn beaver_mul(ctx: &PartyCtx, x: &DualShare, y: &DualShare, tr: &BeaverTriple) -> Result<DualShare, DualError> {
    let params = x.params();
    let (field, n) = (params.field(), params.n());
    let d = dual_sub(x, &tr.a)?;
    let e = dual_sub(y, &tr.b)?;
    let group = Group::field(field);
    let mine = [d.shamir.value, e.shamir.value, d.additive.value, e.additive.value];
    let seg = Segment::new(group, mine.iter().map(Fe::value).collect());
    ctx.send_all(1..=n as PartyId, BEAVER_OPEN, &[seg])?;
    let mut all = Vec::with_capacity(n);
    for p in 1..=n as PartyId {
        if p == ctx.me() {
            all.push(mine.to_vec());
        } else {
            all.push(field.elems(&ctx.recv_vec(p, BEAVER_OPEN, group, 4).await?));
        }
    }
    let open_shamir = |k: usize| -> Result<Fe, DualError> {
        let shares: Vec<ShamirShare> =
            all.iter().enumerate().map(|(i, v)| ShamirShare::new(i + 1, v[k], params.shamir)).collect();
        Ok(shamir_reveal(&shares)?)
    };
    let open_additive = |k: usize| -> Fe { all.iter().map(|v| v[k]).sum() };
    let (ds, es) = (open_shamir(0)?, open_shamir(1)?);
    let (da, ea) = (open_additive(2), open_additive(3));

    let shamir = [shamir_cmul(&tr.b.shamir, ds), shamir_cmul(&tr.a.shamir, es)]
        .iter()
        .try_fold(tr.c.shamir, |acc, s| shamir_add(&acc, s))?;
    let additive: AdditiveShare = [additive_cmul(&tr.b.additive, da), additive_cmul(&tr.a.additive, ea)]
        .iter()
        .try_fold(tr.c.additive, |acc, s| additive_add(&acc, s))?;
    Ok(DualShare { shamir: shamir_add_const(&shamir, ds * es), additive: additive_add_const(&additive, da * ea) })
}

/// Evaluate `circuit` gate by gate on dual shares; returns this party's
/// shares of each `Output` gate in order.
pub async fn dual_eval<R: Randomness + ?Sized>(
    ctx: &PartyCtx,
    circuit: &Circuit,
    params: DualParams,
    inputs: &[Fe],
    mut mul: MulMode,
    rng: &mut R,
) -> Result<Vec<DualShare>, DualError> {
    let (field, n) = (params.field(), params.n());
    let me = ctx.me() as usize;
    if matches!(mul, MulMode::Native) && circuit.mul_count() > 0 && n != 3 {
        return Err(DualError::BadParams(format!("native multiplication needs n = 3, got {n}")));
    }
    let group = Group::field(field);
    let mut my_inputs = inputs.iter();
    let mut wires: Vec<DualShare> = Vec::with_capacity(circuit.gates.len());
    let mut outputs = Vec::new();
    for (i, g) in circuit.gates.iter().enumerate() {
        let v = match *g {
            Gate::Input(p) if p > n => {
                return Err(DualError::CircuitMalformed(format!("gate {i}: no party {p} among {n}")));
            }
            Gate::Input(p) if p == me => {
                let x = *my_inputs.next().ok_or(DualError::MissingInput { party: p, gate: i })?;
                let shares = dual_share(x, params, rng);
                for s in &shares {
                    if s.index() != me {
                        let seg = Segment::new(group, vec![s.shamir.value.value(), s.additive.value.value()]);
                        ctx.send(s.index() as PartyId, INPUT, &[seg])?;
                    }
                }
                shares[me - 1]
            }
            Gate::Input(p) => {
                let v = ctx.recv_vec(p as PartyId, INPUT, group, 2).await?;
                DualShare {
                    shamir: ShamirShare::new(me, field.elem(v[0]), params.shamir),
                    additive: AdditiveShare::new(me, field.elem(v[1]), params.additive),
                }
            }
            Gate::AddConst(a, c) => dual_add_const(&wires[a], field.elem(c)),
            Gate::Add(a, b) => dual_add(&wires[a], &wires[b])?,
            Gate::MulConst(a, c) => dual_cmul(&wires[a], field.elem(c)),
            Gate::Mul(a, b) => match &mut mul {
                MulMode::Native => native_mul(ctx, &wires[a], &wires[b], rng).await?,
                MulMode::Beaver(triples) => {
                    let tr = triples.pop_front().ok_or(DualError::MissingTriple)?;
                    beaver_mul(ctx, &wires[a], &wires[b], &tr).await?
                }
            },
            Gate::Output(a) => {
                outputs.push(wires[a]);
                wires[a]
            }
        };
        wires.push(v);
    }
    Ok(outputs)
}
