//! Runs each protocol over the simulator and over loopback TCP with the same
//! seeds and compares outputs and accounting.

#![allow(dead_code)]

use std::fmt::Debug;
use std::future::Future;
use std::net::Ipv4Addr;

use obfw::compare::*;
use obfw::dual::*;
use obfw::field::{Fe, Field};
use obfw::firewall::*;
use obfw::net::{proto, Loopback, PartyCtx, PartyId, Simulation, Tag, Transcript};
use obfw::sharing::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Compare the two runs of one session.
fn same<T: Debug>(name: &str, session: u64, sim: (Vec<(PartyId, T)>, Transcript), tcp: (Vec<(PartyId, T)>, Transcript)) -> Result<(), String> {
    let (mut so, st) = sim;
    let (mut to, tt) = tcp;
    so.sort_by_key(|(p, _)| *p);
    to.sort_by_key(|(p, _)| *p);
    if format!("{so:?}") != format!("{to:?}") {
        return Err(format!("{name} session {session}: outputs differ\n sim {so:?}\n tcp {to:?}"));
    }
    if st.by_step() != tt.by_step() {
        return Err(format!("{name} session {session}: per-step accounting differs"));
    }
    if st.total_accounting_bits() != tt.total_accounting_bits() || st.rounds() != tt.rounds() {
        return Err(format!("{name} session {session}: totals differ"));
    }
    Ok(())
}

fn both<T, F, Fut>(cluster: &Loopback, ids: &[PartyId], session: u64, f: F) -> ((Vec<(PartyId, T)>, Transcript), (Vec<(PartyId, T)>, Transcript))
where
    T: Send,
    F: Fn(PartyId, PartyCtx) -> Fut + Sync,
    Fut: Future<Output = T>,
{
    let mut sim = Simulation::new(session);
    for &id in ids {
        let f = &f;
        sim.add_party(id, move |ctx| f(id, ctx));
    }
    let report = sim.run().expect("simulation completes");
    let sim = (report.outputs, report.transcript);
    (sim, cluster.run(session, &f))
}

type Check = fn(&Loopback, u64) -> Result<(), String>;

fn shamir_mult_case(cluster: &Loopback, session: u64) -> Result<(), String> {
    let params = ShamirParams::new(Field::new(251).unwrap(), 2, 5).unwrap();
    let mut deal = RandomSource::from_u64(session).derive(b"deal");
    let a = shamir_share(deal.element(params.field), params, &mut deal).unwrap();
    let b = shamir_share(deal.element(params.field), params, &mut deal).unwrap();
    let (s, t) = both(cluster, &[1, 2, 3, 4, 5], session, |id, ctx| {
        let (x, y) = (a[id as usize - 1], b[id as usize - 1]);
        async move {
            let mut rng = RandomSource::from_u64(session).for_party(id);
            shamir_mult(&ctx, Tag::new(proto::SHAMIR_MULT, 1), &[x], &[y], &mut rng).await.map(|v| v[0].value)
        }
    });
    same("shamir_mult", session, s, t)
}

fn additive_mult_case(cluster: &Loopback, session: u64) -> Result<(), String> {
    let params = AdditiveParams::new(Field::new(251).unwrap(), 3).unwrap();
    let mut deal = RandomSource::from_u64(session).derive(b"deal");
    let a = additive_share(deal.element(params.field), params, &mut deal).unwrap();
    let b = additive_share(deal.element(params.field), params, &mut deal).unwrap();
    let tags = (Tag::new(proto::ADDITIVE_MULT3, 1), Tag::new(proto::ADDITIVE_MULT3, 2));
    let (s, t) = both(cluster, &[1, 2, 3], session, |id, ctx| {
        let (x, y) = (a[id as usize - 1], b[id as usize - 1]);
        async move {
            let mut rng = RandomSource::from_u64(session).for_party(id);
            additive_mult3(&ctx, tags, &[x], &[y], &mut rng).await.map(|v| v[0].value)
        }
    });
    same("additive_mult3", session, s, t)
}

fn dual_output_case(cluster: &Loopback, session: u64) -> Result<(), String> {
    let p = Field::new(101).unwrap();
    let params = DualParams::new(p, 2, 5).unwrap();
    let mut deal = RandomSource::from_u64(session).derive(b"deal");
    let shares = dual_share(deal.element(p), params, &mut deal);
    let (s, t) = both(cluster, &[1, 2, 3, 4, 5], session, |id, ctx| {
        let share = shares[id as usize - 1];
        async move { output_check(&ctx, &share).await.map(|v| v.status) }
    });
    same("dual_output_check", session, s, t)
}

fn dual_eval_case(cluster: &Loopback, session: u64) -> Result<(), String> {
    use Gate::*;
    let p = Field::new(251).unwrap();
    let params = DualParams::new(p, 1, 3).unwrap();
    let circuit = Circuit::new(vec![Input(1), Input(2), Input(3), Add(0, 1), Mul(3, 2), Output(4)]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(session);
    let inputs: Vec<Fe> = (0..3).map(|_| p.random(&mut rng)).collect();
    let (s, t) = both(cluster, &[1, 2, 3], session, |id, ctx| {
        let circuit = circuit.clone();
        let mine = inputs[id as usize - 1];
        async move {
            let mut rng = RandomSource::from_u64(session).for_party(id);
            let outs = dual_eval(&ctx, &circuit, params, &[mine], MulMode::Native, &mut rng).await?;
            output_check(&ctx, &outs[0]).await.map(|v| v.status)
        }
    });
    same("dual_eval", session, s, t)
}

fn two_party_case(variant: Variant, cluster: &Loopback, session: u64) -> Result<(), String> {
    let params = ComparisonParams::new(8).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(session);
    let (a, b) = (rng.gen_range(0..256u128), rng.gen_range(0..256u128));
    let (s, t) = both(cluster, &[1, 2, 3], session, |id, ctx| async move {
        let role = match id {
            1 => Role::First(a),
            2 => Role::Second(b),
            _ => Role::Helper,
        };
        let mut rng = RandomSource::from_u64(session).for_party(id);
        let opts = ScOptions::default();
        match variant {
            Variant::SemiHonest => sc_semi_honest(&ctx, &params, role, &opts, &mut rng).await,
            Variant::LowRounds => sc_low_rounds(&ctx, &params, role, &opts, &mut rng).await,
        }
    });
    same(&format!("{variant:?}"), session, s, t)
}

fn semi_honest_case(cluster: &Loopback, session: u64) -> Result<(), String> {
    two_party_case(Variant::SemiHonest, cluster, session)
}

fn low_rounds_case(cluster: &Loopback, session: u64) -> Result<(), String> {
    two_party_case(Variant::LowRounds, cluster, session)
}

fn shared_inputs_case(cluster: &Loopback, session: u64) -> Result<(), String> {
    let params = ComparisonParams::new(8).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(session);
    let (a, b) = (rng.gen_range(0..256u128), rng.gen_range(0..256u128));
    let mut deal = RandomSource::from_u64(session).derive(b"deal");
    let sa = share_bits_additive(a, 8, 4, &mut deal);
    let sb = share_bits_additive(b, 8, 4, &mut deal);
    let (s, t) = both(cluster, &[1, 2, 3, 4], session, |id, ctx| {
        let (x, y) = (sa[id as usize - 1].clone(), sb[id as usize - 1].clone());
        async move {
            let mut rng = RandomSource::from_u64(session).for_party(id);
            sc_shared_inputs(&ctx, &params, 4, &x, &y, &ScOptions::default(), &mut rng).await
        }
    });
    same("sc_shared_inputs", session, s, t)
}

fn malicious_case(cluster: &Loopback, session: u64) -> Result<(), String> {
    let params = ComparisonParams::new(6).unwrap();
    let sp = ShamirParams::new(params.n, 1, 3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(session);
    let (a, b) = (rng.gen_range(0..64u128), rng.gen_range(0..64u128));
    let mut deal = RandomSource::from_u64(session).derive(b"deal");
    let sa = share_bits_shamir(a, 6, sp, &mut deal).unwrap();
    let sb = share_bits_shamir(b, 6, sp, &mut deal).unwrap();
    let (s, t) = both(cluster, &[1, 2, 3], session, |id, ctx| {
        let (x, y) = (sa[id as usize - 1].clone(), sb[id as usize - 1].clone());
        async move {
            let mut rng = RandomSource::from_u64(session).for_party(id);
            sc_malicious(&ctx, &params, &x, &y, &ScOptions::default(), &mut rng).await.map(|s| s.value)
        }
    });
    same("sc_malicious", session, s, t)
}

fn firewall_servers(scheme: Scheme, m: usize) -> (Vec<ServerShares>, Vec<Ipv4Addr>) {
    let bloom = obfw::bloom::BloomParams::new(400, 4, 40).unwrap();
    let config = FirewallConfig::new(scheme, m, Field::new(11).unwrap(), bloom).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let list: Vec<Ipv4Addr> = (0..40).map(|_| Ipv4Addr::from(rng.gen::<u32>())).collect();
    let (_, servers) = fw_init(&config, &list, *b"transport-check!", &mut RandomSource::from_u64(98)).unwrap();
    (servers, list)
}

fn firewall_case(servers: &[ServerShares], list: &[Ipv4Addr], mode: EvalMode, cluster: &Loopback, session: u64) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(session);
    let addr = if rng.gen_bool(0.5) { list[rng.gen_range(0..list.len())] } else { Ipv4Addr::from(rng.gen::<u32>()) };
    let config = servers[0].config;
    let mut ids = vec![GATEWAY];
    ids.extend(servers.iter().map(|s| s.party()));
    let (s, t) = both(cluster, &ids, session, |id, ctx| async move {
        if id == GATEWAY {
            gateway_eval(&ctx, &config, addr, mode).await.map(Some)
        } else {
            let mut rng = RandomSource::from_u64(session).for_party(id);
            serve(&ctx, &servers[id as usize - 1], mode, &ServeOptions::default(), &mut rng).await.map(|_| None)
        }
    });
    same(&format!("firewall {mode:?}"), session, s, t)
}

/// Run `sessions` sessions of every protocol; one result per protocol.
pub fn transport_equivalence(sessions: u64) -> Vec<(String, Result<(), String>)> {
    let mut out = Vec::new();
    let mut base = 1u64 << 20;
    let mut run = |name: &str, ids: &[PartyId], check: &dyn Fn(&Loopback, u64) -> Result<(), String>| {
        let cluster = Loopback::new(ids).expect("loopback mesh binds");
        let r = (0..sessions).try_for_each(|i| check(&cluster, base + i));
        base += sessions;
        out.push((name.to_string(), r));
    };
    let cases: [(&str, &[PartyId], Check); 9] = [
        ("shamir_mult", &[1, 2, 3, 4, 5], shamir_mult_case),
        ("additive_mult3", &[1, 2, 3], additive_mult_case),
        ("dual_output_check", &[1, 2, 3, 4, 5], dual_output_case),
        ("dual_eval", &[1, 2, 3], dual_eval_case),
        ("sc_semi_honest", &[1, 2, 3], semi_honest_case),
        ("sc_low_rounds", &[1, 2, 3], low_rounds_case),
        ("sc_shared_inputs", &[1, 2, 3, 4], shared_inputs_case),
        ("sc_malicious", &[1, 2, 3], malicious_case),
        ("fw_eval_sum", &[0, 1, 2, 3], |c, s| {
            let (servers, list) = firewall_servers(Scheme::Additive, 3);
            firewall_case(&servers, &list, EvalMode::Sum, c, s)
        }),
    ];
    for (name, ids, check) in cases {
        run(name, ids, &check);
    }
    let (servers, list) = firewall_servers(Scheme::Shamir { reveal_size: 3 }, 5);
    let ids = [0, 1, 2, 3, 4, 5];
    run("fw_eval_product", &ids, &|c, s| firewall_case(&servers, &list, EvalMode::Product, c, s));
    run("majority_vote", &ids, &|c, s| firewall_case(&servers, &list, EvalMode::Agreement, c, s));
    drop(run);
    out
}
