//! Codec, envelope, simulator and TCP transport behaviour.

mod common;

use std::io::Cursor;

use obfw::field::Field;
use obfw::net::*;
use proptest::prelude::*;

const PING: Tag = Tag::new(200, 1);
const PONG: Tag = Tag::new(200, 2);

fn env(payload: Vec<u8>) -> Envelope {
    Envelope { tag: Tag::new(7, 3), session: 0x0102_0304_0506_0708, sender: 9, payload }
}

#[test]
fn codec_packs_lsb_first() {
    let f = Field::new(11).unwrap();
    let bytes = encode_elements(&[Segment::new(Group::z2(), vec![1, 0, 1]), Segment::new(Group::field(f), vec![10, 3])]).unwrap();
    // bit stream 1,0,1 | 0,1,0,1 | 1,1,0,0
    assert_eq!(bytes, vec![0b1101_0101, 0b0000_0001]);
    let back = decode_elements(&bytes, &[(Group::z2(), 3), (Group::field(f), 2)]).unwrap();
    assert_eq!(back, vec![vec![1, 0, 1], vec![10, 3]]);
}

#[test]
fn codec_errors() {
    let f = Field::new(11).unwrap();
    assert_eq!(
        encode_elements(&[Segment::new(Group::field(f), vec![11])]),
        Err(CodecError::OutOfRange { value: 11, modulus: 11 })
    );
    let schema = [(Group::field(f), 3)];
    let bytes = encode_elements(&[Segment::new(Group::field(f), vec![1, 2, 3])]).unwrap();
    assert_eq!(decode_elements(&bytes[..1], &schema), Err(CodecError::TruncatedPayload));
    let mut longer = bytes.clone();
    longer.push(0);
    assert_eq!(decode_elements(&longer, &schema), Err(CodecError::TrailingData));
    let mut padded = bytes;
    *padded.last_mut().unwrap() |= 0x80;
    assert_eq!(decode_elements(&padded, &schema), Err(CodecError::TrailingData));
}

#[test]
fn zn_is_charged_ell_bits() {
    let n = Field::new(11).unwrap();
    let seg = Segment::new(Group::zn(n, 3), vec![9, 10]);
    assert_eq!((seg.raw_bits(), seg.accounting_bits()), (8, 6));
    assert_eq!(Group::shift(8).raw_bits, 4);
    assert_eq!(Group::shift(5).modulus, 6);
    assert_eq!((ceil_log2(1), ceil_log2(2), ceil_log2(5), ceil_log2(8)), (0, 1, 3, 3));
}

proptest! {
    #[test]
    fn codec_round_trip(p in prop::sample::select(vec![2u128, 3, 11, 101, 251, 65_537, 2_147_483_647]),
                        raw in prop::collection::vec(any::<u128>(), 0..40),
                        bits in prop::collection::vec(any::<bool>(), 0..20)) {
        let f = Field::new(p).unwrap();
        let vals: Vec<u128> = raw.iter().map(|v| v % p).collect();
        let bits: Vec<u128> = bits.into_iter().map(u128::from).collect();
        let segs = [Segment::new(Group::field(f), vals.clone()), Segment::new(Group::z2(), bits.clone())];
        let bytes = encode_elements(&segs).unwrap();
        let total: u64 = segs.iter().map(Segment::raw_bits).sum();
        prop_assert_eq!(bytes.len() as u64, total.div_ceil(8));
        let back = decode_elements(&bytes, &[(Group::field(f), vals.len()), (Group::z2(), bits.len())]).unwrap();
        prop_assert_eq!(back, vec![vals, bits]);
    }

    #[test]
    fn envelope_round_trip(step in any::<u8>(), session in any::<u64>(), sender in any::<u8>(),
                           payload in prop::collection::vec(any::<u8>(), 0..64)) {
        let e = Envelope { tag: Tag::new(3, step), session, sender, payload };
        prop_assert_eq!(Envelope::from_bytes(&e.to_bytes()).unwrap(), e.clone());
        let mut buf = Vec::new();
        e.write_record(&mut buf).unwrap();
        prop_assert_eq!(Envelope::read_record(&mut Cursor::new(buf)).unwrap(), Some(e));
    }
}

#[test]
fn envelope_layout() {
    let bytes = env(vec![0xaa, 0xbb]).to_bytes();
    assert_eq!(bytes.len(), HEADER_LEN + 2);
    assert_eq!(bytes, vec![7, 3, 8, 7, 6, 5, 4, 3, 2, 1, 9, 2, 0, 0, 0, 0xaa, 0xbb]);
    assert!(matches!(Envelope::from_bytes(&bytes[..10]), Err(NetError::FrameCorrupt(_))));
    assert!(matches!(Envelope::from_bytes(&bytes[..16]), Err(NetError::FrameCorrupt(_))));
}

#[test]
fn record_stream_errors() {
    let mut buf = Vec::new();
    env(vec![1]).write_record(&mut buf).unwrap();
    env(vec![2, 3]).write_record(&mut buf).unwrap();
    let mut r = Cursor::new(buf.clone());
    assert_eq!(Envelope::read_record(&mut r).unwrap().unwrap().payload, vec![1]);
    assert_eq!(Envelope::read_record(&mut r).unwrap().unwrap().payload, vec![2, 3]);
    assert_eq!(Envelope::read_record(&mut r).unwrap(), None);

    let mut bad = buf.clone();
    bad[0] = b'X';
    assert!(matches!(Envelope::read_record(&mut Cursor::new(bad)), Err(NetError::FrameCorrupt(_))));

    let mut huge = b"OBNT".to_vec();
    huge.extend(env(Vec::new()).to_bytes());
    huge[4 + 11..4 + 15].copy_from_slice(&(MAX_PAYLOAD + 1).to_le_bytes());
    assert!(matches!(Envelope::read_record(&mut Cursor::new(huge)), Err(NetError::FrameCorrupt(_))));

    assert!(matches!(Envelope::read_record(&mut Cursor::new(buf[..8].to_vec())), Err(NetError::FrameCorrupt(_))));
}

/// Party 1 sends `x` to 2, party 2 answers with `x + 1`.
async fn ping_pong(ctx: PartyCtx, x: u128) -> Result<u128, ProtocolError> {
    let g = Group::field(Field::new(251).unwrap());
    if ctx.me() == 1 {
        ctx.send(2, PING, &[Segment::new(g, vec![x])])?;
        Ok(ctx.recv_vec(2, PONG, g, 1).await?[0])
    } else {
        let v = ctx.recv_vec(1, PING, g, 1).await?[0];
        ctx.send(1, PONG, &[Segment::new(g, vec![(v + 1) % 251])])?;
        Ok(v)
    }
}

fn sim_ping(seed: u64, hook: Option<Box<dyn FnMut(&Envelope, PartyId) -> HookAction>>) -> SimReport<Result<u128, ProtocolError>> {
    let mut sim = Simulation::new(seed);
    if let Some(mut h) = hook {
        sim.hook(move |e, to| h(e, to));
    }
    sim.record_envelopes();
    sim.add_party(1, |ctx| ping_pong(ctx, 40));
    sim.add_party(2, |ctx| ping_pong(ctx, 0));
    sim.run().unwrap()
}

#[test]
fn sim_delivers_and_counts() {
    let r = sim_ping(1, None);
    assert_eq!(r.output(1), &Ok(41));
    assert_eq!(r.output(2), &Ok(40));
    assert_eq!(r.delivered.len(), 2);
    assert_eq!(r.transcript.total_accounting_bits(), 16);
    assert_eq!(r.transcript.step_bits(PING), 8);
    assert_eq!(r.transcript.rounds(), 1);
}

#[test]
fn sim_hooks() {
    let dropped = sim_ping(2, Some(Box::new(|e, _| if e.tag == PONG { HookAction::Drop } else { HookAction::Pass })));
    assert!(matches!(dropped.output(1), Err(ProtocolError::PartyTimeout { party: 1, from: 2, tag: PONG })));
    assert_eq!(dropped.output(2), &Ok(40));

    let replaced = sim_ping(3, Some(Box::new(|e, _| if e.tag == PING { HookAction::Replace(vec![100]) } else { HookAction::Pass })));
    assert_eq!(replaced.output(1), &Ok(101));

    let garbled = sim_ping(4, Some(Box::new(|e, _| if e.tag == PING { HookAction::Replace(vec![1, 2]) } else { HookAction::Pass })));
    assert!(matches!(garbled.output(2), Err(ProtocolError::Codec(CodecError::TrailingData))));

    let fast = sim_ping(5, None);
    let slow = sim_ping(5, Some(Box::new(|_, _| HookAction::Delay(50))));
    assert_eq!(slow.output(1), &Ok(41));
    assert!(slow.ticks > fast.ticks + 50, "{} vs {}", slow.ticks, fast.ticks);
}

#[test]
fn sim_is_deterministic() {
    let a = sim_ping(9, None);
    let b = sim_ping(9, None);
    assert_eq!(a.delivered, b.delivered);
    assert_eq!(a.transcript.to_json(), b.transcript.to_json());
}

#[test]
fn tcp_ping_pong() {
    let cluster = Loopback::new(&[1, 2]).unwrap();
    for session in 0..5 {
        let (mut out, transcript) = cluster.run(session, |id, ctx| ping_pong(ctx, if id == 1 { 40 + session as u128 } else { 0 }));
        out.sort_by_key(|(p, _)| *p);
        assert_eq!(out, vec![(1, Ok(41 + session as u128)), (2, Ok(40 + session as u128))]);
        assert_eq!(transcript.total_accounting_bits(), 16);
    }
}

#[test]
fn tcp_reconnects_to_a_restarted_peer() {
    use std::net::SocketAddr;
    use std::time::Duration;
    let a = TcpMesh::bind(1, SocketAddr::from(([127, 0, 0, 1], 0))).unwrap();
    let b = TcpMesh::bind(2, SocketAddr::from(([127, 0, 0, 1], 0))).unwrap();
    let addr = b.local_addr();
    a.add_peer(2, addr);
    let msg = |session| Envelope { tag: PING, session, sender: 1, payload: vec![session as u8] };
    b.announce_sessions(true);
    a.send_envelope(2, &msg(1)).unwrap();
    assert_eq!(b.accept_session(Duration::from_secs(5)).map(|s| s.session), Some(1));
    b.shutdown();
    drop(b);
    std::thread::sleep(Duration::from_millis(100));

    let b = TcpMesh::bind(2, addr).unwrap();
    b.announce_sessions(true);
    a.send_envelope(2, &msg(2)).unwrap();
    assert_eq!(b.accept_session(Duration::from_secs(5)).map(|s| s.session), Some(2));
}

#[test]
fn transports_agree() {
    for (name, r) in common::transport_equivalence(5) {
        r.unwrap_or_else(|e| panic!("{name}: {e}"));
    }
}
