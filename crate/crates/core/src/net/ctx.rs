use std::cell::RefCell;
use std::future::poll_fn;
use std::rc::Rc;
use std::task::{Context, Poll};

use super::codec::{decode_elements, encode_elements, Segment};
use super::envelope::{Envelope, PartyId, Tag};
use super::transcript::{MessageRecord, PartyEvent, Transcript};
use super::{NetError, ProtocolError};

/// What a party waits for: the next message from `from` carrying `tag`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RecvKey {
    pub session: u64,
    pub from: PartyId,
    pub tag: Tag,
}

/// Message delivery seen from one party.
pub trait Transport {
    fn send(&self, to: PartyId, env: Envelope) -> Result<(), NetError>;

    /// Ready with the message, pending, or `Err(PartyTimeout)` once the
    /// transport decides the message will not arrive.
    fn poll_recv(&self, me: PartyId, key: RecvKey, cx: &mut Context<'_>) -> Poll<Result<Envelope, ProtocolError>>;

    /// Scheduler tick, for transcript phases.
    fn phase(&self) -> u64 {
        0
    }
}

/// A party's handle on one session.
#[derive(Clone)]
pub struct PartyCtx {
    me: PartyId,
    session: u64,
    transport: Rc<dyn Transport>,
    log: Rc<RefCell<Transcript>>,
}

impl PartyCtx {
    pub fn new(me: PartyId, session: u64, transport: Rc<dyn Transport>, log: Rc<RefCell<Transcript>>) -> Self {
        PartyCtx { me, session, transport, log }
    }

    pub fn me(&self) -> PartyId {
        self.me
    }

    pub fn session(&self) -> u64 {
        self.session
    }

    pub fn send(&self, to: PartyId, tag: Tag, segments: &[Segment]) -> Result<(), ProtocolError> {
        let payload = encode_elements(segments)?;
        let record = MessageRecord::new(self.session, tag, self.me, to, self.transport.phase(), segments);
        {
            let mut log = self.log.borrow_mut();
            log.messages.push(record);
            log.events.entry(self.me).or_default().push(PartyEvent::Send);
        }
        let env = Envelope { tag, session: self.session, sender: self.me, payload };
        self.transport.send(to, env)?;
        Ok(())
    }

    /// Send the same segments to every party in `to` except ourselves.
    pub fn send_all(&self, to: impl IntoIterator<Item = PartyId>, tag: Tag, segments: &[Segment]) -> Result<(), ProtocolError> {
        for p in to {
            if p != self.me {
                self.send(p, tag, segments)?;
            }
        }
        Ok(())
    }

    pub async fn recv(&self, from: PartyId, tag: Tag, schema: &[(super::Group, usize)]) -> Result<Vec<Vec<u128>>, ProtocolError> {
        let key = RecvKey { session: self.session, from, tag };
        let env = poll_fn(|cx| self.transport.poll_recv(self.me, key, cx)).await?;
        self.log.borrow_mut().events.entry(self.me).or_default().push(PartyEvent::Recv);
        Ok(decode_elements(&env.payload, schema)?)
    }

    /// Receive a single segment of `count` elements from `group`.
    pub async fn recv_vec(&self, from: PartyId, tag: Tag, group: super::Group, count: usize) -> Result<Vec<u128>, ProtocolError> {
        let mut v = self.recv(from, tag, &[(group, count)]).await?;
        Ok(v.pop().unwrap_or_default())
    }
}
