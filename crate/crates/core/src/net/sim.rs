//! Deterministic in-process network.
//!
//! Parties are futures polled in ticks. A message sent during tick `k`
//! becomes visible at tick `k + 1` (plus any adversarial delay), so every
//! message of a step is delivered before the next step starts. The polling
//! order within a tick is shuffled from the seed; outputs never depend on
//! it, but the transcript order does, which is what replay checks compare.

use std::cell::RefCell;
use std::collections::{HashMap, HashSet, VecDeque};
use std::future::Future;
use std::pin::Pin;
use std::rc::Rc;
use std::task::{Context, Poll, Waker};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use super::ctx::{PartyCtx, RecvKey, Transport};
use super::envelope::{Envelope, PartyId};
use super::transcript::Transcript;
use super::{NetError, ProtocolError};

/// What the adversary does with an intercepted message.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum HookAction {
    Pass,
    Drop,
    Replace(Vec<u8>),
    Delay(u64),
}

/// Called for every message with its destination.
pub type AdversaryHook = Box<dyn FnMut(&Envelope, PartyId) -> HookAction>;

struct Queued {
    env: Envelope,
    ready_at: u64,
}

#[derive(Default)]
struct SimState {
    queues: HashMap<(PartyId, PartyId), VecDeque<Queued>>,
    hooks: Vec<AdversaryHook>,
    tick: u64,
    activity: bool,
    timed_out: HashSet<PartyId>,
    record: bool,
    delivered: Vec<(PartyId, Envelope)>,
}

/// The shared message fabric of a simulation.
#[derive(Default)]
pub struct SimNet {
    state: RefCell<SimState>,
}

impl SimNet {
    fn has_future_messages(&self) -> bool {
        let st = self.state.borrow();
        st.queues.values().flatten().any(|q| q.ready_at > st.tick)
    }
}

impl Transport for SimNet {
    fn send(&self, to: PartyId, env: Envelope) -> Result<(), NetError> {
        let mut st = self.state.borrow_mut();
        let SimState { hooks, queues, tick, activity, .. } = &mut *st;
        *activity = true;
        let mut env = env;
        let mut delay = 0;
        for hook in hooks.iter_mut() {
            match hook(&env, to) {
                HookAction::Pass => continue,
                HookAction::Drop => return Ok(()),
                HookAction::Replace(payload) => env.payload = payload,
                HookAction::Delay(k) => delay = k,
            }
            break;
        }
        queues
            .entry((env.sender, to))
            .or_default()
            .push_back(Queued { env, ready_at: *tick + 1 + delay });
        Ok(())
    }

    fn poll_recv(&self, me: PartyId, key: RecvKey, _cx: &mut Context<'_>) -> Poll<Result<Envelope, ProtocolError>> {
        let mut st = self.state.borrow_mut();
        let tick = st.tick;
        let found = st.queues.get_mut(&(key.from, me)).and_then(|q| {
            let pos = q.iter().position(|m| {
                m.ready_at <= tick && m.env.session == key.session && m.env.tag == key.tag
            })?;
            q.remove(pos)
        });
        match found {
            Some(m) => {
                st.activity = true;
                if st.record {
                    st.delivered.push((me, m.env.clone()));
                }
                Poll::Ready(Ok(m.env))
            }
            None if st.timed_out.remove(&me) => {
                st.activity = true;
                Poll::Ready(Err(ProtocolError::PartyTimeout { party: me, from: key.from, tag: key.tag }))
            }
            None => Poll::Pending,
        }
    }

    fn phase(&self) -> u64 {
        self.state.borrow().tick
    }
}

type PartyFuture<'a, T> = Pin<Box<dyn Future<Output = T> + 'a>>;

/// Result of a simulation run.
pub struct SimReport<T> {
    /// Outputs in party registration order.
    pub outputs: Vec<(PartyId, T)>,
    pub transcript: Transcript,
    /// Delivered envelopes with their receiver, if recording was enabled.
    pub delivered: Vec<(PartyId, Envelope)>,
    pub ticks: u64,
}

impl<T> SimReport<T> {
    /// Output of the first registered instance of `party`.
    pub fn output(&self, party: PartyId) -> &T {
        &self.outputs.iter().find(|(p, _)| *p == party).expect("party registered").1
    }

    pub fn into_outputs(self) -> Vec<T> {
        self.outputs.into_iter().map(|(_, t)| t).collect()
    }
}

pub struct Simulation<'a, T> {
    net: Rc<SimNet>,
    log: Rc<RefCell<Transcript>>,
    rng: ChaCha20Rng,
    session: u64,
    parties: Vec<(PartyId, PartyFuture<'a, T>)>,
}

const STALL_LIMIT: usize = 10_000;

impl<'a, T> Simulation<'a, T> {
    pub fn new(seed: u64) -> Self {
        Simulation {
            net: Rc::new(SimNet::default()),
            log: Rc::new(RefCell::new(Transcript::default())),
            rng: ChaCha20Rng::seed_from_u64(seed),
            session: seed,
            parties: Vec::new(),
        }
    }

    /// Session id given to parties added afterwards.
    pub fn session(mut self, session: u64) -> Self {
        self.session = session;
        self
    }

    pub fn set_session(&mut self, session: u64) {
        self.session = session;
    }

    pub fn hook(&mut self, hook: impl FnMut(&Envelope, PartyId) -> HookAction + 'static) {
        self.net.state.borrow_mut().hooks.push(Box::new(hook));
    }

    pub fn record_envelopes(&mut self) {
        self.net.state.borrow_mut().record = true;
    }

    pub fn ctx(&self, me: PartyId) -> PartyCtx {
        PartyCtx::new(me, self.session, self.net.clone(), self.log.clone())
    }

    pub fn add_party<F, Fut>(&mut self, me: PartyId, f: F)
    where
        F: FnOnce(PartyCtx) -> Fut,
        Fut: Future<Output = T> + 'a,
    {
        let fut = f(self.ctx(me));
        self.parties.push((me, Box::pin(fut)));
    }

    pub fn run(mut self) -> Result<SimReport<T>, NetError> {
        let mut cx = Context::from_waker(Waker::noop());
        let mut outputs: Vec<Option<T>> = self.parties.iter().map(|_| None).collect();
        let mut stalls = 0;
        loop {
            self.net.state.borrow_mut().activity = false;
            let mut order: Vec<usize> = (0..self.parties.len()).filter(|&i| outputs[i].is_none()).collect();
            if order.is_empty() {
                break;
            }
            order.shuffle(&mut self.rng);
            let mut progressed = false;
            for i in order {
                if let Poll::Ready(out) = self.parties[i].1.as_mut().poll(&mut cx) {
                    outputs[i] = Some(out);
                    progressed = true;
                }
            }
            progressed |= self.net.state.borrow().activity;
            let waiting = self.net.has_future_messages();
            self.net.state.borrow_mut().tick += 1;
            if progressed || waiting {
                stalls = 0;
                continue;
            }
            stalls += 1;
            if stalls > STALL_LIMIT {
                return Err(NetError::Deadlock);
            }
            // Nothing can move: every party still waiting times out.
            let mut st = self.net.state.borrow_mut();
            for (i, (p, _)) in self.parties.iter().enumerate() {
                if outputs[i].is_none() {
                    st.timed_out.insert(*p);
                }
            }
        }
        let ticks = self.net.state.borrow().tick;
        let delivered = std::mem::take(&mut self.net.state.borrow_mut().delivered);
        let transcript = self.log.borrow().clone();
        let outputs = self
            .parties
            .iter()
            .map(|(p, _)| *p)
            .zip(outputs.into_iter().map(|o| o.expect("finished")))
            .collect();
        Ok(SimReport { outputs, transcript, delivered, ticks })
    }
}
