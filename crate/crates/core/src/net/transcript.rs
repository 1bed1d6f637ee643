use std::collections::BTreeMap;

use serde::Serialize;

use super::codec::{GroupKind, Segment};
use super::envelope::{PartyId, Tag};

/// One sent message as seen by the accounting.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MessageRecord {
    pub session: u64,
    pub protocol: u8,
    pub step: u8,
    pub from: PartyId,
    pub to: PartyId,
    /// Scheduler tick at send time (always 0 over TCP).
    pub phase: u64,
    pub accounting_bits: u64,
    pub raw_bits: u64,
    pub elements: BTreeMap<GroupKind, usize>,
}

impl MessageRecord {
    pub(crate) fn new(session: u64, tag: Tag, from: PartyId, to: PartyId, phase: u64, segments: &[Segment]) -> Self {
        let mut elements = BTreeMap::new();
        for s in segments {
            *elements.entry(s.group.kind).or_insert(0) += s.values.len();
        }
        MessageRecord {
            session,
            protocol: tag.protocol,
            step: tag.step,
            from,
            to,
            phase,
            accounting_bits: segments.iter().map(Segment::accounting_bits).sum(),
            raw_bits: segments.iter().map(Segment::raw_bits).sum(),
            elements,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PartyEvent {
    Send,
    Recv,
}

/// Aggregated counts for one `(session, protocol, step)`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct StepStats {
    pub messages: usize,
    pub accounting_bits: u64,
    pub raw_bits: u64,
    pub elements: BTreeMap<GroupKind, usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Transcript {
    pub messages: Vec<MessageRecord>,
    /// Each party's sends and receives in program order.
    pub events: BTreeMap<PartyId, Vec<PartyEvent>>,
}

impl Transcript {
    pub fn merge(&mut self, other: Transcript) {
        self.messages.extend(other.messages);
        for (p, ev) in other.events {
            self.events.entry(p).or_default().extend(ev);
        }
    }

    pub fn total_accounting_bits(&self) -> u64 {
        self.messages.iter().map(|m| m.accounting_bits).sum()
    }

    pub fn total_raw_bits(&self) -> u64 {
        self.messages.iter().map(|m| m.raw_bits).sum()
    }

    /// Accounting bits of every message carrying `tag`, across sessions.
    pub fn step_bits(&self, tag: Tag) -> u64 {
        self.messages
            .iter()
            .filter(|m| m.protocol == tag.protocol && m.step == tag.step)
            .map(|m| m.accounting_bits)
            .sum()
    }

    pub fn by_step(&self) -> BTreeMap<(u64, u8, u8), StepStats> {
        let mut out: BTreeMap<_, StepStats> = BTreeMap::new();
        for m in &self.messages {
            let s = out.entry((m.session, m.protocol, m.step)).or_default();
            s.messages += 1;
            s.accounting_bits += m.accounting_bits;
            s.raw_bits += m.raw_bits;
            for (k, n) in &m.elements {
                *s.elements.entry(*k).or_insert(0) += n;
            }
        }
        out
    }

    /// Send→receive cycles of one party. A cycle opens with the first send
    /// after a receive (or the first send overall) and closes on the next
    /// receive, so any amount of local work plus one batch of sends and one
    /// batch of receives counts as a single round.
    pub fn party_rounds(&self, party: PartyId) -> usize {
        let mut cycles = 0;
        let mut open = false;
        for ev in self.events.get(&party).into_iter().flatten() {
            match ev {
                PartyEvent::Send => {
                    if !open {
                        cycles += 1;
                        open = true;
                    }
                }
                PartyEvent::Recv => open = false,
            }
        }
        cycles
    }

    /// Rounds of the whole run: the largest per-party cycle count.
    pub fn rounds(&self) -> usize {
        self.events.keys().map(|&p| self.party_rounds(p)).max().unwrap_or(0)
    }

    pub fn to_json(&self) -> Vec<u8> {
        serde_json::to_vec_pretty(self).expect("transcript serializes")
    }
}
