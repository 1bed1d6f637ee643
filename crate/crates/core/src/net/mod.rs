//! Message transport, payload codec and transcript accounting.
//!
//! Protocol code is written once as `async` functions over a [`PartyCtx`]
//! and runs unchanged on the deterministic [`Simulation`] or on a
//! [`TcpMesh`].

mod codec;
mod ctx;
mod envelope;
mod sim;
mod tcp;
mod transcript;

use thiserror::Error;

pub use codec::{ceil_log2, decode_elements, encode_elements, CodecError, Group, GroupKind, Schema, Segment};
pub use ctx::{PartyCtx, RecvKey, Transport};
pub use envelope::{proto, Envelope, PartyId, Tag, HEADER_LEN, MAX_PAYLOAD};
pub use sim::{AdversaryHook, HookAction, SimNet, SimReport, Simulation};
pub use tcp::{block_on, run_tcp_party, Loopback, SessionAnnouncement, TcpMesh};
pub use transcript::{MessageRecord, PartyEvent, StepStats, Transcript};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NetError {
    #[error("cannot connect: {0}")]
    ConnectFail(String),
    #[error("corrupt frame: {0}")]
    FrameCorrupt(String),
    #[error("i/o: {0}")]
    Io(String),
    #[error("no route to party {0}")]
    UnknownPeer(PartyId),
    #[error("no party can make progress")]
    Deadlock,
}

/// Failure of an interactive protocol step, independent of which protocol.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProtocolError {
    #[error("party {party} timed out waiting for {tag:?} from party {from}")]
    PartyTimeout { party: PartyId, from: PartyId, tag: Tag },
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error(transparent)]
    Net(#[from] NetError),
}
