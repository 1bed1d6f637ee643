use std::io::{Read, Write};

use super::NetError;

pub type PartyId = u8;

/// Protocol registry.
pub mod proto {
    pub const SHAMIR_MULT: u8 = 1;
    pub const ADDITIVE_MULT3: u8 = 2;
    pub const DUAL_OUTPUT_CHECK: u8 = 3;
    pub const SC_SEMI_HONEST: u8 = 4;
    pub const SC_LOW_ROUNDS: u8 = 5;
    pub const SC_SHARED_INPUTS: u8 = 6;
    pub const SC_MALICIOUS: u8 = 7;
    pub const DUAL_EVAL: u8 = 8;
    pub const FW_EVAL_SUM: u8 = 9;
    pub const FW_EVAL_PRODUCT: u8 = 10;
    pub const FW_UPDATE: u8 = 11;
    pub const MAJORITY_VOTE: u8 = 12;
}

/// The `(protocol, step)` pair a message belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Tag {
    pub protocol: u8,
    pub step: u8,
}

impl Tag {
    pub const fn new(protocol: u8, step: u8) -> Self {
        Tag { protocol, step }
    }
}

pub const HEADER_LEN: usize = 15;
const RECORD_MAGIC: &[u8; 4] = b"OBNT";
/// Upper bound on a single payload; anything larger is treated as corrupt.
pub const MAX_PAYLOAD: u32 = 1 << 24;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Envelope {
    pub tag: Tag,
    pub session: u64,
    pub sender: PartyId,
    pub payload: Vec<u8>,
}

impl Envelope {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + self.payload.len());
        out.push(self.tag.protocol);
        out.push(self.tag.step);
        out.extend_from_slice(&self.session.to_le_bytes());
        out.push(self.sender);
        out.extend_from_slice(&(self.payload.len() as u32).to_le_bytes());
        out.extend_from_slice(&self.payload);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, NetError> {
        if bytes.len() < HEADER_LEN {
            return Err(NetError::FrameCorrupt("short header".into()));
        }
        let len = u32::from_le_bytes(bytes[11..15].try_into().unwrap()) as usize;
        if bytes.len() != HEADER_LEN + len {
            return Err(NetError::FrameCorrupt("payload length mismatch".into()));
        }
        Ok(Envelope {
            tag: Tag::new(bytes[0], bytes[1]),
            session: u64::from_le_bytes(bytes[2..10].try_into().unwrap()),
            sender: bytes[10],
            payload: bytes[HEADER_LEN..].to_vec(),
        })
    }

    /// Write one stream record: magic followed by the envelope.
    pub fn write_record<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        let mut rec = RECORD_MAGIC.to_vec();
        rec.extend(self.to_bytes());
        w.write_all(&rec)
    }

    /// Read one stream record. `Ok(None)` on clean end of stream.
    pub fn read_record<R: Read>(r: &mut R) -> Result<Option<Self>, NetError> {
        let mut magic = [0u8; 4];
        match r.read_exact(&mut magic) {
            Ok(()) => {}
            Err(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => return Ok(None),
            Err(e) => return Err(NetError::Io(e.to_string())),
        }
        if &magic != RECORD_MAGIC {
            return Err(NetError::FrameCorrupt("bad magic".into()));
        }
        let mut header = [0u8; HEADER_LEN];
        r.read_exact(&mut header)
            .map_err(|_| NetError::FrameCorrupt("truncated header".into()))?;
        let len = u32::from_le_bytes(header[11..15].try_into().unwrap());
        if len > MAX_PAYLOAD {
            return Err(NetError::FrameCorrupt(format!("payload length {len} too large")));
        }
        let mut payload = vec![0u8; len as usize];
        r.read_exact(&mut payload)
            .map_err(|_| NetError::FrameCorrupt("truncated payload".into()))?;
        Ok(Some(Envelope {
            tag: Tag::new(header[0], header[1]),
            session: u64::from_le_bytes(header[2..10].try_into().unwrap()),
            sender: header[10],
            payload,
        }))
    }
}
