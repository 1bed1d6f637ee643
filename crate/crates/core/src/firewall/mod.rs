//! Oblivious firewall: a blacklist Bloom filter secret-shared across `m`
//! servers. A gateway sends each server the packet's address; the servers
//! combine their shares at the `κ` indexed positions (sum or product) and
//! return one result share each, which only the gateway reconstructs.
//!
//! Shamir sharings here use polynomials of degree `reveal_size − 1`, so any
//! `reveal_size` result shares reconstruct.

mod analysis;
mod eval;

use std::io::{Read, Write};
use std::net::Ipv4Addr;
use std::sync::{Arc, Mutex, RwLock};

use hmac::{Hmac, Mac};
use serde::{Deserialize, Serialize};
use sha2::Sha256;
use thiserror::Error;

pub use analysis::{
    binomial, combinational_analysis, deduce_bits, influence_bound, majority_vote, reveal_combinations, Analysis,
    InfluenceBound, Observation, Reveal, MAX_DEDUCE_BITS,
};
pub use eval::{
    gateway_eval, serve, simulate_eval, Decision, EvalMode, EvalReport, EvalVerdict, ServeOptions, GATEWAY,
};

use crate::bloom::{BloomError, BloomFilter, BloomParams, HashFamily, Indexer};
use crate::field::{lagrange_zero_coefficients, Fe, Field, FieldError};
use crate::net::{PartyId, ProtocolError};
use crate::sharing::{additive_share, shamir_share, AdditiveParams, Randomness, ShamirParams, SharingError};

const SHARE_MAGIC: &[u8; 5] = b"OBFS1";

#[derive(Debug, Error)]
pub enum FirewallError {
    #[error("bad parameters: {0}")]
    BadParams(String),
    #[error("bad share file: {0}")]
    BadFormat(String),
    #[error("{0} is not available for this configuration")]
    Unsupported(String),
    #[error("admin message rejected: {0}")]
    AuthFail(String),
    #[error("update {seq} replayed (last applied {last})")]
    Replay { seq: u64, last: u64 },
    #[error("server {0} did not answer")]
    ServerTimeout(PartyId),
    #[error("reveals have no strict majority")]
    NoMajority,
    #[error("result shares cannot be decoded")]
    DecodeFail,
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Sharing(#[from] SharingError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Bloom(#[from] BloomError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// `m`-of-`m` additive shares.
    Additive,
    /// Any `reveal_size` shares reconstruct.
    Shamir { reveal_size: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FirewallConfig {
    pub scheme: Scheme,
    /// Number of servers, numbered `1..=m`.
    pub m: usize,
    /// Share field `ℤ_N`.
    pub field: Field,
    pub bloom: BloomParams,
}

impl FirewallConfig {
    pub fn new(scheme: Scheme, m: usize, field: Field, bloom: BloomParams) -> Result<Self, FirewallError> {
        let c = FirewallConfig { scheme, m, field, bloom };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), FirewallError> {
        let n = self.field.modulus();
        if n <= self.bloom.kappa as u128 {
            return Err(FirewallError::BadParams(format!("N = {n} must exceed κ = {}", self.bloom.kappa)));
        }
        if self.m < 2 || self.m >= PartyId::MAX as usize {
            return Err(FirewallError::BadParams(format!("m = {} servers outside 2..{}", self.m, PartyId::MAX)));
        }
        if let Scheme::Shamir { reveal_size } = self.scheme {
            if reveal_size == 0 || reveal_size > self.m {
                return Err(FirewallError::BadParams(format!("reveal size {reveal_size} outside 1..={}", self.m)));
            }
            if self.m as u128 >= n {
                return Err(FirewallError::BadParams(format!("m = {} needs N > m, got {n}", self.m)));
            }
        }
        Ok(())
    }

    /// Whether the servers can multiply: three additive servers, or Shamir
    /// with `m ≥ 2·reveal_size − 1`.
    pub fn supports_product(&self) -> bool {
        match self.scheme {
            Scheme::Additive => self.m == 3,
            Scheme::Shamir { reveal_size } => self.m + 1 >= 2 * reveal_size,
        }
    }

    pub fn shamir_params(&self) -> Option<ShamirParams> {
        match self.scheme {
            Scheme::Additive => None,
            Scheme::Shamir { reveal_size } => Some(ShamirParams { field: self.field, t: reveal_size - 1, n: self.m }),
        }
    }

    pub fn additive_params(&self) -> Option<AdditiveParams> {
        match self.scheme {
            Scheme::Additive => Some(AdditiveParams { field: self.field, m: self.m }),
            Scheme::Shamir { .. } => None,
        }
    }

    /// Fresh shares of `v`, entry `i` for server `i + 1`.
    pub fn share<R: Randomness + ?Sized>(&self, v: u128, rng: &mut R) -> Result<Vec<Fe>, FirewallError> {
        let secret = self.field.elem(v);
        Ok(match self.scheme {
            Scheme::Additive => additive_share(secret, self.additive_params().unwrap(), rng)?.into_iter().map(|s| s.value).collect(),
            Scheme::Shamir { .. } => shamir_share(secret, self.shamir_params().unwrap(), rng)?.into_iter().map(|s| s.value).collect(),
        })
    }

    /// Bytes per stored share.
    fn share_width(&self) -> usize {
        self.field.bits().div_ceil(8) as usize
    }
}

pub type SharedIndexer = Arc<dyn Indexer + Send + Sync>;

/// One server's shares of the filter.
#[derive(Clone)]
pub struct ServerShares {
    pub config: FirewallConfig,
    /// Server number in `1..=m`.
    pub index: usize,
    pub indexer: SharedIndexer,
    /// Hash key, when the indexer is a [`HashFamily`].
    pub key: Option<[u8; 16]>,
    pub shares: Vec<Fe>,
}

impl std::fmt::Debug for ServerShares {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ServerShares")
            .field("config", &self.config)
            .field("index", &self.index)
            .field("shares", &self.shares.len())
            .finish()
    }
}

pub fn addr_bytes(addr: Ipv4Addr) -> [u8; 4] {
    addr.octets()
}

impl ServerShares {
    pub fn party(&self) -> PartyId {
        self.index as PartyId
    }

    /// Distinct filter positions of `addr`, ascending.
    pub fn positions(&self, addr: Ipv4Addr) -> Vec<u64> {
        positions(&*self.indexer, &self.config, addr)
    }

    /// Replace the shares named by `delta`.
    pub fn apply(&mut self, delta: &UpdateDelta) -> Result<(), FirewallError> {
        if delta.index != self.index {
            return Err(FirewallError::BadParams(format!("update for server {} applied at {}", delta.index, self.index)));
        }
        if let Some((p, _)) = delta.positions.iter().find(|(p, _)| *p >= self.config.bloom.beta) {
            return Err(FirewallError::BadParams(format!("position {p} beyond β")));
        }
        for &(p, v) in &delta.positions {
            self.shares[p as usize] = self.config.field.elem(v);
        }
        Ok(())
    }

    /// Layout: `OBFS1`, β (u64), κ (u16), hash key (16 bytes), scheme tag
    /// (u8: 0 additive, 1 Shamir), reveal size (u16), m (u16), server index
    /// (u16), N (u128), η (u64), then β shares of `⌈log₂N / 8⌉` bytes each.
    /// Integers are little endian.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<(), FirewallError> {
        let key = self.key.ok_or_else(|| FirewallError::Unsupported("saving a filter without a hash key".into()))?;
        let c = &self.config;
        let (tag, reveal) = match c.scheme {
            Scheme::Additive => (0u8, 0u16),
            Scheme::Shamir { reveal_size } => (1, reveal_size as u16),
        };
        w.write_all(SHARE_MAGIC)?;
        w.write_all(&c.bloom.beta.to_le_bytes())?;
        w.write_all(&(c.bloom.kappa as u16).to_le_bytes())?;
        w.write_all(&key)?;
        w.write_all(&[tag])?;
        w.write_all(&reveal.to_le_bytes())?;
        w.write_all(&(c.m as u16).to_le_bytes())?;
        w.write_all(&(self.index as u16).to_le_bytes())?;
        w.write_all(&c.field.modulus().to_le_bytes())?;
        w.write_all(&c.bloom.eta.to_le_bytes())?;
        let width = c.share_width();
        let mut buf = Vec::with_capacity(width * self.shares.len());
        for s in &self.shares {
            buf.extend_from_slice(&s.value().to_le_bytes()[..width]);
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self, FirewallError> {
        fn take<const K: usize, R: Read>(r: &mut R) -> Result<[u8; K], FirewallError> {
            let mut b = [0u8; K];
            r.read_exact(&mut b).map_err(|e| FirewallError::BadFormat(format!("truncated header: {e}")))?;
            Ok(b)
        }
        if &take::<5, _>(&mut r)? != SHARE_MAGIC {
            return Err(FirewallError::BadFormat("wrong magic".into()));
        }
        let beta = u64::from_le_bytes(take(&mut r)?);
        let kappa = u16::from_le_bytes(take(&mut r)?) as u32;
        let key: [u8; 16] = take(&mut r)?;
        let [tag] = take::<1, _>(&mut r)?;
        let reveal = u16::from_le_bytes(take(&mut r)?) as usize;
        let m = u16::from_le_bytes(take(&mut r)?) as usize;
        let index = u16::from_le_bytes(take(&mut r)?) as usize;
        let n = u128::from_le_bytes(take(&mut r)?);
        let eta = u64::from_le_bytes(take(&mut r)?);
        let scheme = match tag {
            0 => Scheme::Additive,
            1 => Scheme::Shamir { reveal_size: reveal },
            t => return Err(FirewallError::BadFormat(format!("unknown scheme tag {t}"))),
        };
        let bad = |e: &dyn std::fmt::Display| FirewallError::BadFormat(e.to_string());
        let field = Field::new(n).map_err(|e| bad(&e))?;
        let bloom = BloomParams::new(beta, kappa, eta).map_err(|e| bad(&e))?;
        let config = FirewallConfig::new(scheme, m, field, bloom).map_err(|e| bad(&e))?;
        if index == 0 || index > m {
            return Err(FirewallError::BadFormat(format!("server index {index} outside 1..={m}")));
        }
        let mut body = Vec::new();
        r.read_to_end(&mut body)?;
        let width = config.share_width();
        if body.len() as u64 != beta * width as u64 {
            return Err(FirewallError::BadFormat(format!("{} share bytes for β = {beta}", body.len())));
        }
        let mut shares = Vec::with_capacity(beta as usize);
        for chunk in body.chunks_exact(width) {
            let mut b = [0u8; 16];
            b[..width].copy_from_slice(chunk);
            let v = u128::from_le_bytes(b);
            if v >= n {
                return Err(FirewallError::BadFormat(format!("share {v} not below N = {n}")));
            }
            shares.push(field.elem(v));
        }
        Ok(ServerShares { config, index, indexer: Arc::new(HashFamily::new(key, kappa)), key: Some(key), shares })
    }
}

/// Distinct positions of `addr` under `indexer`, ascending.
pub fn positions(indexer: &dyn Indexer, config: &FirewallConfig, addr: Ipv4Addr) -> Vec<u64> {
    let mut p = indexer.indices(&addr_bytes(addr), config.bloom.beta);
    p.sort_unstable();
    p.dedup();
    p
}

/// Build the filter from `blacklist` and share it. The caller keeps the
/// returned plaintext filter offline.
pub fn fw_init<R: Randomness + ?Sized>(
    config: &FirewallConfig,
    blacklist: &[Ipv4Addr],
    master: [u8; 16],
    rng: &mut R,
) -> Result<(BloomFilter, Vec<ServerShares>), FirewallError> {
    config.validate()?;
    let mut filter = BloomFilter::new(config.bloom, master);
    for a in blacklist {
        filter.insert(&addr_bytes(*a));
    }
    let shares = share_filter(config, &filter, Arc::new(filter.indexer().clone()), Some(master), rng)?;
    Ok((filter, shares))
}

/// Share an existing filter position by position.
pub fn share_filter<I: Indexer, R: Randomness + ?Sized>(
    config: &FirewallConfig,
    filter: &BloomFilter<I>,
    indexer: SharedIndexer,
    key: Option<[u8; 16]>,
    rng: &mut R,
) -> Result<Vec<ServerShares>, FirewallError> {
    config.validate()?;
    if filter.params().beta != config.bloom.beta || filter.params().kappa != config.bloom.kappa {
        return Err(FirewallError::BadParams("filter does not match the configured Bloom parameters".into()));
    }
    let mut per_server = vec![Vec::with_capacity(config.bloom.beta as usize); config.m];
    for bit in filter.bits() {
        for (j, s) in config.share(bit as u128, rng)?.into_iter().enumerate() {
            per_server[j].push(s);
        }
    }
    Ok(per_server
        .into_iter()
        .enumerate()
        .map(|(j, shares)| ServerShares { config: *config, index: j + 1, indexer: indexer.clone(), key, shares })
        .collect())
}

/// Reconstruct every position from server shares: all `m` for additive,
/// the first `reveal_size` given for Shamir.
pub fn reveal_filter(servers: &[ServerShares]) -> Result<Vec<u128>, FirewallError> {
    let first = servers.first().ok_or_else(|| FirewallError::BadParams("no shares".into()))?;
    let config = first.config;
    let used: Vec<&ServerShares> = match config.scheme {
        Scheme::Additive if servers.len() == config.m => servers.iter().collect(),
        Scheme::Shamir { reveal_size } if servers.len() >= reveal_size => servers[..reveal_size].iter().collect(),
        _ => return Err(FirewallError::BadParams(format!("{} server files cannot reveal", servers.len()))),
    };
    let weights = match config.scheme {
        Scheme::Additive => vec![config.field.one(); used.len()],
        Scheme::Shamir { .. } => {
            lagrange_zero_coefficients(&used.iter().map(|s| config.field.elem(s.index as u128)).collect::<Vec<_>>())?
        }
    };
    Ok((0..config.bloom.beta as usize)
        .map(|p| used.iter().zip(&weights).map(|(s, &w)| w * s.shares[p]).sum::<Fe>().value())
        .collect())
}

/// Replacement shares for one server.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UpdateDelta {
    /// Strictly increasing per server; older or repeated numbers are refused.
    pub seq: u64,
    pub addr: Ipv4Addr,
    pub index: usize,
    pub positions: Vec<(u64, u128)>,
}

/// Add `addr` to the shared filter: every one of its positions gets a fresh
/// sharing of 1. Entry `i` of the result goes to server `i + 1`.
pub fn fw_update<R: Randomness + ?Sized>(
    config: &FirewallConfig,
    indexer: &dyn Indexer,
    addr: Ipv4Addr,
    seq: u64,
    rng: &mut R,
) -> Result<Vec<UpdateDelta>, FirewallError> {
    let pos = positions(indexer, config, addr);
    let mut out: Vec<UpdateDelta> =
        (1..=config.m).map(|index| UpdateDelta { seq, addr, index, positions: Vec::new() }).collect();
    for p in pos {
        for (d, s) in out.iter_mut().zip(config.share(1, rng)?) {
            d.positions.push((p, s.value()));
        }
    }
    Ok(out)
}

type HmacSha256 = Hmac<Sha256>;

fn mac(psk: &[u8]) -> HmacSha256 {
    HmacSha256::new_from_slice(psk).expect("HMAC accepts any key length")
}

/// Two-line admin message:
///
/// ```text
/// UPDATE <seq> <server> <dotted-quad> <pos:share>,<pos:share>,...
/// HMAC <hex HMAC-SHA256 of the first line including its newline>
/// ```
pub fn encode_update(psk: &[u8], delta: &UpdateDelta) -> String {
    let body = delta.positions.iter().map(|(p, s)| format!("{p}:{s}")).collect::<Vec<_>>().join(",");
    let line = format!("UPDATE {} {} {} {}\n", delta.seq, delta.index, delta.addr, body);
    let mut m = mac(psk);
    m.update(line.as_bytes());
    format!("{line}HMAC {}\n", hex::encode(m.finalize().into_bytes()))
}

/// Authenticate and parse an admin message.
pub fn decode_update(psk: &[u8], text: &str) -> Result<UpdateDelta, FirewallError> {
    let auth = |s: &str| FirewallError::AuthFail(s.to_string());
    let split = text.find('\n').ok_or_else(|| auth("missing HMAC line"))? + 1;
    let (line, tail) = text.split_at(split);
    let tag = tail.trim_end().strip_prefix("HMAC ").ok_or_else(|| auth("missing HMAC line"))?;
    let tag = hex::decode(tag).map_err(|_| auth("HMAC is not hex"))?;
    let mut m = mac(psk);
    m.update(line.as_bytes());
    m.verify_slice(&tag).map_err(|_| auth("HMAC mismatch"))?;

    let bad = |s: &str| FirewallError::BadFormat(format!("update line: {s}"));
    let mut parts = line.trim_end().split(' ');
    if parts.next() != Some("UPDATE") {
        return Err(bad("expected UPDATE"));
    }
    let seq = parts.next().and_then(|s| s.parse().ok()).ok_or_else(|| bad("sequence number"))?;
    let index = parts.next().and_then(|s| s.parse().ok()).ok_or_else(|| bad("server index"))?;
    let addr = parts.next().and_then(|s| s.parse().ok()).ok_or_else(|| bad("address"))?;
    let body = parts.next().unwrap_or("");
    if parts.next().is_some() {
        return Err(bad("trailing fields"));
    }
    let positions = body
        .split(',')
        .filter(|s| !s.is_empty())
        .map(|kv| {
            let (p, s) = kv.split_once(':').ok_or_else(|| bad("position:share"))?;
            Ok((p.parse().map_err(|_| bad("position"))?, s.parse().map_err(|_| bad("share"))?))
        })
        .collect::<Result<_, FirewallError>>()?;
    Ok(UpdateDelta { seq, addr, index, positions })
}

/// A server's live shares. Evaluations take a snapshot; updates build a new
/// copy and swap it in, so in-flight evaluations never see a partial update.
pub struct ShareStore {
    current: RwLock<Arc<ServerShares>>,
    last_seq: Mutex<u64>,
}

impl ShareStore {
    pub fn new(shares: ServerShares) -> Self {
        ShareStore { current: RwLock::new(Arc::new(shares)), last_seq: Mutex::new(0) }
    }

    pub fn snapshot(&self) -> Arc<ServerShares> {
        self.current.read().unwrap().clone()
    }

    pub fn last_seq(&self) -> u64 {
        *self.last_seq.lock().unwrap()
    }

    pub fn apply(&self, delta: &UpdateDelta) -> Result<(), FirewallError> {
        let mut last = self.last_seq.lock().unwrap();
        if delta.seq <= *last {
            return Err(FirewallError::Replay { seq: delta.seq, last: *last });
        }
        if let Some((_, s)) = delta.positions.iter().find(|(_, s)| *s >= self.snapshot().config.field.modulus()) {
            return Err(FirewallError::BadParams(format!("share {s} not below N")));
        }
        let mut next = (*self.snapshot()).clone();
        next.apply(delta)?;
        *self.current.write().unwrap() = Arc::new(next);
        *last = delta.seq;
        Ok(())
    }

    /// Verify, parse and apply an admin message.
    pub fn apply_admin(&self, psk: &[u8], text: &str) -> Result<UpdateDelta, FirewallError> {
        let delta = decode_update(psk, text)?;
        self.apply(&delta)?;
        Ok(delta)
    }
}
