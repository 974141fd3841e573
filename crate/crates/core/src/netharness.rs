//! In-memory three-party message bus.
//!
//! Public envelopes pass through an [`Adversary`] that may read, modify or inject them.
//! Authenticated envelopes carry a Toeplitz MAC over their header and payload; the
//! adversary may still try to modify them, and the receiver detects it with
//! probability at least `1 - ε_aut`. Every delivered envelope is appended to a
//! [`Transcript`] with a fixed binary encoding.

use std::collections::{HashMap, VecDeque};
use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::keymgr::{MacKey, Party};
use crate::otuh::{mac_tag, mac_verify, AuthParams};

const ENVELOPE_MAGIC: &[u8; 4] = b"QDSM";
const TRANSCRIPT_MAGIC: &[u8; 4] = b"QDST";
const VERSION: u8 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ChannelKind {
    Public,
    Authenticated,
}

impl ChannelKind {
    fn id(self) -> u8 {
        match self {
            ChannelKind::Public => 0,
            ChannelKind::Authenticated => 1,
        }
    }

    fn from_id(id: u8) -> Result<Self> {
        match id {
            0 => Ok(ChannelKind::Public),
            1 => Ok(ChannelKind::Authenticated),
            other => Err(Error::format(format!("unknown channel kind {other}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Envelope {
    pub from: Party,
    pub to: Party,
    pub kind: ChannelKind,
    pub seq: u64,
    pub payload: Vec<u8>,
    pub tag: Option<BitString>,
}

impl Envelope {
    /// Header and payload, i.e. everything the MAC covers.
    fn authenticated_part(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(20 + self.payload.len());
        self.encode_body(&mut out);
        out
    }

    fn encode_body(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(ENVELOPE_MAGIC);
        out.push(VERSION);
        out.push(self.from.id());
        out.push(self.to.id());
        out.push(self.kind.id());
        out.extend_from_slice(&self.seq.to_be_bytes());
        out.extend_from_slice(&(self.payload.len() as u32).to_be_bytes());
        out.extend_from_slice(&self.payload);
    }

    /// Wire form. The tag length field counts bits; the tag follows MSB-first,
    /// zero-padded to whole bytes.
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.encode_body(&mut out);
        match &self.tag {
            Some(tag) => {
                out.extend_from_slice(&(tag.len() as u16).to_be_bytes());
                out.extend_from_slice(tag.as_bytes());
            }
            None => out.extend_from_slice(&0u16.to_be_bytes()),
        }
        out
    }

    /// Decodes one envelope from the front of `bytes`; returns it and the bytes used.
    pub fn decode(bytes: &[u8]) -> Result<(Envelope, usize)> {
        let mut r = Cursor { buf: bytes, pos: 0 };
        if r.take(4)? != ENVELOPE_MAGIC {
            return Err(Error::format("bad envelope magic"));
        }
        if r.u8()? != VERSION {
            return Err(Error::format("unsupported envelope version"));
        }
        let from = Party::from_id(r.u8()?)?;
        let to = Party::from_id(r.u8()?)?;
        let kind = ChannelKind::from_id(r.u8()?)?;
        let seq = r.u64()?;
        let len = r.u32()? as usize;
        let payload = r.take(len)?.to_vec();
        let tag_bits = r.u16()? as usize;
        let tag = match tag_bits {
            0 => None,
            t => Some(BitString::from_bytes_with_len(r.take(t.div_ceil(8))?.to_vec(), t)?),
        };
        if (kind == ChannelKind::Authenticated) != tag.is_some() {
            return Err(Error::format("tag presence does not match channel kind"));
        }
        Ok((Envelope { from, to, kind, seq, payload, tag }, r.pos))
    }
}

/// Adversary with full control of the public channel and read access to everything.
/// Default hooks are passive.
pub trait Adversary {
    fn observe(&mut self, _env: &Envelope) {}

    fn tamper_public(&mut self, _env: &mut Envelope) {}

    /// Extra envelopes to deliver after `sent`.
    fn inject_public(&mut self, _sent: &Envelope) -> Vec<Envelope> {
        Vec::new()
    }

    /// Modification attempt on an authenticated envelope. Must be detected by the receiver.
    fn tamper_authenticated(&mut self, _env: &mut Envelope) {}
}

/// Adversary that does nothing.
#[derive(Debug, Default)]
pub struct Passive;

impl Adversary for Passive {}

/// Delivered envelopes plus a run header.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Transcript {
    pub run_id: u64,
    pub seed: u64,
    pub n: u16,
    /// Seconds since the Unix epoch, or 0 for seeded runs so that they are reproducible.
    pub timestamp: u64,
    pub envelopes: Vec<Envelope>,
}

impl Transcript {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(TRANSCRIPT_MAGIC);
        out.push(VERSION);
        out.extend_from_slice(&self.run_id.to_be_bytes());
        out.extend_from_slice(&self.seed.to_be_bytes());
        out.extend_from_slice(&self.n.to_be_bytes());
        out.extend_from_slice(&self.timestamp.to_be_bytes());
        for e in &self.envelopes {
            out.extend_from_slice(&e.encode());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Cursor { buf: bytes, pos: 0 };
        if r.take(4)? != TRANSCRIPT_MAGIC {
            return Err(Error::format("not a transcript"));
        }
        if r.u8()? != VERSION {
            return Err(Error::format("unsupported transcript version"));
        }
        let mut t = Transcript { run_id: r.u64()?, seed: r.u64()?, n: r.u16()?, timestamp: r.u64()?, envelopes: vec![] };
        let mut pos = r.pos;
        while pos < bytes.len() {
            let (env, used) = Envelope::decode(&bytes[pos..])?;
            t.envelopes.push(env);
            pos += used;
        }
        Ok(t)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Transcript::from_bytes(&fs::read(path)?)
    }

    /// SHA-256 of the encoded transcript, as hex.
    pub fn sha256_hex(&self) -> String {
        Sha256::digest(self.to_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn public_payloads(&self) -> impl Iterator<Item = &[u8]> {
        self.envelopes.iter().filter(|e| e.kind == ChannelKind::Public).map(|e| e.payload.as_slice())
    }
}

/// True if `needle` occurs in `haystack` starting at any bit offset.
pub fn contains_bits(haystack: &[u8], needle: &BitString) -> bool {
    let total = haystack.len() * 8;
    if needle.is_empty() || needle.len() > total {
        return needle.is_empty();
    }
    let hay = BitString::from_bytes(haystack);
    (0..=total - needle.len()).any(|start| (0..needle.len()).all(|i| hay.get(start + i) == needle.get(i)))
}

/// Ordered per-pair queues with an adversary on the wire.
pub struct Bus<'a> {
    queues: HashMap<(Party, Party), VecDeque<Envelope>>,
    next_seq: u64,
    adversary: Box<dyn Adversary + 'a>,
    transcript: Transcript,
}

impl<'a> Bus<'a> {
    pub fn new(adversary: Box<dyn Adversary + 'a>) -> Self {
        Bus { queues: HashMap::new(), next_seq: 0, adversary, transcript: Transcript::default() }
    }

    pub fn passive() -> Bus<'static> {
        Bus::new(Box::new(Passive))
    }

    pub fn with_header(mut self, run_id: u64, seed: u64, n: u16, timestamp: u64) -> Self {
        self.transcript.run_id = run_id;
        self.transcript.seed = seed;
        self.transcript.n = n;
        self.transcript.timestamp = timestamp;
        self
    }

    fn enqueue(&mut self, env: Envelope) {
        self.transcript.envelopes.push(env.clone());
        self.queues.entry((env.from, env.to)).or_default().push_back(env);
    }

    fn seq(&mut self) -> u64 {
        let s = self.next_seq;
        self.next_seq += 1;
        s
    }

    /// Sends over the public channel. Returns the sequence number assigned.
    pub fn send_public(&mut self, from: Party, to: Party, payload: Vec<u8>) -> u64 {
        let seq = self.seq();
        let mut env = Envelope { from, to, kind: ChannelKind::Public, seq, payload, tag: None };
        self.adversary.observe(&env);
        self.adversary.tamper_public(&mut env);
        let injected = self.adversary.inject_public(&env);
        self.enqueue(env);
        for mut extra in injected {
            extra.kind = ChannelKind::Public;
            extra.tag = None;
            self.enqueue(extra);
        }
        seq
    }

    /// Tags `payload` with `params` and a fresh pad from `key`, then sends it.
    pub fn send_authenticated(
        &mut self,
        from: Party,
        to: Party,
        payload: Vec<u8>,
        params: &AuthParams,
        key: MacKey,
    ) -> Result<u64> {
        let seq = self.seq();
        let mut env = Envelope { from, to, kind: ChannelKind::Authenticated, seq, payload, tag: None };
        let params = effective_params(params, key.init)?;
        let msg = BitString::from_bytes(&env.authenticated_part());
        env.tag = Some(mac_tag(&msg, &params, key.pad)?);
        self.adversary.observe(&env);
        self.adversary.tamper_authenticated(&mut env);
        self.enqueue(env);
        Ok(seq)
    }

    /// Next public envelope from `from` to `to`.
    pub fn receive(&mut self, to: Party, from: Party) -> Option<Envelope> {
        self.queues.get_mut(&(from, to))?.pop_front()
    }

    /// Next envelope from `from` to `to`, which must be authenticated and carry a valid
    /// tag. A missing, public or mis-tagged envelope is an authentication failure.
    pub fn receive_authenticated(&mut self, to: Party, from: Party, params: &AuthParams, key: MacKey) -> Result<Vec<u8>> {
        let env = self
            .receive(to, from)
            .ok_or_else(|| Error::AuthenticationFailed(format!("no message from {from} to {to}")))?;
        let tag = match (&env.kind, &env.tag) {
            (ChannelKind::Authenticated, Some(tag)) => tag,
            _ => return Err(Error::AuthenticationFailed("expected an authenticated envelope".into())),
        };
        let params = effective_params(params, key.init)?;
        if tag.len() != params.n() {
            return Err(Error::AuthenticationFailed("tag length mismatch".into()));
        }
        let msg = BitString::from_bytes(&env.authenticated_part());
        if !mac_verify(&msg, tag, &params, key.pad)? || env.from != from || env.to != to {
            return Err(Error::AuthenticationFailed(format!("tag check failed on message {}", env.seq)));
        }
        Ok(env.payload)
    }

    pub fn transcript(&self) -> &Transcript {
        &self.transcript
    }

    pub fn into_transcript(self) -> Transcript {
        self.transcript
    }
}

fn effective_params(params: &AuthParams, init: Option<BitString>) -> Result<AuthParams> {
    match init {
        Some(s) => AuthParams::new(params.poly().clone(), s),
        None => Ok(params.clone()),
    }
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, k: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(k).filter(|&e| e <= self.buf.len()).ok_or_else(|| Error::format("truncated message"))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_be_bytes(self.take(2)?.try_into().unwrap()))
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_be_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_be_bytes(self.take(8)?.try_into().unwrap()))
    }
}
