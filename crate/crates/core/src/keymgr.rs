//! Correlated key pre-distribution and per-party key pools.
//!
//! After pre-distribution Alice, Bob and Charlie hold streams with
//! `S_a = S_b ⊕ S_c` at every offset. A [`KeyPool`] hands out bits strictly in
//! order and records every draw in a ledger, so no bit is ever released twice.
//! A pool may be backed by a file, in which case the ledger is written before any
//! bits are returned.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::gf2::sample_irreducible;
use crate::otuh::{AuthParams, OneTimeKey};
use crate::rng::QdsRng;

const MAGIC: &[u8; 4] = b"QDSK";
const VERSION: u8 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Party {
    Alice,
    Bob,
    Charlie,
    /// Pairwise pool shared by Bob and Charlie for message authentication.
    BobCharlieLink,
    AliceBobLink,
    AliceCharlieLink,
}

impl Party {
    pub fn id(self) -> u8 {
        match self {
            Party::Alice => 0,
            Party::Bob => 1,
            Party::Charlie => 2,
            Party::BobCharlieLink => 3,
            Party::AliceBobLink => 4,
            Party::AliceCharlieLink => 5,
        }
    }

    pub fn from_id(id: u8) -> Result<Party> {
        Ok(match id {
            0 => Party::Alice,
            1 => Party::Bob,
            2 => Party::Charlie,
            3 => Party::BobCharlieLink,
            4 => Party::AliceBobLink,
            5 => Party::AliceCharlieLink,
            other => return Err(Error::format(format!("unknown party id {other}"))),
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Party::Alice => "alice",
            Party::Bob => "bob",
            Party::Charlie => "charlie",
            Party::BobCharlieLink => "bob-charlie",
            Party::AliceBobLink => "alice-bob",
            Party::AliceCharlieLink => "alice-charlie",
        }
    }
}

impl fmt::Display for Party {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Purpose {
    Signature,
    Mac,
    MacParams,
    Otp,
    Conference,
    /// Bits passed over to realign with a counterpart's offset. Never released.
    Skip,
    SecretShare,
}

impl Purpose {
    pub fn id(self) -> u8 {
        match self {
            Purpose::Signature => 0,
            Purpose::Mac => 1,
            Purpose::MacParams => 2,
            Purpose::Otp => 3,
            Purpose::Conference => 4,
            Purpose::Skip => 5,
            Purpose::SecretShare => 6,
        }
    }

    pub fn from_id(id: u8) -> Result<Purpose> {
        Ok(match id {
            0 => Purpose::Signature,
            1 => Purpose::Mac,
            2 => Purpose::MacParams,
            3 => Purpose::Otp,
            4 => Purpose::Conference,
            5 => Purpose::Skip,
            6 => Purpose::SecretShare,
            other => return Err(Error::format(format!("unknown ledger purpose {other}"))),
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Purpose::Signature => "signature",
            Purpose::Mac => "mac",
            Purpose::MacParams => "mac-params",
            Purpose::Otp => "otp",
            Purpose::Conference => "conference",
            Purpose::Skip => "skip",
            Purpose::SecretShare => "secret-share",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LedgerEntry {
    pub purpose: Purpose,
    pub offset: u64,
    pub len: u32,
}

/// Role tag carried by a [`KeyBundle`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Signer,
    Receiver,
    Verifier,
}

impl Role {
    pub fn for_party(party: Party) -> Role {
        match party {
            Party::Alice => Role::Signer,
            Party::Bob => Role::Receiver,
            _ => Role::Verifier,
        }
    }
}

/// `X` (n bits) and `Y` (2n bits) for one signature. Not `Clone`; signing consumes it.
pub struct KeyBundle {
    x: BitString,
    y: BitString,
    role: Role,
    offset: u64,
}

impl KeyBundle {
    pub fn from_parts(x: BitString, y: BitString, role: Role, offset: u64) -> Result<Self> {
        if y.len() != 2 * x.len() || x.is_empty() {
            return Err(Error::arg(format!("bundle sizes {} and {} are not n and 2n", x.len(), y.len())));
        }
        Ok(KeyBundle { x, y, role, offset })
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }

    pub fn x(&self) -> &BitString {
        &self.x
    }

    pub fn y(&self) -> &BitString {
        &self.y
    }

    pub fn role(&self) -> Role {
        self.role
    }

    /// Pool offset at which `X` starts.
    pub fn offset(&self) -> u64 {
        self.offset
    }

    pub fn into_parts(self) -> (BitString, BitString) {
        (self.x, self.y)
    }
}

impl fmt::Debug for KeyBundle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "KeyBundle({:?}, n = {}, offset = {})", self.role, self.n(), self.offset)
    }
}

/// Ordered stream of key bits with a consumption ledger.
pub struct KeyPool {
    party: Party,
    n: u16,
    stream: BitString,
    consumed: u64,
    ledger: Vec<LedgerEntry>,
    backing: Option<PathBuf>,
}

impl fmt::Debug for KeyPool {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("KeyPool")
            .field("party", &self.party)
            .field("n", &self.n)
            .field("len", &self.stream.len())
            .field("consumed", &self.consumed)
            .field("entries", &self.ledger.len())
            .finish()
    }
}

impl KeyPool {
    pub fn new(party: Party, n: usize, stream: BitString) -> Result<Self> {
        let n = u16::try_from(n).ok().filter(|&n| n >= 2).ok_or_else(|| Error::arg("hash length must be in 2..=65535"))?;
        Ok(KeyPool { party, n, stream, consumed: 0, ledger: Vec::new(), backing: None })
    }

    pub fn party(&self) -> Party {
        self.party
    }

    pub fn n(&self) -> usize {
        self.n as usize
    }

    pub fn len(&self) -> u64 {
        self.stream.len() as u64
    }

    pub fn is_empty(&self) -> bool {
        self.stream.is_empty()
    }

    pub fn consumed(&self) -> u64 {
        self.consumed
    }

    pub fn remaining(&self) -> u64 {
        self.len() - self.consumed
    }

    pub fn ledger(&self) -> &[LedgerEntry] {
        &self.ledger
    }

    pub fn backing(&self) -> Option<&Path> {
        self.backing.as_deref()
    }

    /// Bits consumed for `purpose`, summed over the ledger.
    pub fn total_for(&self, purpose: Purpose) -> u64 {
        self.ledger.iter().filter(|e| e.purpose == purpose).map(|e| e.len as u64).sum()
    }

    /// Full stream, consumed bits included. For test harnesses checking correlation.
    pub fn raw_stream(&self) -> &BitString {
        &self.stream
    }

    /// Releases the next `len` bits. On failure the pool is unchanged.
    pub fn draw(&mut self, purpose: Purpose, len: usize) -> Result<BitString> {
        if purpose == Purpose::Skip {
            return Err(Error::arg("skip is not a drawable purpose"));
        }
        let bits = self.stream_slice(self.consumed, len)?;
        self.commit(purpose, len)?;
        Ok(bits)
    }

    /// Advances to `offset` without releasing the skipped bits. Moving backwards is key reuse.
    pub fn skip_to(&mut self, offset: u64) -> Result<()> {
        if offset < self.consumed {
            return Err(Error::KeyReuse { offset, consumed: self.consumed });
        }
        if offset > self.len() {
            return Err(Error::InsufficientKey { needed: offset, available: self.len() });
        }
        if offset > self.consumed {
            let gap = offset - self.consumed;
            let len = u32::try_from(gap).map_err(|_| Error::arg("skip too large"))?;
            self.commit(Purpose::Skip, len as usize)?;
        }
        Ok(())
    }

    fn stream_slice(&self, start: u64, len: usize) -> Result<BitString> {
        if len as u64 > self.len() - start {
            return Err(Error::InsufficientKey { needed: len as u64, available: self.len() - start });
        }
        self.stream.slice(start as usize, len)
    }

    fn commit(&mut self, purpose: Purpose, len: usize) -> Result<()> {
        let len32 = u32::try_from(len).map_err(|_| Error::arg("draw too large for one ledger entry"))?;
        self.ledger.push(LedgerEntry { purpose, offset: self.consumed, len: len32 });
        self.consumed += len as u64;
        if let Some(path) = self.backing.clone() {
            if let Err(e) = self.write_file(&path) {
                self.ledger.pop();
                self.consumed -= len as u64;
                return Err(e);
            }
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        if !self.stream.len().is_multiple_of(8) {
            return Err(Error::format("only byte-aligned pools can be serialized"));
        }
        let mut out = Vec::with_capacity(20 + 13 * self.ledger.len() + self.stream.len() / 8);
        out.extend_from_slice(MAGIC);
        out.push(VERSION);
        out.push(self.party.id());
        out.extend_from_slice(&self.n.to_be_bytes());
        out.extend_from_slice(&self.consumed.to_be_bytes());
        out.extend_from_slice(&(self.ledger.len() as u32).to_be_bytes());
        for e in &self.ledger {
            out.push(e.purpose.id());
            out.extend_from_slice(&e.offset.to_be_bytes());
            out.extend_from_slice(&e.len.to_be_bytes());
        }
        out.extend_from_slice(self.stream.as_bytes());
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { buf: bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(Error::format("not a key pool file"));
        }
        let version = r.u8()?;
        if version != VERSION {
            return Err(Error::format(format!("unsupported key pool version {version}")));
        }
        let party = Party::from_id(r.u8()?)?;
        let n = r.u16()?;
        let consumed = r.u64()?;
        let count = r.u32()? as usize;
        let mut ledger = Vec::with_capacity(count.min(1 << 16));
        let mut expected = 0u64;
        for _ in 0..count {
            let entry = LedgerEntry { purpose: Purpose::from_id(r.u8()?)?, offset: r.u64()?, len: r.u32()? };
            if entry.offset != expected {
                return Err(Error::format("ledger entries are not contiguous"));
            }
            expected += entry.len as u64;
            ledger.push(entry);
        }
        if expected != consumed {
            return Err(Error::format("ledger total does not match consumed offset"));
        }
        let stream = BitString::from_bytes(r.rest());
        if consumed > stream.len() as u64 {
            return Err(Error::format("consumed offset beyond end of pool"));
        }
        Ok(KeyPool { party, n, stream, consumed, ledger, backing: None })
    }

    /// Writes the pool to `path` atomically and keeps it as the backing file for later draws.
    pub fn save(&mut self, path: &Path) -> Result<()> {
        self.write_file(path)?;
        self.backing = Some(path.to_path_buf());
        Ok(())
    }

    /// Loads a pool whose later draws are persisted back to `path`.
    pub fn open(path: &Path) -> Result<Self> {
        let mut pool = KeyPool::from_bytes(&fs::read(path)?)?;
        pool.backing = Some(path.to_path_buf());
        Ok(pool)
    }

    fn write_file(&self, path: &Path) -> Result<()> {
        let bytes = self.to_bytes()?;
        let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
        let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
        tmp.write_all(&bytes)?;
        tmp.as_file().sync_all()?;
        tmp.persist(path).map_err(|e| Error::Io(e.error))?;
        Ok(())
    }

    /// Fixed authentication hash for a pairwise link pool, derived deterministically from
    /// the first unconsumed bits: `n` bits of initial vector, then `n - 1`-bit candidates
    /// until one is irreducible. Both ends of the link obtain the same parameters.
    pub fn establish_mac_params(&mut self) -> Result<AuthParams> {
        if self.ledger.iter().any(|e| e.purpose == Purpose::MacParams) {
            return self.mac_params();
        }
        let n = self.n();
        let start = self.consumed;
        let tail = self.stream_slice(start, self.remaining() as usize)?;
        let mut tape = QdsRng::tape(tail);
        let init = tape.next_bits(n).map_err(|_| self.exhausted(n as u64))?;
        let (poly, trials) = sample_irreducible(n, &mut tape).map_err(|_| self.exhausted(self.remaining()))?;
        let used = n + trials as usize * (n - 1);
        self.commit(Purpose::MacParams, used)?;
        AuthParams::new(poly, init)
    }

    /// Re-derives the parameters recorded by [`establish_mac_params`](Self::establish_mac_params).
    pub fn mac_params(&self) -> Result<AuthParams> {
        let entry = self
            .ledger
            .iter()
            .find(|e| e.purpose == Purpose::MacParams)
            .ok_or_else(|| Error::arg("MAC parameters have not been established on this pool"))?;
        let region = self.stream_slice(entry.offset, entry.len as usize)?;
        let n = self.n();
        let mut tape = QdsRng::tape(region);
        let init = tape.next_bits(n)?;
        let (poly, _) = sample_irreducible(n, &mut tape)?;
        AuthParams::new(poly, init)
    }

    fn exhausted(&self, needed: u64) -> Error {
        Error::InsufficientKey { needed, available: self.remaining() }
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, k: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(k).filter(|&e| e <= self.buf.len()).ok_or_else(|| Error::format("truncated key pool file"))?;
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
    fn rest(&mut self) -> &'a [u8] {
        let s = &self.buf[self.pos..];
        self.pos = self.buf.len();
        s
    }
}

/// Pools for Alice, Bob and Charlie.
#[derive(Debug)]
pub struct Predistribution {
    pub alice: KeyPool,
    pub bob: KeyPool,
    pub charlie: KeyPool,
}

/// QKD route: Bob shares `S_ba` with Alice, Charlie shares `S_ca`; Alice keeps
/// `S_ba ⊕ S_ca`.
pub fn predistribute_via_qkd(link_ab: &BitString, link_ac: &BitString, n: usize) -> Result<Predistribution> {
    if link_ab.len() != link_ac.len() {
        return Err(Error::arg(format!("link lengths differ: {} vs {}", link_ab.len(), link_ac.len())));
    }
    Ok(Predistribution {
        alice: KeyPool::new(Party::Alice, n, link_ab.xor(link_ac)?)?,
        bob: KeyPool::new(Party::Bob, n, link_ab.clone())?,
        charlie: KeyPool::new(Party::Charlie, n, link_ac.clone())?,
    })
}

/// QSS route: the dealer's and Bob's streams are given; Charlie's is `S_a ⊕ S_b`.
pub fn predistribute_via_qss(dealer: &BitString, player_b: &BitString, n: usize) -> Result<Predistribution> {
    if dealer.len() != player_b.len() {
        return Err(Error::arg(format!("stream lengths differ: {} vs {}", dealer.len(), player_b.len())));
    }
    Ok(Predistribution {
        alice: KeyPool::new(Party::Alice, n, dealer.clone())?,
        bob: KeyPool::new(Party::Bob, n, player_b.clone())?,
        charlie: KeyPool::new(Party::Charlie, n, dealer.xor(player_b)?)?,
    })
}

/// Simulated pre-distribution: both link streams drawn from `rng`.
pub fn simulate_predistribution(bits: usize, n: usize, rng: &mut QdsRng) -> Result<Predistribution> {
    let ab = rng.next_bits(bits)?;
    let ac = rng.next_bits(bits)?;
    predistribute_via_qkd(&ab, &ac, n)
}

/// Two identical copies of a pairwise key stream, one per endpoint.
pub fn link_pools(party: Party, stream: &BitString, n: usize) -> Result<(KeyPool, KeyPool)> {
    Ok((KeyPool::new(party, n, stream.clone())?, KeyPool::new(party, n, stream.clone())?))
}

/// Draws `X` then `Y`: `3n` bits recorded as one signature entry.
pub fn draw_signing_keys(pool: &mut KeyPool) -> Result<KeyBundle> {
    let n = pool.n();
    let offset = pool.consumed();
    let bits = pool.draw(Purpose::Signature, 3 * n)?;
    KeyBundle::from_parts(bits.slice(0, n)?, bits.slice(n, 2 * n)?, Role::for_party(pool.party()), offset)
}

/// Key bits consumed per authenticated message.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MacKeyMode {
    /// `n` bits: the tag pad. `(p, s)` stay fixed.
    #[default]
    Pad,
    /// `2n` bits: the tag pad plus a fresh initial vector per message.
    PadAndInit,
}

impl MacKeyMode {
    pub fn bits_per_message(self, n: usize) -> usize {
        match self {
            MacKeyMode::Pad => n,
            MacKeyMode::PadAndInit => 2 * n,
        }
    }
}

/// Material for one authenticated message.
#[derive(Debug)]
pub struct MacKey {
    pub pad: OneTimeKey,
    /// Replacement initial vector in [`MacKeyMode::PadAndInit`].
    pub init: Option<BitString>,
}

pub fn draw_mac_key(pool: &mut KeyPool, mode: MacKeyMode) -> Result<MacKey> {
    let n = pool.n();
    let bits = pool.draw(Purpose::Mac, mode.bits_per_message(n))?;
    let pad = OneTimeKey::new(bits.slice(0, n)?);
    let init = match mode {
        MacKeyMode::Pad => None,
        MacKeyMode::PadAndInit => Some(bits.slice(n, n)?),
    };
    Ok(MacKey { pad, init })
}
